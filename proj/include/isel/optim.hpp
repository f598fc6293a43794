#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "isel/tensor.hpp"

namespace isel {

struct AdamConfig {
    double lr = 5e-3;
    double weight_decay = 5e-4;  // added to the raw gradient before the moments
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One first/second moment pair per parameter tensor, bias-corrected update.
class Adam {
public:
    Adam(const std::vector<size_t>& sizes, AdamConfig cfg) : cfg_(cfg) {
        for (size_t s : sizes) {
            m_.emplace_back(s, 0.0);
            v_.emplace_back(s, 0.0);
        }
    }

    // lr_now overrides cfg.lr (scheduler-controlled); params[i] and grads[i]
    // must keep a stable order across steps.
    void step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
              double lr_now) {
        ++t_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
        for (size_t p = 0; p < params.size(); ++p) {
            auto& w = params[p]->v;
            const auto& g = grads[p]->v;
            auto& m = m_[p];
            auto& v = v_[p];
            for (size_t i = 0; i < w.size(); ++i) {
                double gi = g[i] + cfg_.weight_decay * w[i];
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
                double mhat = m[i] / bc1;
                double vhat = v[i] / bc2;
                w[i] -= lr_now * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    int64_t steps_taken() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    int64_t t_ = 0;
};

// Reduce-on-plateau: improvement means a strict decrease of at least
// `threshold`; after more than `patience` consecutive non-improving steps the
// rate is multiplied by `factor` (floored at min_lr) and the wait resets.
class PlateauScheduler {
public:
    PlateauScheduler(double lr0, double factor = 0.75, int patience = 25,
                     double min_lr = 1e-5, double threshold = 1e-8)
        : lr_(lr0), factor_(factor), patience_(patience), min_lr_(min_lr),
          threshold_(threshold) {}

    // Returns true when this step reduced the rate.
    bool step(double metric) {
        if (metric <= best_ - threshold_) {
            best_ = metric;
            wait_ = 0;
            return false;
        }
        ++wait_;
        if (wait_ > patience_) {
            lr_ = std::max(lr_ * factor_, min_lr_);
            wait_ = 0;
            return true;
        }
        return false;
    }

    double lr() const { return lr_; }
    int wait() const { return wait_; }
    double best() const { return best_; }

private:
    double lr_, factor_;
    int patience_;
    double min_lr_, threshold_;
    double best_ = std::numeric_limits<double>::infinity();
    int wait_ = 0;
};

}  // namespace isel
