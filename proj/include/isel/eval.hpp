#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isel/dataset.hpp"
#include "isel/tensor.hpp"

namespace isel {

struct Metrics {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

// Macro averages run over the classes that appear in y_true; empty ratios
// (0/0) count as 0 for the affected class.
Metrics classification_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                               int classes);

// Effectiveness couples downstream quality with the achieved reduction.
inline double effectiveness(double accuracy, double reduction) { return accuracy * reduction; }
inline double effectiveness_f1(double macro_f1, double reduction) { return macro_f1 * reduction; }

struct LogRegConfig {
    double lr = 0.5;
    int epochs = 300;
    double l2 = 1e-4;  // weights only, bias excluded
};

// Multinomial regression, zero-initialized, full-batch gradient descent.
struct LogRegModel {
    Tensor W;  // [classes, d]
    Tensor b;  // [1, classes]
};

LogRegModel train_logreg(const double* X, const std::vector<int>& y,
                         const std::vector<int>& rows, int d, int classes, LogRegConfig cfg);
std::vector<int> predict_logreg(const LogRegModel& m, const double* X,
                                const std::vector<int>& rows, int d);

// Majority vote over the k nearest train rows by Euclidean distance; distance
// ties prefer the smaller train position, vote ties the smaller class id.
std::vector<int> predict_knn(const double* X, int d, const std::vector<int>& train_rows,
                             const std::vector<int>& y, const std::vector<int>& query_rows,
                             int k);

}  // namespace isel
