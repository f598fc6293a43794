#include "isel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace isel {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* p = s.c_str();
    char* end = nullptr;
    out = std::strtod(p, &end);
    return end == p + s.size();
}

}  // namespace

RawTable load_csv(const std::string& path, const std::string& target) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open csv: " + path);
    RawTable t;
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty csv: " + path);
    t.column_names = split_line(line);
    if (t.column_names.empty()) throw DataError("csv has no header columns: " + path);
    for (size_t i = 0; i < t.column_names.size(); ++i)
        if (t.column_names[i] == target) t.target_col = int(i);
    if (t.target_col < 0)
        throw DataError("target column '" + target + "' not found in " + path);
    size_t rowno = 0;
    while (std::getline(f, line)) {
        ++rowno;
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != t.column_names.size())
            throw DataError(path + ": row " + std::to_string(rowno) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(t.column_names.size()));
        for (size_t c = 0; c < cells.size(); ++c)
            if (cells[c].empty())
                throw DataError(path + ": row " + std::to_string(rowno) +
                                " column '" + t.column_names[c] + "' is missing a value");
        t.rows.push_back(std::move(cells));
    }
    if (t.rows.empty()) throw DataError("csv has no data rows: " + path);
    return t;
}

Dataset preprocess(const RawTable& raw) {
    Dataset ds;
    ds.n = int(raw.rows.size());
    ds.d = int(raw.column_names.size()) - 1;
    ds.target_name = raw.column_names[size_t(raw.target_col)];

    // labels, first-appearance order
    std::map<std::string, int> label_codes;
    for (const auto& row : raw.rows) {
        const std::string& cell = row[size_t(raw.target_col)];
        auto it = label_codes.find(cell);
        int code;
        if (it == label_codes.end()) {
            code = int(ds.class_names.size());
            label_codes.emplace(cell, code);
            ds.class_names.push_back(cell);
        } else {
            code = it->second;
        }
        ds.y.push_back(code);
    }
    ds.classes = int(ds.class_names.size());

    ds.X.assign(size_t(ds.n) * ds.d, 0.0);
    int fcol = 0;
    for (int c = 0; c < int(raw.column_names.size()); ++c) {
        if (c == raw.target_col) continue;
        const std::string& name = raw.column_names[size_t(c)];
        ds.feature_names.push_back(name);

        int parseable = 0;
        int first_bad = -1;
        std::vector<double> vals(size_t(ds.n));
        for (int r = 0; r < ds.n; ++r) {
            if (parse_double(raw.rows[size_t(r)][size_t(c)], vals[size_t(r)]))
                ++parseable;
            else if (first_bad < 0)
                first_bad = r;
        }
        if (parseable == ds.n) {
            for (int r = 0; r < ds.n; ++r)
                if (!std::isfinite(vals[size_t(r)]))
                    throw DataError("column '" + name + "' row " + std::to_string(r + 1) +
                                    " is not finite");
            ds.feature_kinds.push_back(FeatureKind::numeric);
        } else if (parseable == 0) {
            // categorical: first-appearance integer codes
            std::map<std::string, int> codes;
            for (int r = 0; r < ds.n; ++r) {
                const std::string& cell = raw.rows[size_t(r)][size_t(c)];
                auto it = codes.find(cell);
                if (it == codes.end()) it = codes.emplace(cell, int(codes.size())).first;
                vals[size_t(r)] = it->second;
            }
            ds.feature_kinds.push_back(FeatureKind::categorical);
        } else {
            throw DataError("column '" + name + "' mixes numeric and non-numeric cells; first "
                            "non-numeric at row " + std::to_string(first_bad + 1));
        }

        double lo = vals[0], hi = vals[0];
        for (double v : vals) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        double span = hi - lo;
        for (int r = 0; r < ds.n; ++r)
            ds.X[size_t(r) * ds.d + fcol] = span > 0.0 ? (vals[size_t(r)] - lo) / span : 0.0;
        ++fcol;
    }
    return ds;
}

SplitMasks stratified_split(const Dataset& ds, double train_frac, double valid_frac,
                            double test_frac, uint64_t seed) {
    if (train_frac < 0 || valid_frac < 0 || test_frac < 0)
        throw ConfigError("split fractions must be non-negative");
    if (std::fabs(train_frac + valid_frac + test_frac - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");

    SplitMasks out;
    std::vector<std::vector<int>> members(size_t(ds.classes));
    for (int i = 0; i < ds.n; ++i) members[size_t(ds.y[size_t(i)])].push_back(i);

    std::vector<int> eligible;
    int n_eligible = 0;
    for (int c = 0; c < ds.classes; ++c) {
        if (int(members[size_t(c)].size()) < 3) {
            out.warnings.push_back("class '" + ds.class_names[size_t(c)] + "' has only " +
                                   std::to_string(members[size_t(c)].size()) +
                                   " instances; placed wholly in train");
            for (int i : members[size_t(c)]) out.train.push_back(i);
        } else {
            eligible.push_back(c);
            n_eligible += int(members[size_t(c)].size());
        }
    }

    // Per-split per-class counts: floor, then distribute the remaining units
    // needed to reach round(frac * n_eligible) by largest fractional
    // remainder; ties prefer the class with fewer units taken so far, then the
    // lower class index. Train takes the rest.
    std::vector<int> taken(size_t(ds.classes), 0);
    auto allocate = [&](double frac) {
        std::vector<int> counts(size_t(ds.classes), 0);
        if (eligible.empty() || frac <= 0.0) return counts;
        int target = int(std::llround(frac * n_eligible));
        int base_total = 0;
        std::vector<double> rem(size_t(ds.classes), 0.0);
        for (int c : eligible) {
            double exact = frac * double(members[size_t(c)].size());
            counts[size_t(c)] = int(std::floor(exact));
            rem[size_t(c)] = exact - std::floor(exact);
            base_total += counts[size_t(c)];
        }
        int need = target - base_total;
        std::vector<int> order = eligible;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (rem[size_t(a)] != rem[size_t(b)]) return rem[size_t(a)] > rem[size_t(b)];
            if (taken[size_t(a)] != taken[size_t(b)]) return taken[size_t(a)] < taken[size_t(b)];
            return a < b;
        });
        for (int i = 0; i < need && i < int(order.size()); ++i) ++counts[size_t(order[i])];
        for (int c : eligible) taken[size_t(c)] += counts[size_t(c)];
        return counts;
    };
    std::vector<int> valid_counts = allocate(valid_frac);
    std::vector<int> test_counts = allocate(test_frac);

    for (int c : eligible) {
        std::vector<int>& m = members[size_t(c)];
        RngStream rng(seed, "split", {c});
        rng.shuffle(m);
        int nv = std::min<int>(valid_counts[size_t(c)], int(m.size()));
        int nt = std::min<int>(test_counts[size_t(c)], int(m.size()) - nv);
        for (int i = 0; i < nv; ++i) out.valid.push_back(m[size_t(i)]);
        for (int i = nv; i < nv + nt; ++i) out.test.push_back(m[size_t(i)]);
        for (int i = nv + nt; i < int(m.size()); ++i) out.train.push_back(m[size_t(i)]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.valid.begin(), out.valid.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

void write_bundle(const std::string& dir, const Dataset& ds, const SplitMasks& masks,
                  const std::string& source_csv) {
    fs::create_directories(dir);
    {
        std::vector<unsigned char> buf(ds.X.size() * 8);
        for (size_t i = 0; i < ds.X.size(); ++i) store_f64le(ds.X[i], buf.data() + i * 8);
        write_file_bytes(dir + "/X.f64le", buf.data(), buf.size());
    }
    {
        std::vector<unsigned char> buf(ds.y.size() * 4);
        for (size_t i = 0; i < ds.y.size(); ++i)
            store_u32le(uint32_t(ds.y[i]), buf.data() + i * 4);
        write_file_bytes(dir + "/y.u32le", buf.data(), buf.size());
    }
    {
        json m;
        m["train"] = masks.train;
        m["valid"] = masks.valid;
        m["test"] = masks.test;
        m["warnings"] = masks.warnings;
        write_file_text(dir + "/masks.json", m.dump(2) + "\n");
    }
    {
        json meta;
        meta["n"] = ds.n;
        meta["d"] = ds.d;
        meta["classes"] = ds.classes;
        meta["feature_names"] = ds.feature_names;
        json kinds = json::array();
        for (auto k : ds.feature_kinds)
            kinds.push_back(k == FeatureKind::numeric ? "numeric" : "categorical");
        meta["feature_kinds"] = kinds;
        meta["class_names"] = ds.class_names;
        meta["target"] = ds.target_name;
        meta["warnings"] = ds.warnings;
        meta["source_csv"] = source_csv;
        write_file_text(dir + "/meta.json", meta.dump(2) + "\n");
    }
}

Bundle read_bundle(const std::string& dir) {
    Bundle b;
    json meta = json::parse(read_file_text(dir + "/meta.json"));
    Dataset& ds = b.dataset;
    ds.n = meta.at("n").get<int>();
    ds.d = meta.at("d").get<int>();
    ds.classes = meta.at("classes").get<int>();
    ds.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
    for (const auto& k : meta.at("feature_kinds"))
        ds.feature_kinds.push_back(k.get<std::string>() == "numeric" ? FeatureKind::numeric
                                                                     : FeatureKind::categorical);
    ds.class_names = meta.at("class_names").get<std::vector<std::string>>();
    ds.target_name = meta.at("target").get<std::string>();
    ds.warnings = meta.value("warnings", std::vector<std::string>{});
    b.source_csv = meta.value("source_csv", std::string());

    auto xb = read_file_bytes(dir + "/X.f64le");
    if (xb.size() != size_t(ds.n) * ds.d * 8)
        throw DataError("X.f64le size disagrees with meta.json in " + dir);
    ds.X.resize(size_t(ds.n) * ds.d);
    for (size_t i = 0; i < ds.X.size(); ++i) ds.X[i] = load_f64le(xb.data() + i * 8);

    auto yb = read_file_bytes(dir + "/y.u32le");
    if (yb.size() != size_t(ds.n) * 4)
        throw DataError("y.u32le size disagrees with meta.json in " + dir);
    ds.y.resize(size_t(ds.n));
    for (size_t i = 0; i < ds.y.size(); ++i) ds.y[i] = int(load_u32le(yb.data() + i * 4));

    json m = json::parse(read_file_text(dir + "/masks.json"));
    b.masks.train = m.at("train").get<std::vector<int>>();
    b.masks.valid = m.at("valid").get<std::vector<int>>();
    b.masks.test = m.at("test").get<std::vector<int>>();
    b.masks.warnings = m.value("warnings", std::vector<std::string>{});
    return b;
}

}  // namespace isel
