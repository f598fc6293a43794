#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace isel {

// Error taxonomy mapped to CLI exit codes: ConfigError -> 2, DataError -> 3,
// NumericError -> 4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};
struct DataError : std::runtime_error {
    explicit DataError(const std::string& m) : std::runtime_error(m) {}
};
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};

enum class Metric { euclidean, cosine, manhattan };

Metric metric_from_string(const std::string& s);
std::string metric_to_string(Metric m);

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64_str(const std::string& s, uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), h);
}

// All randomness flows from one root seed through named streams so that every
// stage draws from an independent, reproducible sequence.
class RngStream {
public:
    RngStream(uint64_t root, const std::string& name) {
        uint64_t h = fnv1a64(&root, sizeof(root));
        h = fnv1a64_str(name, h);
        eng_.seed(h);
    }
    RngStream(uint64_t root, const std::string& name, const std::vector<int64_t>& parts) {
        uint64_t h = fnv1a64(&root, sizeof(root));
        h = fnv1a64_str(name, h);
        for (int64_t p : parts) h = fnv1a64(&p, sizeof(p), h);
        eng_.seed(h);
    }

    std::mt19937_64& engine() { return eng_; }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }
    double normal() { return norm_(eng_); }
    // uniform integer in [0, n)
    int64_t index(int64_t n) {
        return static_cast<int64_t>(std::uniform_int_distribution<uint64_t>(0, uint64_t(n) - 1)(eng_));
    }
    template <typename T>
    void shuffle(std::vector<T>& v) {
        std::shuffle(v.begin(), v.end(), eng_);
    }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> norm_{0.0, 1.0};
};

// Explicit little-endian encode so bundle/checkpoint/trace files are
// byte-stable across hosts.
inline void store_u32le(uint32_t v, unsigned char out[4]) {
    out[0] = v & 0xff; out[1] = (v >> 8) & 0xff; out[2] = (v >> 16) & 0xff; out[3] = (v >> 24) & 0xff;
}
inline uint32_t load_u32le(const unsigned char in[4]) {
    return uint32_t(in[0]) | uint32_t(in[1]) << 8 | uint32_t(in[2]) << 16 | uint32_t(in[3]) << 24;
}
inline void store_u64le(uint64_t v, unsigned char out[8]) {
    for (int i = 0; i < 8; ++i) out[i] = (v >> (8 * i)) & 0xff;
}
inline uint64_t load_u64le(const unsigned char in[8]) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(in[i]) << (8 * i);
    return v;
}
inline void store_f64le(double d, unsigned char out[8]) {
    uint64_t v;
    std::memcpy(&v, &d, 8);
    store_u64le(v, out);
}
inline double load_f64le(const unsigned char in[8]) {
    uint64_t v = load_u64le(in);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

// Append/read forms for building and walking whole-file blobs.
inline void store_u32le(std::vector<unsigned char>& out, uint32_t v) {
    unsigned char b[4];
    store_u32le(v, b);
    out.insert(out.end(), b, b + 4);
}
inline void store_u64le(std::vector<unsigned char>& out, uint64_t v) {
    unsigned char b[8];
    store_u64le(v, b);
    out.insert(out.end(), b, b + 8);
}
inline void store_f64le(std::vector<unsigned char>& out, double d) {
    unsigned char b[8];
    store_f64le(d, b);
    out.insert(out.end(), b, b + 8);
}
inline uint32_t load_u32le(const std::vector<unsigned char>& in, size_t at) {
    return load_u32le(in.data() + at);
}
inline uint64_t load_u64le(const std::vector<unsigned char>& in, size_t at) {
    return load_u64le(in.data() + at);
}
inline double load_f64le(const std::vector<unsigned char>& in, size_t at) {
    return load_f64le(in.data() + at);
}

class StopWatch {
public:
    StopWatch() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        auto dt = std::chrono::steady_clock::now() - t0_;
        return std::chrono::duration<double>(dt).count();
    }
    void reset() { t0_ = std::chrono::steady_clock::now(); }

private:
    std::chrono::steady_clock::time_point t0_;
};

std::vector<unsigned char> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const void* data, size_t len);
inline void write_file_bytes(const std::string& path, const std::vector<unsigned char>& data) {
    write_file_bytes(path, data.data(), data.size());
}
std::string read_file_text(const std::string& path);
void write_file_text(const std::string& path, const std::string& text);

}  // namespace isel
