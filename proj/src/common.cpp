#include "isel/common.hpp"

#include <fstream>

namespace isel {

Metric metric_from_string(const std::string& s) {
    if (s == "euclidean") return Metric::euclidean;
    if (s == "cosine") return Metric::cosine;
    if (s == "manhattan") return Metric::manhattan;
    throw ConfigError("unknown metric '" + s + "' (expected euclidean|cosine|manhattan)");
}

std::string metric_to_string(Metric m) {
    switch (m) {
        case Metric::euclidean: return "euclidean";
        case Metric::cosine: return "cosine";
        case Metric::manhattan: return "manhattan";
    }
    return "?";
}

std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open file: " + path);
    f.seekg(0, std::ios::end);
    std::streamoff len = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<unsigned char> buf(size_t(len), 0);
    if (len > 0) f.read(reinterpret_cast<char*>(buf.data()), len);
    if (!f) throw DataError("short read: " + path);
    return buf;
}

void write_file_bytes(const std::string& path, const void* data, size_t len) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write file: " + path);
    f.write(static_cast<const char*>(data), std::streamsize(len));
    if (!f) throw DataError("short write: " + path);
}

std::string read_file_text(const std::string& path) {
    auto b = read_file_bytes(path);
    return std::string(b.begin(), b.end());
}

void write_file_text(const std::string& path, const std::string& text) {
    write_file_bytes(path, text.data(), text.size());
}

}  // namespace isel
