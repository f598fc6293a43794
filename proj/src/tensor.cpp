#include "isel/tensor.hpp"

#include <algorithm>

#include "json.hpp"

namespace isel {

using nlohmann::json;

void write_checkpoint(const std::string& bin_path, const std::string& manifest_path,
                      const std::vector<NamedTensor>& tensors) {
    std::vector<NamedTensor> sorted = tensors;
    std::sort(sorted.begin(), sorted.end(),
              [](const NamedTensor& a, const NamedTensor& b) { return a.name < b.name; });
    std::vector<unsigned char> blob;
    json manifest;
    manifest["format"] = 1;
    manifest["dtype"] = "f64le";
    json list = json::array();
    for (const auto& nt : sorted) {
        json e;
        e["name"] = nt.name;
        e["rows"] = nt.tensor.rows;
        e["cols"] = nt.tensor.cols;
        e["offset"] = blob.size();
        list.push_back(e);
        size_t at = blob.size();
        blob.resize(at + nt.tensor.numel() * 8);
        for (size_t i = 0; i < nt.tensor.numel(); ++i)
            store_f64le(nt.tensor.v[i], blob.data() + at + i * 8);
    }
    manifest["tensors"] = list;
    manifest["bytes"] = blob.size();
    write_file_bytes(bin_path, blob.data(), blob.size());
    write_file_text(manifest_path, manifest.dump(2) + "\n");
}

std::vector<NamedTensor> read_checkpoint(const std::string& bin_path,
                                         const std::string& manifest_path) {
    json manifest = json::parse(read_file_text(manifest_path));
    auto blob = read_file_bytes(bin_path);
    if (manifest.value("bytes", size_t(0)) != blob.size())
        throw DataError("checkpoint size disagrees with manifest: " + bin_path);
    std::vector<NamedTensor> out;
    for (const auto& e : manifest.at("tensors")) {
        NamedTensor nt;
        nt.name = e.at("name").get<std::string>();
        int rows = e.at("rows").get<int>();
        int cols = e.at("cols").get<int>();
        size_t offset = e.at("offset").get<size_t>();
        if (offset + size_t(rows) * cols * 8 > blob.size())
            throw DataError("checkpoint tensor out of range: " + nt.name);
        nt.tensor = Tensor(rows, cols);
        for (size_t i = 0; i < nt.tensor.numel(); ++i)
            nt.tensor.v[i] = load_f64le(blob.data() + offset + i * 8);
        out.push_back(std::move(nt));
    }
    return out;
}

}  // namespace isel
