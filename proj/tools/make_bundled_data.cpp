// Regenerates the bundled CSV corpus under a target directory. Sizes follow
// the usual benchmark editions of these datasets.
#include <cstdio>
#include <filesystem>
#include <string>

#include "isel/synth.hpp"

int main(int argc, char** argv) {
    std::string dir = argc > 1 ? argv[1] : "data";
    uint64_t seed = 20240917;
    std::filesystem::create_directories(dir);

    const isel::RawData sets[] = {
        isel::make_banana(5300, 0.10, seed),
        isel::make_phoneme_like(5404, seed),
        isel::make_segment_like(2310, seed),
        isel::make_twonorm(7400, seed),
        isel::make_ringnorm(7400, seed),
    };
    for (const auto& raw : sets) {
        std::string path = dir + "/" + raw.name + ".csv";
        isel::write_file_text(path, isel::to_csv(raw));
        std::printf("%s: n=%d d=%d classes=%d\n", path.c_str(), raw.n, raw.d, raw.classes);
    }
    return 0;
}
