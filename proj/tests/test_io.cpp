#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "horizon/analysis.hpp"
#include "horizon/errors.hpp"
#include "horizon/io.hpp"

using namespace horizon;
namespace fs = std::filesystem;

namespace {

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& name) {
        path = fs::temp_directory_path() / (name + "_" + std::to_string(::getpid()));
    }
    ~TempFile() { fs::remove(path); }
};

FrameAttentionMap probe_map() {
    ProbeConfig cfg;
    cfg.n_blocks = 4;
    return rope_probe_map(cfg, {}).map;
}

}  // namespace

TEST_CASE("csv round-trip is lossless") {
    const auto map = probe_map();
    TempFile f("horizon_map.csv");
    write_map_csv(map, f.path.string());
    const auto back = read_map_csv(f.path.string());
    REQUIRE(back.frames == map.frames);
    CHECK(back.frame_labels == map.frame_labels);
    for (size_t i = 0; i < map.m.size(); ++i) CHECK(back.m[i] == map.m[i]);
}

TEST_CASE("pgm is valid and scaled to the full range") {
    const auto map = probe_map();
    TempFile f("horizon_map.pgm");
    write_map_pgm(map, f.path.string());
    const auto pixels = read_pgm(f.path.string());
    REQUIRE(pixels.size() == static_cast<size_t>(map.frames));
    int max_pixel = 0;
    for (const auto& row : pixels) {
        REQUIRE(row.size() == static_cast<size_t>(map.frames));
        for (int v : row) max_pixel = std::max(max_pixel, v);
    }
    CHECK(max_pixel == 255);
}

TEST_CASE("pgm reader rejects other formats") {
    TempFile f("horizon_bogus.pgm");
    {
        std::ofstream out(f.path);
        out << "P5\n2 2\n255\n";
    }
    CHECK_THROWS_AS(read_pgm(f.path.string()), ParseError);
}
