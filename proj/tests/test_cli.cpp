#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "horizon/io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = HORIZON_BIN;

int run_cmd(const std::string& args, bool quiet = false) {
    std::string cmd = kBin + " " + args;
    if (quiet) cmd += " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("horizon_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name, const std::string& content) const {
        const fs::path p = path / name;
        std::ofstream(p) << content;
        return p.string();
    }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("run writes the full file set and is byte-deterministic") {
    TempDir tmp;
    const auto cfg = tmp.file("run.cfg", "n_blocks = 7\nprompt = \"city at dawn\"\n");
    REQUIRE(run_cmd("run --config " + cfg + " --out " + tmp.sub("a")) == 0);

    const std::string trace = slurp(tmp.sub("a") + "/trace.jsonl");
    CHECK(count_lines(trace) == 7);
    std::istringstream in(trace);
    std::string line;
    int expected_block = 1;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);  // must parse back
        CHECK(j["block"] == expected_block++);
        CHECK(j["logical"].size() == 3);
        CHECK(j["timesteps"].size() == 4);
    }

    const std::string cache_trace = slurp(tmp.sub("a") + "/cache_trace.jsonl");
    std::istringstream cin_(cache_trace);
    while (std::getline(cin_, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("logical_index"));
        CHECK(j.contains("coordinate"));
        CHECK(j.contains("is_sink"));
        CHECK(j.contains("segment_id"));
    }

    // attention map round-trips
    const auto map = horizon::read_map_csv(tmp.sub("a") + "/attnmap_layer1.csv");
    CHECK(map.frames == 21);
    for (int t = 1; t <= map.frames; ++t) {
        double sum = 0.0;
        for (int s = 1; s <= map.frames; ++s) sum += map.at(t, s);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    }
    const auto pgm = horizon::read_pgm(tmp.sub("a") + "/attnmap_layer1.pgm");
    CHECK(pgm.size() == 21);

    REQUIRE(run_cmd("run --config " + cfg + " --out " + tmp.sub("b")) == 0);
    CHECK(slurp(tmp.sub("b") + "/trace.jsonl") == trace);
    CHECK(slurp(tmp.sub("b") + "/attnmap_layer1.csv") == slurp(tmp.sub("a") + "/attnmap_layer1.csv"));
}

TEST_CASE("exit codes: config, protocol-free success, range") {
    TempDir tmp;
    const auto bad = tmp.file("bad.cfg", "bogus = 1\n");
    CHECK(run_cmd("run --config " + bad + " --out " + tmp.sub("x"), true) == 2);

    const auto cut = tmp.file("cut.cfg", "n_blocks = 3\ncut 90 @block 2\n");
    CHECK(run_cmd("run --config " + cut + " --out " + tmp.sub("y"), true) == 4);
    CHECK(run_cmd("run --force-cut --config " + cut + " --out " + tmp.sub("z")) == 0);

    const auto badmode = tmp.file("badmode.cfg", "capacity = 1\n");
    CHECK(run_cmd("run --config " + badmode + " --out " + tmp.sub("w"), true) == 2);
}

TEST_CASE("HORIZON_SEED overrides the config seed") {
    TempDir tmp;
    const auto cfg = tmp.file("seed.cfg", "n_blocks = 2\nseed = 1\n");
    REQUIRE(run_cmd("run --config " + cfg + " --out " + tmp.sub("s1")) == 0);
    ::setenv("HORIZON_SEED", "1", 1);
    REQUIRE(run_cmd("run --config " + cfg + " --out " + tmp.sub("s2")) == 0);
    ::setenv("HORIZON_SEED", "99", 1);
    REQUIRE(run_cmd("run --config " + cfg + " --out " + tmp.sub("s3")) == 0);
    ::unsetenv("HORIZON_SEED");
    CHECK(slurp(tmp.sub("s1") + "/attnmap_layer1.csv") ==
          slurp(tmp.sub("s2") + "/attnmap_layer1.csv"));
    CHECK(slurp(tmp.sub("s1") + "/attnmap_layer1.csv") !=
          slurp(tmp.sub("s3") + "/attnmap_layer1.csv"));
}

TEST_CASE("capacity sweep emits one summary row per value") {
    TempDir tmp;
    const auto cfg = tmp.file("sweep.cfg", "n_blocks = 6\ncapture = off\n");
    REQUIRE(run_cmd("sweep --config " + cfg + " --out " + tmp.sub("sw") +
                    " --param capacity --values 3,6,9,12") == 0);
    const std::string summary = slurp(tmp.sub("sw") + "/summary.csv");
    CHECK(count_lines(summary) == 5);  // header + 4 rows
    for (long v : {3L, 6L, 9L, 12L})
        CHECK(fs::exists(tmp.sub("sw") + "/capacity_" + std::to_string(v) + "/trace.jsonl"));
}

TEST_CASE("delta sweep mirrors the ablation axis and flags out-of-horizon values") {
    TempDir tmp;
    const auto cfg = tmp.file("delta.cfg", "n_blocks = 5\ncapture = off\n");
    REQUIRE(run_cmd("sweep --config " + cfg + " --out " + tmp.sub("d") +
                    " --param delta --values 6,21,45,90") == 0);
    const std::string summary = slurp(tmp.sub("d") + "/summary.csv");
    std::istringstream in(summary);
    std::string line;
    std::getline(in, line);  // header
    std::map<long, int> flags;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 8);
        flags[std::stol(cells[1])] = std::stoi(cells[7]);
    }
    CHECK(flags[6] == 0);
    CHECK(flags[21] == 0);
    CHECK(flags[45] == 1);
    CHECK(flags[90] == 1);

    const std::string mono = slurp(tmp.sub("d") + "/monotonicity.csv");
    CHECK(mono.find("nondecreasing = true") != std::string::npos);

    CHECK(run_cmd("sweep --config " + cfg + " --out " + tmp.sub("bad") +
                  " --param wavelength --values 1,2", true) == 2);
    CHECK(run_cmd("sweep --config " + cfg + " --out " + tmp.sub("bad2") +
                  " --param delta --values ,", true) == 2);
}

TEST_CASE("probe emits a deterministic map with the diagonal as its peak") {
    TempDir tmp;
    const auto cfg = tmp.file("probe.cfg", "n_blocks = 7\n");
    REQUIRE(run_cmd("probe --config " + cfg + " --out " + tmp.sub("p1")) == 0);
    REQUIRE(run_cmd("probe --config " + cfg + " --out " + tmp.sub("p2")) == 0);
    CHECK(slurp(tmp.sub("p1") + "/attnmap_probe.pgm") ==
          slurp(tmp.sub("p2") + "/attnmap_probe.pgm"));

    const auto pgm = horizon::read_pgm(tmp.sub("p1") + "/attnmap_probe.pgm");
    int max_pixel = 0;
    bool max_on_diagonal = false;
    for (size_t t = 0; t < pgm.size(); ++t)
        for (size_t s = 0; s < pgm[t].size(); ++s)
            if (pgm[t][s] > max_pixel) {
                max_pixel = pgm[t][s];
                max_on_diagonal = (t == s);
            }
    CHECK(max_pixel == 255);
    CHECK(max_on_diagonal);
}

TEST_CASE("probe with a flush schedule darkens intermediate columns") {
    TempDir tmp;
    const auto cfg = tmp.file("probe_flush.cfg",
                              "n_blocks = 6\n"
                              "flush \"next\" @block 4\n");
    REQUIRE(run_cmd("probe --config " + cfg + " --out " + tmp.sub("pf")) == 0);
    const auto map = horizon::read_map_csv(tmp.sub("pf") + "/attnmap_probe.csv");
    // post-flush rows: evicted columns exactly zero, sink+last dominate each
    // intermediate column
    for (int t = 13; t <= map.frames; ++t) {
        for (int s = 2; s < 12; ++s) CHECK(map.at(t, s) == 0.0);
        CHECK(map.at(t, 1) + map.at(t, 12) > 0.0);
    }
}
