#include "horizon/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "horizon/errors.hpp"
#include "horizon/io.hpp"

namespace horizon {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<RolloutCommand> forced_cuts(std::vector<RolloutCommand> schedule, bool force) {
    if (force)
        for (auto& c : schedule)
            if (c.kind == RolloutCommand::Kind::Cut) c.forced = true;
    return schedule;
}

std::vector<AttentionRecord> collect_records(const RolloutTrace& trace) {
    std::vector<AttentionRecord> records;
    for (const auto& b : trace.blocks) {
        if (!b.attention) throw ProtocolError("trace block without captured attention");
        records.push_back(*b.attention);
    }
    return records;
}

ProbeConfig probe_config_of(const RunConfig& c) {
    ProbeConfig p;
    p.mode = c.mode;
    p.capacity = c.capacity;
    p.f0 = c.f0;
    p.f_limit = c.model.f_limit;
    p.n_blocks = c.n_blocks;
    p.tokens_per_frame = c.model.tokens_per_frame();
    p.head_dim = c.model.head_dim;
    p.rope_base = c.model.rope_base;
    p.rope_split = c.model.rope_split;
    return p;
}

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

RunArtifacts cmd_run(const RunConfig& config, const std::string& out_dir, bool force_cut) {
    validate_config(config);
    fs::create_directories(out_dir);

    const EngineConfig ecfg = config.engine_config();
    Model model(config.model);
    Engine engine(model, ecfg);
    RunArtifacts art;
    art.trace = engine.rollout(forced_cuts(config.schedule, force_cut));

    write_trace_jsonl(art.trace, out_dir + "/trace.jsonl");
    write_cache_trace_jsonl(art.trace, out_dir + "/cache_trace.jsonl");
    if (config.capture) {
        art.map = frame_attention_map(collect_records(art.trace));
        const std::string stem = out_dir + "/attnmap_layer" + std::to_string(ecfg.capture_layer);
        write_map_csv(art.map, stem + ".csv");
        write_map_pgm(art.map, stem + ".pgm");
    }
    return art;
}

ProbeResult cmd_probe(const RunConfig& config, const std::string& out_dir, bool force_cut) {
    validate_config(config);
    fs::create_directories(out_dir);

    ProbeResult res = rope_probe_map(probe_config_of(config),
                                     forced_cuts(config.schedule, force_cut));
    write_trace_jsonl(res.trace, out_dir + "/trace.jsonl");
    write_cache_trace_jsonl(res.trace, out_dir + "/cache_trace.jsonl");
    write_map_csv(res.map, out_dir + "/attnmap_probe.csv");
    write_map_pgm(res.map, out_dir + "/attnmap_probe.pgm");
    return res;
}

void cmd_sweep(const RunConfig& config, const std::string& param,
               const std::vector<long>& values, const std::string& out_dir) {
    if (param != "capacity" && param != "delta" && param != "f0" && param != "n_blocks")
        throw ConfigError("invalid sweep param '" + param +
                          "' (expected capacity, delta, f0 or n_blocks)");
    if (values.empty()) throw ParseError("sweep values list is empty");
    fs::create_directories(out_dir);

    std::ofstream summary(out_dir + "/summary.csv", std::ios::binary);
    summary << "param,value,band_mass_w3,sink_column_mass,cut_disjointness,"
               "max_coordinate,peak_residency,out_of_horizon\n";
    std::vector<std::pair<long, double>> disjointness;

    for (long v : values) {
        RunConfig member = config;
        bool forced = false;
        if (param == "capacity") member.capacity = static_cast<int>(v);
        else if (param == "f0") member.f0 = static_cast<int>(v);
        else if (param == "n_blocks") member.n_blocks = static_cast<int>(v);
        else {
            // delta: retarget every cut (inject one at block 2 if absent);
            // out-of-horizon values make this the extrapolation study, so
            // cuts run forced.
            bool has_cut = false;
            for (auto& cmd : member.schedule)
                if (cmd.kind == RolloutCommand::Kind::Cut) {
                    cmd.delta = static_cast<int>(v);
                    has_cut = true;
                }
            if (!has_cut) {
                RolloutCommand cut;
                cut.kind = RolloutCommand::Kind::Cut;
                cut.delta = static_cast<int>(v);
                cut.at_block = std::min(2, member.n_blocks);
                member.schedule.insert(member.schedule.begin(), cut);
                std::sort(member.schedule.begin(), member.schedule.end(),
                          [](const RolloutCommand& a, const RolloutCommand& b) {
                              return a.at_block < b.at_block;
                          });
            }
            forced = true;
        }

        const std::string sub = out_dir + "/" + param + "_" + std::to_string(v);
        RunArtifacts art = cmd_run(member, sub, forced);
        ProbeResult probe = rope_probe_map(probe_config_of(member),
                                           forced_cuts(member.schedule, forced));

        const auto cuts = cut_frames(probe.trace);
        std::string cut_cell;
        if (!cuts.empty()) {
            const double d = cut_disjointness(probe.map, probe.trace);
            cut_cell = fmt_real(d);
            disjointness.push_back({v, d});
        }
        const bool out_of_horizon = (param == "delta") && v > config.model.f_limit;
        summary << param << "," << v << "," << fmt_real(band_mass(probe.map, 3)) << ","
                << fmt_real(sink_column_mass(probe.map)) << "," << cut_cell << ","
                << art.trace.max_coordinate << "," << art.trace.peak_residency << ","
                << (out_of_horizon ? 1 : 0) << "\n";
    }

    if (param == "delta") {
        std::ofstream mono(out_dir + "/monotonicity.csv", std::ios::binary);
        mono << "delta,probe_cut_disjointness\n";
        bool nondecreasing = true;
        for (size_t i = 0; i < disjointness.size(); ++i) {
            mono << disjointness[i].first << "," << fmt_real(disjointness[i].second) << "\n";
            if (i > 0 && disjointness[i].second < disjointness[i - 1].second - 1e-12)
                nondecreasing = false;
        }
        mono << "# nondecreasing = " << (nondecreasing ? "true" : "false") << "\n";
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"streaming block-causal rollout engine with relativistic RoPE caching"};
    app.require_subcommand(1);

    std::string config_path, out_dir, param, values_csv;
    bool force_cut = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file path")->required();
        sub->add_option("--out", out_dir, "output directory")->required();
    };
    CLI::App* run = app.add_subcommand("run", "execute one rollout");
    add_common(run);
    run->add_flag("--force-cut", force_cut, "allow cuts past f_limit");
    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    add_common(sweep);
    sweep->add_option("--param", param, "capacity | delta | f0 | n_blocks")->required();
    sweep->add_option("--values", values_csv, "comma-separated values")->required();
    CLI::App* probe = app.add_subcommand("probe", "run the analytic coordinate probe");
    add_common(probe);
    probe->add_flag("--force-cut", force_cut, "allow cuts past f_limit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        RunConfig config = parse_config(read_file(config_path));
        if (const char* env_seed = std::getenv("HORIZON_SEED")) {
            try {
                config.model.seed = std::stoull(env_seed);
            } catch (...) {
                throw ConfigError("HORIZON_SEED is not an unsigned integer");
            }
        }
        if (run->parsed()) {
            cmd_run(config, out_dir, force_cut);
        } else if (probe->parsed()) {
            cmd_probe(config, out_dir, force_cut);
        } else {
            std::vector<long> values;
            std::stringstream ss(values_csv);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                if (cell.empty()) continue;
                values.push_back(std::stol(cell));
            }
            cmd_sweep(config, param, values, out_dir);
        }
        return 0;
    } catch (const RangeError& e) {
        std::cerr << "range error: " << e.what() << "\n";
        return 4;
    } catch (const ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace horizon
