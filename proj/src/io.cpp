#include "horizon/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "horizon/errors.hpp"

namespace horizon {

using ordered_json = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    return out;
}

ordered_json command_json(const RolloutCommand& cmd) {
    ordered_json j;
    j["kind"] = command_kind_name(cmd.kind);
    j["at_block"] = cmd.at_block;
    if (cmd.kind == RolloutCommand::Kind::Flush || cmd.kind == RolloutCommand::Kind::SetPrompt)
        j["prompt"] = cmd.prompt;
    if (cmd.kind == RolloutCommand::Kind::Cut) {
        j["delta"] = cmd.delta;
        j["forced"] = cmd.forced;
    }
    return j;
}

}  // namespace

void write_trace_jsonl(const RolloutTrace& trace, const std::string& path) {
    auto out = open_out(path);
    for (const auto& b : trace.blocks) {
        ordered_json j;
        j["block"] = b.block;
        j["logical"] = b.logical;
        ordered_json coords = ordered_json::object();
        for (const auto& [frame, coord] : b.coords) coords[std::to_string(frame)] = coord;
        j["coords"] = coords;
        j["timesteps"] = b.timesteps;
        j["commands"] = ordered_json::array();
        for (const auto& c : b.commands) j["commands"].push_back(command_json(c));
        for (const auto& c : b.commands) {
            if (c.kind == RolloutCommand::Kind::Cut) j["cut_coordinates"] = b.cut_coordinates;
            if (c.kind == RolloutCommand::Kind::Flush && b.flush_token_ops)
                j["flush_token_ops"] = *b.flush_token_ops;
        }
        j["residency"] = b.residency;
        j["max_coord"] = b.max_coordinate;
        out << j.dump() << "\n";
    }
}

void write_cache_trace_jsonl(const RolloutTrace& trace, const std::string& path) {
    auto out = open_out(path);
    for (const auto& b : trace.blocks) {
        for (const auto& row : b.cache_rows) {
            ordered_json j;
            j["block"] = b.block;
            j["logical_index"] = row.logical_index;
            j["coordinate"] = row.coordinate;
            j["is_sink"] = row.is_sink;
            j["segment_id"] = row.segment_id;
            out << j.dump() << "\n";
        }
    }
}

void write_map_csv(const FrameAttentionMap& map, const std::string& path) {
    auto out = open_out(path);
    out << "query\\key";
    for (int s : map.frame_labels) out << "," << s;
    out << "\n";
    char buf[64];
    for (int t = 1; t <= map.frames; ++t) {
        out << map.frame_labels[t - 1];
        for (int s = 1; s <= map.frames; ++s) {
            // 17 significant digits: doubles survive the round-trip exactly
            std::snprintf(buf, sizeof(buf), "%.17g", map.at(t, s));
            out << "," << buf;
        }
        out << "\n";
    }
}

void write_map_pgm(const FrameAttentionMap& map, const std::string& path) {
    auto out = open_out(path);
    double max_v = 0.0;
    for (double v : map.m) max_v = std::max(max_v, v);
    out << "P2\n" << map.frames << " " << map.frames << "\n255\n";
    for (int t = 1; t <= map.frames; ++t) {
        for (int s = 1; s <= map.frames; ++s) {
            const int pixel =
                max_v > 0.0 ? static_cast<int>(std::lround(255.0 * map.at(t, s) / max_v)) : 0;
            out << pixel << (s == map.frames ? "" : " ");
        }
        out << "\n";
    }
}

FrameAttentionMap read_map_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty csv " + path);
    FrameAttentionMap map;
    {
        std::istringstream hs(line);
        std::string cell;
        std::getline(hs, cell, ',');  // corner label
        while (std::getline(hs, cell, ',')) map.frame_labels.push_back(std::stoi(cell));
    }
    map.frames = static_cast<int>(map.frame_labels.size());
    map.m.reserve(static_cast<size_t>(map.frames) * map.frames);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream rs(line);
        std::string cell;
        std::getline(rs, cell, ',');  // row label
        while (std::getline(rs, cell, ',')) map.m.push_back(std::stod(cell));
    }
    if (map.m.size() != static_cast<size_t>(map.frames) * map.frames)
        throw ParseError("csv " + path + " is not square");
    map.normalized = true;
    return map;
}

std::vector<std::vector<int>> read_pgm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P2") throw ParseError(path + ": not an ASCII PGM");
    int w = 0, h = 0, maxval = 0;
    in >> w >> h >> maxval;
    if (w <= 0 || h <= 0 || maxval != 255) throw ParseError(path + ": bad PGM header");
    std::vector<std::vector<int>> rows(h, std::vector<int>(w));
    for (auto& row : rows)
        for (auto& v : row) {
            if (!(in >> v) || v < 0 || v > maxval) throw ParseError(path + ": bad pixel");
        }
    return rows;
}

}  // namespace horizon
