#include "horizon/run_config.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

#include "horizon/errors.hpp"

namespace horizon {

EngineConfig RunConfig::engine_config() const {
    EngineConfig e;
    e.model = model;
    e.f0 = f0;
    e.capacity = capacity;
    e.mode = mode;
    e.n_blocks = n_blocks;
    e.cfg_scale = cfg_scale;
    e.shift = shift;
    e.n_steps = n_steps;
    e.capture = capture;
    e.capture_layer = capture_layer >= 0 ? capture_layer : model.layers / 2;
    e.capture_step = capture_step >= 0 ? capture_step : n_steps - 1;
    e.initial_prompt = initial_prompt;
    return e;
}

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ParseError("config line " + std::to_string(line) + ": " + msg);
}

std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

long parse_int(const std::string& v, int line) {
    try {
        size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) fail(line, "trailing characters after integer '" + v + "'");
        return x;
    } catch (const ParseError&) {
        throw;
    } catch (...) {
        fail(line, "expected an integer, got '" + v + "'");
    }
}

double parse_real(const std::string& v, int line) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) fail(line, "trailing characters after number '" + v + "'");
        return x;
    } catch (const ParseError&) {
        throw;
    } catch (...) {
        fail(line, "expected a number, got '" + v + "'");
    }
}

// `... @block N` suffix; returns N and trims the suffix off.
int take_at_block(std::string& rest, int line) {
    const auto pos = rest.rfind("@block");
    if (pos == std::string::npos) fail(line, "schedule line needs '@block <n>'");
    const std::string n = strip(rest.substr(pos + 6));
    rest = strip(rest.substr(0, pos));
    const long b = parse_int(n, line);
    if (b < 1) fail(line, "@block must be >= 1");
    return static_cast<int>(b);
}

std::string take_quoted(const std::string& s, int line) {
    const auto a = s.find('"');
    const auto b = s.rfind('"');
    if (a == std::string::npos || b == a) fail(line, "expected a double-quoted string");
    return s.substr(a + 1, b - a - 1);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    int last_block = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        std::string line = strip(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;

        const std::string first_word = line.substr(0, line.find_first_of(" \t="));
        const bool keyword = first_word == "continue" || first_word == "flush" ||
                             first_word == "cut" || first_word == "prompt";
        // 'prompt' doubles as a config key; 'prompt = ...' is the key form.
        const std::string after_kw = keyword ? strip(line.substr(first_word.size())) : "";
        const bool is_schedule =
            keyword && !(first_word == "prompt" && !after_kw.empty() && after_kw.front() == '=');
        if (is_schedule) {
            std::string rest = line;
            RolloutCommand cmd;
            cmd.at_block = take_at_block(rest, line_no);
            if (rest.rfind("continue", 0) == 0) {
                cmd.kind = RolloutCommand::Kind::Continue;
                if (strip(rest.substr(8)) != "") fail(line_no, "continue takes no arguments");
            } else if (rest.rfind("flush", 0) == 0) {
                cmd.kind = RolloutCommand::Kind::Flush;
                cmd.prompt = take_quoted(rest.substr(5), line_no);
            } else if (rest.rfind("cut", 0) == 0) {
                cmd.kind = RolloutCommand::Kind::Cut;
                const long d = parse_int(strip(rest.substr(3)), line_no);
                if (d < 1) fail(line_no, "cut delta must be >= 1");
                cmd.delta = static_cast<int>(d);
            } else if (rest.rfind("prompt", 0) == 0) {
                cmd.kind = RolloutCommand::Kind::SetPrompt;
                cmd.prompt = take_quoted(rest.substr(6), line_no);
            } else {
                fail(line_no, "unrecognized schedule command '" + rest + "'");
            }
            if (cmd.at_block < last_block)
                fail(line_no, "schedule not sorted by block (" + std::to_string(cmd.at_block) +
                                  " after " + std::to_string(last_block) + ")");
            last_block = cmd.at_block;
            c.schedule.push_back(std::move(cmd));
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected 'key = value' or a schedule line");
        const std::string key = strip(line.substr(0, eq));
        const std::string val = strip(line.substr(eq + 1));
        if (key.empty() || val.empty()) fail(line_no, "empty key or value");

        if (key == "layers") c.model.layers = static_cast<int>(parse_int(val, line_no));
        else if (key == "heads") c.model.heads = static_cast<int>(parse_int(val, line_no));
        else if (key == "head_dim") c.model.head_dim = static_cast<int>(parse_int(val, line_no));
        else if (key == "grid_h") c.model.grid_h = static_cast<int>(parse_int(val, line_no));
        else if (key == "grid_w") c.model.grid_w = static_cast<int>(parse_int(val, line_no));
        else if (key == "channels") c.model.channels = static_cast<int>(parse_int(val, line_no));
        else if (key == "f_limit") c.model.f_limit = static_cast<int>(parse_int(val, line_no));
        else if (key == "seed") c.model.seed = static_cast<uint64_t>(parse_int(val, line_no));
        else if (key == "rope_base") c.model.rope_base = parse_real(val, line_no);
        else if (key == "rope_pairs_f") c.model.rope_split[0] = static_cast<int>(parse_int(val, line_no));
        else if (key == "rope_pairs_h") c.model.rope_split[1] = static_cast<int>(parse_int(val, line_no));
        else if (key == "rope_pairs_w") c.model.rope_split[2] = static_cast<int>(parse_int(val, line_no));
        else if (key == "f0") c.f0 = static_cast<int>(parse_int(val, line_no));
        else if (key == "capacity") c.capacity = static_cast<int>(parse_int(val, line_no));
        else if (key == "mode") {
            if (val == "fixed") c.mode = CacheMode::Fixed;
            else if (val == "unbounded") c.mode = CacheMode::Unbounded;
            else fail(line_no, "mode must be 'fixed' or 'unbounded'");
        }
        else if (key == "n_blocks") c.n_blocks = static_cast<int>(parse_int(val, line_no));
        else if (key == "cfg_scale") c.cfg_scale = static_cast<float>(parse_real(val, line_no));
        else if (key == "shift") c.shift = static_cast<float>(parse_real(val, line_no));
        else if (key == "n_steps") c.n_steps = static_cast<int>(parse_int(val, line_no));
        else if (key == "capture") {
            if (val == "on") c.capture = true;
            else if (val == "off") c.capture = false;
            else fail(line_no, "capture must be 'on' or 'off'");
        }
        else if (key == "capture_layer") c.capture_layer = static_cast<int>(parse_int(val, line_no));
        else if (key == "capture_step") c.capture_step = static_cast<int>(parse_int(val, line_no));
        else if (key == "fps") c.fps = static_cast<int>(parse_int(val, line_no));
        else if (key == "clip_seconds") c.clip_seconds = static_cast<int>(parse_int(val, line_no));
        else if (key == "prompt") c.initial_prompt = take_quoted(val, line_no);
        else fail(line_no, "unknown key '" + key + "'");
    }
    return c;
}

namespace {
std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}
}  // namespace

std::string print_config(const RunConfig& c) {
    std::ostringstream out;
    out << "layers = " << c.model.layers << "\n";
    out << "heads = " << c.model.heads << "\n";
    out << "head_dim = " << c.model.head_dim << "\n";
    out << "grid_h = " << c.model.grid_h << "\n";
    out << "grid_w = " << c.model.grid_w << "\n";
    out << "channels = " << c.model.channels << "\n";
    out << "f_limit = " << c.model.f_limit << "\n";
    out << "seed = " << c.model.seed << "\n";
    out << "rope_base = " << fmt_real(c.model.rope_base) << "\n";
    out << "rope_pairs_f = " << c.model.rope_split[0] << "\n";
    out << "rope_pairs_h = " << c.model.rope_split[1] << "\n";
    out << "rope_pairs_w = " << c.model.rope_split[2] << "\n";
    out << "f0 = " << c.f0 << "\n";
    out << "capacity = " << c.capacity << "\n";
    out << "mode = " << (c.mode == CacheMode::Fixed ? "fixed" : "unbounded") << "\n";
    out << "n_blocks = " << c.n_blocks << "\n";
    out << "cfg_scale = " << fmt_real(c.cfg_scale) << "\n";
    out << "shift = " << fmt_real(c.shift) << "\n";
    out << "n_steps = " << c.n_steps << "\n";
    out << "capture = " << (c.capture ? "on" : "off") << "\n";
    out << "capture_layer = " << c.capture_layer << "\n";
    out << "capture_step = " << c.capture_step << "\n";
    out << "fps = " << c.fps << "\n";
    out << "clip_seconds = " << c.clip_seconds << "\n";
    out << "prompt = \"" << c.initial_prompt << "\"\n";
    for (const auto& cmd : c.schedule) {
        switch (cmd.kind) {
            case RolloutCommand::Kind::Continue: out << "continue"; break;
            case RolloutCommand::Kind::Flush: out << "flush \"" << cmd.prompt << "\""; break;
            case RolloutCommand::Kind::Cut: out << "cut " << cmd.delta; break;
            case RolloutCommand::Kind::SetPrompt: out << "prompt \"" << cmd.prompt << "\""; break;
        }
        out << " @block " << cmd.at_block << "\n";
    }
    return out.str();
}

void validate_config(const RunConfig& c) {
    if (c.model.layers < 1) throw ConfigError("layers must be >= 1");
    if (c.model.heads < 1) throw ConfigError("heads must be >= 1");
    if (c.model.head_dim < 2 || c.model.head_dim % 2 != 0)
        throw ConfigError("head_dim must be a positive even integer");
    if (c.model.grid_h < 1 || c.model.grid_w < 1) throw ConfigError("latent grid must be >= 1x1");
    if (c.model.channels < 1) throw ConfigError("channels must be >= 1");
    if (c.n_blocks < 1) throw ConfigError("n_blocks must be >= 1");
    if (c.n_steps < 1) throw ConfigError("n_steps must be >= 1");
    if (!(c.shift > 0.0f)) throw ConfigError("shift must be > 0");
    if (c.f0 < 1 || c.f0 > c.model.f_limit) throw ConfigError("f0 must lie in [1, f_limit]");
    if (c.mode == CacheMode::Fixed && c.capacity < 3)
        throw ConfigError("capacity must be >= 3 in fixed mode");
    auto split = c.model.rope_split;
    if (split[0] == 0 && split[1] == 0 && split[2] == 0)
        split = default_rope_split(c.model.head_dim);
    build_frequencies(c.model.head_dim, split, c.model.rope_base);  // throws on bad split
    if (c.capture) {
        const int layer = c.capture_layer >= 0 ? c.capture_layer : c.model.layers / 2;
        const int step = c.capture_step >= 0 ? c.capture_step : c.n_steps - 1;
        if (layer >= c.model.layers) throw ConfigError("capture_layer out of range");
        if (step >= c.n_steps) throw ConfigError("capture_step out of range");
    }
    // Latent-count self-check: the clip described by (fps, clip_seconds) must
    // compress to exactly f_limit latent frames.
    const int video_frames = c.fps * c.clip_seconds + 1;
    const int latents = latent_frame_count(video_frames);
    if (latents != c.model.f_limit)
        throw ConfigError("f_limit " + std::to_string(c.model.f_limit) +
                          " does not match the latent count " + std::to_string(latents) +
                          " for " + std::to_string(c.clip_seconds) + "s at " +
                          std::to_string(c.fps) + " fps");
}

}  // namespace horizon
