#pragma once

#include <string>
#include <vector>

#include "horizon/engine.hpp"

namespace horizon {

// Everything one run needs, parsed from a line-oriented config file:
//   key = value            (unknown keys rejected with the line number)
//   continue @block N
//   flush "new prompt" @block N
//   cut 15 @block N
//   prompt "new prompt" @block N
// '#' starts a comment. Schedule lines must be sorted by block.
struct RunConfig {
    ModelConfig model;
    int f0 = 21;
    int capacity = 6;
    CacheMode mode = CacheMode::Fixed;
    int n_blocks = 7;
    float cfg_scale = 3.0f;
    float shift = 5.0f;
    int n_steps = 4;
    bool capture = true;
    int capture_layer = -1;  // -1: middle layer (layers / 2)
    int capture_step = -1;   // -1: final denoising step (n_steps - 1)
    int fps = 16;
    int clip_seconds = 5;
    std::string initial_prompt;
    std::vector<RolloutCommand> schedule;

    EngineConfig engine_config() const;

    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text);

// Canonical text form; parse_config(print_config(c)) == c.
std::string print_config(const RunConfig& c);

// Cross-field checks, including the latent-count self-check:
// f_limit must equal 1 + ceil((F-1)/4) for F = fps * clip_seconds + 1.
void validate_config(const RunConfig& c);

}  // namespace horizon
