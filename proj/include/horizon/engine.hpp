#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "horizon/kv_cache.hpp"
#include "horizon/model.hpp"

namespace horizon {

// One step of the schedule DSL.
struct RolloutCommand {
    enum class Kind { Continue, Flush, Cut, SetPrompt };
    Kind kind = Kind::Continue;
    int at_block = 1;
    std::string prompt;  // Flush / SetPrompt
    int delta = 0;       // Cut
    bool forced = false; // Cut: permit out-of-horizon coordinates

    bool operator==(const RolloutCommand&) const = default;
};

const char* command_kind_name(RolloutCommand::Kind k);

struct CacheRow {
    int logical_index;
    int coordinate;
    bool is_sink;
    int segment_id;
};

struct BlockRecord {
    int block = 0;
    std::array<int, 3> logical{0, 0, 0};
    std::map<int, int> coords;  // coordinates used while denoising this block
    std::vector<float> timesteps;
    std::vector<RolloutCommand> commands;          // applied after this block
    std::array<int, 3> cut_coordinates{0, 0, 0};   // set when a cut was applied
    std::optional<uint64_t> flush_token_ops;       // set when a flush was applied
    std::vector<int> residency;                    // after commit + commands
    std::vector<CacheRow> cache_rows;              // snapshot for cache_trace
    int max_coordinate = 0;
    std::optional<AttentionRecord> attention;
    Tensor output;  // denoised block, in-memory only (not serialized)
};

struct RolloutTrace {
    std::vector<BlockRecord> blocks;
    int peak_residency = 0;
    int max_coordinate = 0;
};

struct EngineConfig {
    ModelConfig model;
    int f0 = 21;
    int capacity = 6;
    CacheMode mode = CacheMode::Fixed;
    int n_blocks = 7;
    float cfg_scale = 3.0f;
    float shift = 5.0f;
    int n_steps = 4;
    bool capture = true;
    int capture_layer = 1;  // middle layer of the 2-layer default
    int capture_step = 3;   // final denoising step of the 4-step default
    std::string initial_prompt;
};

// Timestep grid: uniform u_k = 1 - k/n mapped through t = shift*u/(1+(shift-1)u),
// k = 0..n-1, descending; the sampler integrates down to t = 0 after the last
// grid point.
std::vector<float> shifted_timesteps(int n_steps, float shift);

// Number of latent frames for a clip of `video_frames` raw frames under 4x
// temporal compression: 1 + ceil((F-1)/4).
int latent_frame_count(int video_frames);

// The autoregressive rollout loop. One Engine owns one cache and runs one
// rollout; the model is shared and read-only.
class Engine {
public:
    Engine(const Model& model, const EngineConfig& config);

    // Denoises the block ending at block_logical[2] with coordinates held
    // fixed across all Euler steps. Returns the clean-block estimate.
    Tensor denoise_block(std::array<int, 3> block_logical, const PromptEmbedding& prompt,
                         AttentionRecord* record = nullptr);

    // Applies one schedule command; cmd.at_block must equal the block just
    // generated.
    void handle_command(const RolloutCommand& cmd, BlockRecord& rec);

    // Runs n_blocks blocks, applying schedule commands after their block.
    RolloutTrace rollout(const std::vector<RolloutCommand>& schedule);

    const KvCache& cache() const { return cache_; }
    KvCache& cache() { return cache_; }
    const EngineConfig& config() const { return cfg_; }

    // Test seam: replaces cfg_velocity(model(...)) with a fixed field v(x, t).
    std::function<Tensor(const Tensor&, float)> velocity_stub;

private:
    const Model& model_;
    EngineConfig cfg_;
    KvCache cache_;
    PromptEmbedding prompt_;
    PromptEmbedding uncond_;
    int current_block_ = 0;
};

// Shared by the engine and the analysis probe: applies a command's cache
// effect (flush / cut); prompt handling stays with the caller. Returns the
// cut coordinates when cmd is a cut.
std::optional<std::array<int, 3>> apply_command_to_cache(KvCache& cache,
                                                         const RolloutCommand& cmd,
                                                         std::array<int, 3> block_logical);

}  // namespace horizon
