#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "horizon/kv_cache.hpp"
#include "horizon/rope.hpp"
#include "horizon/tensor.hpp"

namespace horizon {

struct ModelConfig {
    int layers = 2;
    int heads = 2;
    int head_dim = 16;
    int grid_h = 4;
    int grid_w = 4;
    int channels = 32;
    int f_limit = 21;
    uint64_t seed = 0;
    double rope_base = 10000.0;
    std::array<int, 3> rope_split{0, 0, 0};  // all-zero means default_rope_split

    int d_model() const { return heads * head_dim; }
    int tokens_per_frame() const { return grid_h * grid_w; }
    int tokens_per_block() const { return 3 * tokens_per_frame(); }

    bool operator==(const ModelConfig&) const = default;
};

struct PromptEmbedding {
    std::vector<float> vector;  // unit norm, d_model long; all-zero = unconditional
    std::string label;
};

// Token-level attention weights captured at one layer for one block: one row
// per query token (grouped by frame), one column per visible key token.
struct AttentionRecord {
    int layer = 0;
    int block = 0;
    std::vector<int> query_frames;      // logical indices, one per frame of rows
    std::vector<int> key_frame_labels;  // per key token
    std::vector<Tensor> weights;        // per head, [n_query_tokens x n_keys]
};

struct LayerWeights {
    Tensor wq, wk, wv, wo;  // [d_model x d_model]
    Tensor w1, w2;          // [d_model x 4*d_model], [4*d_model x d_model]
    Tensor attn_gain, ffn_gain;
};

struct ModelWeights {
    Tensor w_in;      // [channels x d_model]
    Tensor w_time;    // [d_model x d_model]
    Tensor w_prompt;  // [d_model x d_model]
    std::vector<LayerWeights> layers;
    Tensor final_gain;
    Tensor w_out;  // [d_model x channels]
};

// Frozen-weight block-causal diffusion transformer over synthetic latents.
// Queries of the current block attend bidirectionally within the block and
// causally to every cached frame; temporal RoPE is applied at attention time
// using the coordinates handed in, so re-anchoring never touches stored keys.
class Model {
public:
    explicit Model(const ModelConfig& config);

    const ModelConfig& config() const { return cfg_; }
    const FrequencyTable& frequencies() const { return freqs_; }
    ModelWeights& weights() { return w_; }
    const ModelWeights& weights() const { return w_; }

    // Deterministic unit conditioning vector from a seeded hash of the prompt.
    PromptEmbedding prompt_embed(const std::string& prompt) const;
    PromptEmbedding zero_prompt() const;

    // Velocity field for one block of tokens [3*tpf x channels] at timestep t,
    // reading the cache at the given temporal coordinates. block_frames are
    // the logical indices of the block being denoised. Optionally captures
    // attention weights at capture_layer into *record.
    Tensor velocity_forward(const Tensor& x_block, float t, const PromptEmbedding& prompt,
                            const KvCache& cache, const std::map<int, int>& coords,
                            std::array<int, 3> block_frames, AttentionRecord* record = nullptr,
                            int capture_layer = -1) const;

    // Runs the forward pass at the final conditioning (t = 0) and appends the
    // block's per-layer K/V to the cache. Keys keep their spatial rotation
    // baked in but no temporal rotation.
    void commit_block_kv(const Tensor& clean_block, const PromptEmbedding& prompt,
                         KvCache& cache, const std::map<int, int>& coords,
                         std::array<int, 3> block_frames) const;

private:
    Tensor forward(const Tensor& x_block, float t, const PromptEmbedding& prompt,
                   const KvCache& cache, const std::map<int, int>& coords,
                   std::array<int, 3> block_frames, AttentionRecord* record, int capture_layer,
                   BlockKv* kv_out) const;

    Tensor attention(const Tensor& h, int layer, const KvCache& cache,
                     const std::map<int, int>& coords, std::array<int, 3> block_frames,
                     AttentionRecord* record, BlockKv* kv_out) const;

    // Rotates the height/width slices of every head of every row for the
    // block's token grid. Temporal slices are left alone.
    void bake_spatial(Tensor& tokens) const;

    std::vector<float> time_features(float t) const;

    ModelConfig cfg_;
    FrequencyTable freqs_;
    ModelWeights w_;
};

// v_uncond + scale * (v_cond - v_uncond).
Tensor cfg_velocity(const Tensor& v_cond, const Tensor& v_uncond, float scale);

}  // namespace horizon
