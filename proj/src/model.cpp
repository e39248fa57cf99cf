#include "horizon/model.hpp"

#include <cmath>
#include <span>
#include <string>

#include "horizon/errors.hpp"
#include "horizon/rng.hpp"

namespace horizon {

namespace {

constexpr float kWeightScale = 0.02f;

// Separate derivation streams so weights, block noise and prompt hashing
// never collide on the same raw seed.
constexpr uint64_t kWeightStream = 1;
constexpr uint64_t kPromptStream = 3;

Tensor init_weight(const std::vector<int>& shape, uint64_t seed, uint64_t index) {
    return scale(seeded_gaussian(shape, derive_seed(derive_seed(seed, kWeightStream), index)),
                 kWeightScale);
}

float gelu(float x) {
    return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752440f));
}

}  // namespace

Model::Model(const ModelConfig& config) : cfg_(config) {
    auto split = cfg_.rope_split;
    if (split[0] == 0 && split[1] == 0 && split[2] == 0)
        split = default_rope_split(cfg_.head_dim);
    freqs_ = build_frequencies(cfg_.head_dim, split, cfg_.rope_base);

    const int d = cfg_.d_model();
    const int c = cfg_.channels;
    uint64_t idx = 0;
    w_.w_in = init_weight({c, d}, cfg_.seed, idx++);
    w_.w_time = init_weight({d, d}, cfg_.seed, idx++);
    w_.w_prompt = init_weight({d, d}, cfg_.seed, idx++);
    for (int l = 0; l < cfg_.layers; ++l) {
        LayerWeights lw;
        lw.wq = init_weight({d, d}, cfg_.seed, idx++);
        lw.wk = init_weight({d, d}, cfg_.seed, idx++);
        lw.wv = init_weight({d, d}, cfg_.seed, idx++);
        lw.wo = init_weight({d, d}, cfg_.seed, idx++);
        lw.w1 = init_weight({d, 4 * d}, cfg_.seed, idx++);
        lw.w2 = init_weight({4 * d, d}, cfg_.seed, idx++);
        lw.attn_gain = Tensor::full({d}, 1.0f);
        lw.ffn_gain = Tensor::full({d}, 1.0f);
        w_.layers.push_back(std::move(lw));
    }
    w_.final_gain = Tensor::full({d}, 1.0f);
    w_.w_out = init_weight({d, c}, cfg_.seed, idx++);
}

PromptEmbedding Model::prompt_embed(const std::string& prompt) const {
    const int d = cfg_.d_model();
    Rng rng(derive_seed(derive_seed(cfg_.seed, kPromptStream), fnv1a64(prompt)));
    std::vector<double> raw(d);
    double norm_sq = 0.0;
    for (auto& v : raw) {
        v = rng.normal();
        norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    PromptEmbedding e;
    e.label = prompt;
    e.vector.resize(d);
    for (int i = 0; i < d; ++i) e.vector[i] = static_cast<float>(raw[i] / norm);
    return e;
}

PromptEmbedding Model::zero_prompt() const {
    PromptEmbedding e;
    e.vector.assign(cfg_.d_model(), 0.0f);
    return e;
}

std::vector<float> Model::time_features(float t) const {
    const int d = cfg_.d_model();
    std::vector<float> feat(d);
    const int half = d / 2;
    for (int i = 0; i < half; ++i) {
        const double omega = std::exp(-std::log(10000.0) * i / half);
        const double a = 1000.0 * t * omega;
        feat[2 * i] = static_cast<float>(std::sin(a));
        feat[2 * i + 1] = static_cast<float>(std::cos(a));
    }
    return feat;
}

void Model::bake_spatial(Tensor& tokens) const {
    const int tpf = cfg_.tokens_per_frame();
    const int d = cfg_.d_model();
    const int hd = cfg_.head_dim;
    for (int r = 0; r < tokens.rows(); ++r) {
        const int pos = r % tpf;
        const int gh = pos / cfg_.grid_w;
        const int gw = pos % cfg_.grid_w;
        float* row = tokens.data.data() + static_cast<size_t>(r) * d;
        for (int h = 0; h < cfg_.heads; ++h) {
            std::span<float> head(row + h * hd, hd);
            rotate_pairs_inplace(head.subspan(freqs_.dim_f(), freqs_.dim_h()), gh, freqs_.freqs_h);
            rotate_pairs_inplace(head.subspan(freqs_.dim_f() + freqs_.dim_h(), freqs_.dim_w()), gw,
                                 freqs_.freqs_w);
        }
    }
}

Tensor Model::attention(const Tensor& h, int layer, const KvCache& cache,
                        const std::map<int, int>& coords, std::array<int, 3> block_frames,
                        AttentionRecord* record, BlockKv* kv_out) const {
    const int d = cfg_.d_model();
    const int hd = cfg_.head_dim;
    const int tpf = cfg_.tokens_per_frame();
    const int n_q = h.rows();
    const auto& lw = w_.layers[layer];

    for (const auto& e : cache.entries())
        if (!coords.count(e.logical_index))
            throw ProtocolError("attention: no coordinate for resident frame " +
                                std::to_string(e.logical_index));
    for (int f : block_frames)
        if (!coords.count(f))
            throw ProtocolError("attention: no coordinate for block frame " + std::to_string(f));

    Tensor q = matmul(h, lw.wq);
    Tensor k_blk = matmul(h, lw.wk);
    Tensor v_blk = matmul(h, lw.wv);
    bake_spatial(q);
    bake_spatial(k_blk);
    if (kv_out) {
        kv_out->keys.push_back(k_blk);
        kv_out->values.push_back(v_blk);
    }

    // Key list: cached frames in residency order, then the current block.
    struct KeyTokenSource {
        const Tensor* tokens;
        const Tensor* values;
        int row;
        int frame;
        double coord;
    };
    std::vector<KeyTokenSource> keys;
    for (const auto& e : cache.entries()) {
        const double c = coords.at(e.logical_index);
        for (int r = 0; r < tpf; ++r)
            keys.push_back({&e.keys[layer], &e.values[layer], r, e.logical_index, c});
    }
    for (int f = 0; f < 3; ++f) {
        const double c = coords.at(block_frames[f]);
        for (int r = 0; r < tpf; ++r)
            keys.push_back({&k_blk, &v_blk, f * tpf + r, block_frames[f], c});
    }
    const int n_k = static_cast<int>(keys.size());
    cache.add_token_ops(static_cast<uint64_t>(n_k + n_q) * cfg_.heads);

    std::vector<double> q_coord(n_q);
    for (int r = 0; r < n_q; ++r) q_coord[r] = coords.at(block_frames[r / tpf]);

    Tensor out = Tensor::zeros({n_q, d});
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
    std::vector<float> q_rot(hd), k_rot(hd);
    Tensor k_rot_all = Tensor::zeros({n_k, hd});
    Tensor attn = Tensor::zeros({n_q, n_k});

    for (int head = 0; head < cfg_.heads; ++head) {
        const int off = head * hd;
        for (int j = 0; j < n_k; ++j) {
            const auto& src = keys[j];
            const float* row = src.tokens->data.data() + static_cast<size_t>(src.row) * d + off;
            std::copy_n(row, hd, k_rot.begin());
            rotate_pairs_inplace(std::span<float>(k_rot.data(), freqs_.dim_f()), src.coord,
                                 freqs_.freqs_f);
            std::copy_n(k_rot.begin(), hd, k_rot_all.data.begin() + static_cast<size_t>(j) * hd);
        }
        for (int i = 0; i < n_q; ++i) {
            const float* row = q.data.data() + static_cast<size_t>(i) * d + off;
            std::copy_n(row, hd, q_rot.begin());
            rotate_pairs_inplace(std::span<float>(q_rot.data(), freqs_.dim_f()), q_coord[i],
                                 freqs_.freqs_f);
            for (int j = 0; j < n_k; ++j) {
                const float* kr = k_rot_all.data.data() + static_cast<size_t>(j) * hd;
                double acc = 0.0;
                for (int c = 0; c < hd; ++c) acc += static_cast<double>(q_rot[c]) * kr[c];
                attn.at(i, j) = static_cast<float>(acc * inv_sqrt);
            }
        }
        attn = softmax_rows(attn);
        if (record) record->weights.push_back(attn);

        for (int i = 0; i < n_q; ++i) {
            float* out_row = out.data.data() + static_cast<size_t>(i) * d + off;
            for (int j = 0; j < n_k; ++j) {
                const float w = attn.at(i, j);
                const auto& src = keys[j];
                const float* v_row =
                    src.values->data.data() + static_cast<size_t>(src.row) * d + off;
                for (int c = 0; c < hd; ++c) out_row[c] += w * v_row[c];
            }
        }
    }

    if (record) {
        record->layer = layer;
        record->query_frames.assign(block_frames.begin(), block_frames.end());
        record->key_frame_labels.clear();
        for (const auto& kt : keys) record->key_frame_labels.push_back(kt.frame);
    }
    return matmul(out, lw.wo);
}

Tensor Model::forward(const Tensor& x_block, float t, const PromptEmbedding& prompt,
                      const KvCache& cache, const std::map<int, int>& coords,
                      std::array<int, 3> block_frames, AttentionRecord* record, int capture_layer,
                      BlockKv* kv_out) const {
    if (t < 0.0f || t > 1.0f)
        throw DomainError("timestep " + std::to_string(t) + " outside [0, 1]");
    if (x_block.rows() != cfg_.tokens_per_block() || x_block.cols() != cfg_.channels)
        throw ShapeError("velocity_forward: block must be [3*tokens_per_frame x channels]");
    if (static_cast<int>(prompt.vector.size()) != cfg_.d_model())
        throw ShapeError("velocity_forward: prompt embedding has wrong dimension");

    Tensor e = matmul(x_block, w_.w_in);
    Tensor time_row = Tensor({1, cfg_.d_model()}, time_features(t));
    Tensor prompt_row = Tensor({1, cfg_.d_model()}, prompt.vector);
    e = add_to_rows(e, matmul(time_row, w_.w_time).data);
    e = add_to_rows(e, matmul(prompt_row, w_.w_prompt).data);

    for (int l = 0; l < cfg_.layers; ++l) {
        const auto& lw = w_.layers[l];
        AttentionRecord* rec = (record && l == capture_layer) ? record : nullptr;
        Tensor attn_out =
            attention(rms_norm(e, lw.attn_gain), l, cache, coords, block_frames, rec, kv_out);
        e = add(e, attn_out);
        Tensor hmid = matmul(rms_norm(e, lw.ffn_gain), lw.w1);
        for (auto& v : hmid.data) v = gelu(v);
        e = add(e, matmul(hmid, lw.w2));
    }
    return matmul(rms_norm(e, w_.final_gain), w_.w_out);
}

Tensor Model::velocity_forward(const Tensor& x_block, float t, const PromptEmbedding& prompt,
                               const KvCache& cache, const std::map<int, int>& coords,
                               std::array<int, 3> block_frames, AttentionRecord* record,
                               int capture_layer) const {
    return forward(x_block, t, prompt, cache, coords, block_frames, record, capture_layer,
                   nullptr);
}

void Model::commit_block_kv(const Tensor& clean_block, const PromptEmbedding& prompt,
                            KvCache& cache, const std::map<int, int>& coords,
                            std::array<int, 3> block_frames) const {
    BlockKv kv;
    forward(clean_block, 0.0f, prompt, cache, coords, block_frames, nullptr, -1, &kv);
    cache.add_token_ops(static_cast<uint64_t>(cfg_.tokens_per_block()) * cfg_.layers);
    cache.append_block(kv, block_frames);
}

Tensor cfg_velocity(const Tensor& v_cond, const Tensor& v_uncond, float scale_factor) {
    if (!v_cond.same_shape(v_uncond))
        throw ShapeError("cfg_velocity: branch shapes differ");
    return add(v_uncond, scale(sub(v_cond, v_uncond), scale_factor));
}

}  // namespace horizon
