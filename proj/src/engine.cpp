#include "horizon/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "horizon/errors.hpp"
#include "horizon/rng.hpp"

namespace horizon {

namespace {
constexpr uint64_t kNoiseStream = 2;
}

const char* command_kind_name(RolloutCommand::Kind k) {
    switch (k) {
        case RolloutCommand::Kind::Continue: return "continue";
        case RolloutCommand::Kind::Flush: return "flush";
        case RolloutCommand::Kind::Cut: return "cut";
        case RolloutCommand::Kind::SetPrompt: return "prompt";
    }
    return "?";
}

std::vector<float> shifted_timesteps(int n_steps, float shift) {
    if (n_steps < 1) throw ConfigError("n_steps must be >= 1");
    if (!(shift > 0.0f)) throw ConfigError("timestep shift must be > 0");
    std::vector<float> ts(n_steps);
    for (int k = 0; k < n_steps; ++k) {
        const double u = 1.0 - static_cast<double>(k) / n_steps;
        ts[k] = static_cast<float>(shift * u / (1.0 + (static_cast<double>(shift) - 1.0) * u));
    }
    return ts;
}

int latent_frame_count(int video_frames) {
    return 1 + (video_frames - 1 + 3) / 4;
}

std::optional<std::array<int, 3>> apply_command_to_cache(KvCache& cache,
                                                         const RolloutCommand& cmd,
                                                         std::array<int, 3> block_logical) {
    switch (cmd.kind) {
        case RolloutCommand::Kind::Flush:
            cache.kv_flush();
            return std::nullopt;
        case RolloutCommand::Kind::Cut:
            return cache.apply_cut(block_logical, cmd.delta, cmd.forced);
        case RolloutCommand::Kind::Continue:
        case RolloutCommand::Kind::SetPrompt:
            return std::nullopt;
    }
    return std::nullopt;
}

Engine::Engine(const Model& model, const EngineConfig& config)
    : model_(model),
      cfg_(config),
      cache_(config.mode, config.capacity, config.f0, config.model.f_limit),
      prompt_(model.prompt_embed(config.initial_prompt)),
      uncond_(model.zero_prompt()) {
    if (cfg_.n_blocks < 1) throw ConfigError("n_blocks must be >= 1");
    if (cfg_.capture) {
        if (cfg_.capture_layer < 0 || cfg_.capture_layer >= cfg_.model.layers)
            throw ConfigError("capture_layer out of range");
        if (cfg_.capture_step < 0 || cfg_.capture_step >= cfg_.n_steps)
            throw ConfigError("capture_step out of range");
    }
}

Tensor Engine::denoise_block(std::array<int, 3> block_logical, const PromptEmbedding& prompt,
                             AttentionRecord* record) {
    const auto coords = cache_.assign_coordinates(block_logical[2]);
    const int block_index = (block_logical[2] + 2) / 3;
    Tensor x = seeded_gaussian({cfg_.model.tokens_per_block(), cfg_.model.channels},
                               derive_seed(derive_seed(cfg_.model.seed, kNoiseStream),
                                           static_cast<uint64_t>(block_index)));
    const auto ts = shifted_timesteps(cfg_.n_steps, cfg_.shift);
    for (int k = 0; k < cfg_.n_steps; ++k) {
        const float t = ts[k];
        const float t_next = (k + 1 < cfg_.n_steps) ? ts[k + 1] : 0.0f;
        Tensor v;
        if (velocity_stub) {
            v = velocity_stub(x, t);
        } else {
            AttentionRecord* rec = (record && k == cfg_.capture_step) ? record : nullptr;
            Tensor v_cond = model_.velocity_forward(x, t, prompt, cache_, coords, block_logical,
                                                    rec, cfg_.capture_layer);
            Tensor v_uncond =
                model_.velocity_forward(x, t, uncond_, cache_, coords, block_logical);
            v = cfg_velocity(v_cond, v_uncond, cfg_.cfg_scale);
        }
        x = add(x, scale(v, t_next - t));
    }
    return x;
}

void Engine::handle_command(const RolloutCommand& cmd, BlockRecord& rec) {
    if (cmd.at_block != current_block_)
        throw ProtocolError("command for block " + std::to_string(cmd.at_block) +
                            " handled at block " + std::to_string(current_block_));
    const std::array<int, 3> blk = {3 * current_block_ - 2, 3 * current_block_ - 1,
                                    3 * current_block_};
    if (cmd.kind == RolloutCommand::Kind::Flush) {
        const uint64_t before = cache_.token_ops();
        apply_command_to_cache(cache_, cmd, blk);
        rec.flush_token_ops = cache_.token_ops() - before;
        prompt_ = model_.prompt_embed(cmd.prompt);
    } else if (cmd.kind == RolloutCommand::Kind::Cut) {
        const auto cut = apply_command_to_cache(cache_, cmd, blk);
        rec.cut_coordinates = *cut;
    } else if (cmd.kind == RolloutCommand::Kind::SetPrompt) {
        prompt_ = model_.prompt_embed(cmd.prompt);
    }
    rec.commands.push_back(cmd);
}

RolloutTrace Engine::rollout(const std::vector<RolloutCommand>& schedule) {
    for (size_t i = 0; i + 1 < schedule.size(); ++i)
        if (schedule[i].at_block > schedule[i + 1].at_block)
            throw ProtocolError("schedule commands out of order");
    for (const auto& cmd : schedule) {
        if (cmd.at_block < 1) throw ConfigError("command at_block must be >= 1");
        if (cmd.kind == RolloutCommand::Kind::Cut && cmd.delta < 1)
            throw ConfigError("cut delta must be >= 1");
    }

    RolloutTrace trace;
    size_t next_cmd = 0;
    for (current_block_ = 1; current_block_ <= cfg_.n_blocks; ++current_block_) {
        const std::array<int, 3> blk = {3 * current_block_ - 2, 3 * current_block_ - 1,
                                        3 * current_block_};
        BlockRecord rec;
        rec.block = current_block_;
        rec.logical = blk;
        rec.coords = cache_.assign_coordinates(blk[2]);
        rec.timesteps = shifted_timesteps(cfg_.n_steps, cfg_.shift);

        AttentionRecord att;
        att.block = current_block_;
        Tensor clean = denoise_block(blk, prompt_, cfg_.capture ? &att : nullptr);
        model_.commit_block_kv(clean, prompt_, cache_, rec.coords, blk);
        if (cfg_.capture) rec.attention = std::move(att);
        rec.output = std::move(clean);

        while (next_cmd < schedule.size() && schedule[next_cmd].at_block == current_block_) {
            handle_command(schedule[next_cmd], rec);
            ++next_cmd;
        }

        const auto snapshot = cache_.assign_coordinates(blk[2]);
        rec.residency = cache_.resident_frames();
        for (const auto& e : cache_.entries())
            rec.cache_rows.push_back(
                {e.logical_index, snapshot.at(e.logical_index), e.is_sink, e.segment_id});
        for (const auto& [frame, coord] : rec.coords)
            rec.max_coordinate = std::max(rec.max_coordinate, coord);
        trace.max_coordinate = std::max(trace.max_coordinate, rec.max_coordinate);
        trace.blocks.push_back(std::move(rec));
    }
    trace.peak_residency = cache_.peak_residency();
    return trace;
}

}  // namespace horizon
