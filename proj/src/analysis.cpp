#include "horizon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "horizon/errors.hpp"

namespace horizon {

FrameAttentionMap frame_attention_map(const std::vector<AttentionRecord>& records,
                                      bool head_averaged, bool normalized) {
    if (records.empty()) throw ProtocolError("frame_attention_map: no records");
    std::vector<const AttentionRecord*> by_block(records.size(), nullptr);
    for (const auto& r : records) {
        if (r.block < 1 || r.block > static_cast<int>(records.size()) ||
            by_block[r.block - 1] != nullptr)
            throw ProtocolError("frame_attention_map: records do not cover blocks 1.." +
                                std::to_string(records.size()) + " exactly once");
        by_block[r.block - 1] = &r;
    }

    int frames = 0;
    for (const auto* rec : by_block) frames += static_cast<int>(rec->query_frames.size());
    FrameAttentionMap map;
    map.frames = frames;
    map.m.assign(static_cast<size_t>(frames) * frames, 0.0);
    map.frame_labels.resize(frames);
    for (int i = 0; i < frames; ++i) map.frame_labels[i] = i + 1;
    map.normalized = normalized;

    for (const auto* rec : by_block) {
        if (rec->weights.empty() || rec->query_frames.empty())
            throw ProtocolError("frame_attention_map: empty record");
        const int rows = rec->weights[0].rows();
        const int tpf = rows / static_cast<int>(rec->query_frames.size());
        const int n_heads = static_cast<int>(rec->weights.size());
        // Row-normalized maps divide by tokens-per-frame and head count so
        // each row sums to 1 whether or not heads were averaged first.
        const double norm_div = normalized ? static_cast<double>(tpf) * n_heads
                                           : (head_averaged ? n_heads : 1.0);
        for (const auto& w : rec->weights) {
            for (int i = 0; i < rows; ++i) {
                const int t = rec->query_frames[i / tpf];
                for (int j = 0; j < w.cols(); ++j) {
                    const int s = rec->key_frame_labels[j];
                    map.at(t, s) += w.at(i, j) / norm_div;
                }
            }
        }
    }
    return map;
}

double sink_column_mass(const FrameAttentionMap& map) {
    if (map.frames < 2) return 0.0;
    double sum = 0.0;
    for (int t = 2; t <= map.frames; ++t) sum += map.at(t, 1);
    return sum / (map.frames - 1);
}

double band_mass(const FrameAttentionMap& map, int width) {
    if (width < 0) throw ConfigError("band width must be >= 0");
    double total = 0.0;
    for (int t = 1; t <= map.frames; ++t) {
        const int lo = std::max(1, t - width);
        const int hi = std::min(map.frames, t + width);
        for (int s = lo; s <= hi; ++s) total += map.at(t, s);
    }
    return total / map.frames;
}

double cross_boundary_mass(const FrameAttentionMap& map, int boundary_frame) {
    if (boundary_frame < 1 || boundary_frame >= map.frames)
        throw ProtocolError("boundary frame " + std::to_string(boundary_frame) +
                            " outside 1.." + std::to_string(map.frames - 1));
    double sum = 0.0;
    int rows = 0;
    for (int t = boundary_frame + 1; t <= map.frames; ++t, ++rows)
        for (int s = 2; s <= boundary_frame; ++s) sum += map.at(t, s);
    return rows > 0 ? sum / rows : 0.0;
}

double flush_suppression(const FrameAttentionMap& map, int flush_frame) {
    if (flush_frame < 1 || flush_frame > map.frames)
        throw ProtocolError("flush frame outside the map");
    double sum = 0.0;
    for (int t = flush_frame + 1; t <= map.frames; ++t)
        for (int s = 2; s < flush_frame; ++s) sum += map.at(t, s);
    return sum;
}

std::vector<int> flush_frames(const RolloutTrace& trace) {
    std::vector<int> out;
    for (const auto& b : trace.blocks)
        for (const auto& c : b.commands)
            if (c.kind == RolloutCommand::Kind::Flush) out.push_back(b.logical[2]);
    return out;
}

std::vector<int> cut_frames(const RolloutTrace& trace) {
    std::vector<int> out;
    for (const auto& b : trace.blocks)
        for (const auto& c : b.commands)
            if (c.kind == RolloutCommand::Kind::Cut) out.push_back(b.logical[2]);
    return out;
}

double flush_suppression(const FrameAttentionMap& map, const RolloutTrace& trace) {
    const auto frames = flush_frames(trace);
    if (frames.empty()) throw ProtocolError("flush_suppression: no flush in the trace");
    return flush_suppression(map, frames.front());
}

double cut_disjointness(const FrameAttentionMap& map, int cut_frame) {
    return 1.0 - cross_boundary_mass(map, cut_frame);
}

double cut_disjointness(const FrameAttentionMap& map, const RolloutTrace& trace) {
    const auto frames = cut_frames(trace);
    if (frames.empty()) throw ProtocolError("cut_disjointness: no cut in the trace");
    return cut_disjointness(map, frames.front());
}

double probe_gain(double delta, const FrequencyTable& table) {
    double g = 0.0;
    for (double f : table.freqs_f) g += std::cos(delta * f);
    return g;
}

ProbeResult rope_probe_map(const ProbeConfig& config,
                           const std::vector<RolloutCommand>& schedule) {
    auto split = config.rope_split;
    if (split[0] == 0 && split[1] == 0 && split[2] == 0)
        split = default_rope_split(config.head_dim);
    const FrequencyTable table = build_frequencies(config.head_dim, split, config.rope_base);
    const double lambda = 1.0 / std::sqrt(static_cast<double>(table.dim_f()));

    KvCache cache(config.mode, config.capacity, config.f0, config.f_limit);
    const int frames = 3 * config.n_blocks;

    ProbeResult out;
    out.map.frames = frames;
    out.map.m.assign(static_cast<size_t>(frames) * frames, 0.0);
    out.map.frame_labels.resize(frames);
    for (int i = 0; i < frames; ++i) out.map.frame_labels[i] = i + 1;
    out.map.normalized = true;

    size_t next_cmd = 0;
    for (size_t i = 0; i + 1 < schedule.size(); ++i)
        if (schedule[i].at_block > schedule[i + 1].at_block)
            throw ProtocolError("schedule commands out of order");

    for (int b = 1; b <= config.n_blocks; ++b) {
        const std::array<int, 3> blk = {3 * b - 2, 3 * b - 1, 3 * b};
        const auto coords = cache.assign_coordinates(blk[2]);

        BlockRecord rec;
        rec.block = b;
        rec.logical = blk;
        rec.coords = coords;

        // Visible key frames: residents plus the block itself, each
        // contributing tokens_per_frame identical tokens.
        std::vector<std::pair<int, int>> visible;  // (logical, coordinate)
        for (int logical : cache.resident_frames()) visible.push_back({logical, coords.at(logical)});
        for (int f : blk) visible.push_back({f, coords.at(f)});

        for (int f : blk) {
            const double cq = coords.at(f);
            double max_logit = -1e300;
            std::vector<double> logits(visible.size());
            for (size_t j = 0; j < visible.size(); ++j) {
                logits[j] = lambda * probe_gain(cq - visible[j].second, table);
                max_logit = std::max(max_logit, logits[j]);
            }
            double denom = 0.0;
            for (double& lg : logits) {
                lg = static_cast<double>(config.tokens_per_frame) * std::exp(lg - max_logit);
                denom += lg;
            }
            for (size_t j = 0; j < visible.size(); ++j)
                out.map.at(f, visible[j].first) += logits[j] / denom;
        }

        cache.append_block(BlockKv{}, blk);

        while (next_cmd < schedule.size() && schedule[next_cmd].at_block == b) {
            const auto& cmd = schedule[next_cmd];
            if (cmd.kind == RolloutCommand::Kind::Cut && cmd.delta < 1)
                throw ConfigError("cut delta must be >= 1");
            const auto cut = apply_command_to_cache(cache, cmd, blk);
            if (cut) rec.cut_coordinates = *cut;
            if (cmd.kind == RolloutCommand::Kind::Flush) rec.flush_token_ops = 0;
            rec.commands.push_back(cmd);
            ++next_cmd;
        }

        const auto snapshot = cache.assign_coordinates(blk[2]);
        rec.residency = cache.resident_frames();
        for (const auto& e : cache.entries())
            rec.cache_rows.push_back(
                {e.logical_index, snapshot.at(e.logical_index), e.is_sink, e.segment_id});
        for (const auto& [frame, coord] : rec.coords)
            rec.max_coordinate = std::max(rec.max_coordinate, coord);
        out.trace.max_coordinate = std::max(out.trace.max_coordinate, rec.max_coordinate);
        out.trace.blocks.push_back(std::move(rec));
    }
    out.trace.peak_residency = cache.peak_residency();
    return out;
}

}  // namespace horizon
