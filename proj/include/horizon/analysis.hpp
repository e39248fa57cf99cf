#pragma once

#include <vector>

#include "horizon/engine.hpp"
#include "horizon/model.hpp"
#include "horizon/rope.hpp"

namespace horizon {

// T x T frame-level attention matrix: row t holds where frame t looked while
// its block was denoised. Columns of frames already evicted at that time are
// exactly zero.
struct FrameAttentionMap {
    int frames = 0;
    std::vector<double> m;        // row-major T x T
    std::vector<int> frame_labels;  // logical indices, 1..T
    bool normalized = false;

    double at(int t_label, int s_label) const {
        return m[static_cast<size_t>(t_label - 1) * frames + (s_label - 1)];
    }
    double& at(int t_label, int s_label) {
        return m[static_cast<size_t>(t_label - 1) * frames + (s_label - 1)];
    }
};

// Aggregates token-level records (one per block, same layer) to frame level:
// M[t][s] = sum over token pairs of attention, averaged over heads when
// head_averaged, divided by tokens-per-frame when normalized so each row
// sums to 1. Records must cover blocks 1..N contiguously.
FrameAttentionMap frame_attention_map(const std::vector<AttentionRecord>& records,
                                      bool head_averaged = true, bool normalized = true);

// Mean over query frames t > 1 of M[t][1] (frame 1 is the global sink).
double sink_column_mass(const FrameAttentionMap& map);

// Mean over t of the row mass within |t - s| <= width.
double band_mass(const FrameAttentionMap& map, int width);

// Mean over rows t > boundary of the mass on columns 2..boundary (sink
// excluded). Building block for the flush/cut metrics and their controls.
double cross_boundary_mass(const FrameAttentionMap& map, int boundary_frame);

// Total post-flush mass onto the frames the flush evicted (columns
// 2..flush_frame-1, rows > flush_frame). Eviction is physical, so this is 0.
double flush_suppression(const FrameAttentionMap& map, int flush_frame);
double flush_suppression(const FrameAttentionMap& map, const RolloutTrace& trace);

// 1 - cross_boundary_mass at the cut frame.
double cut_disjointness(const FrameAttentionMap& map, int cut_frame);
double cut_disjointness(const FrameAttentionMap& map, const RolloutTrace& trace);

// Frames at which a flush / cut command was applied (logical index of the
// block end), in rollout order.
std::vector<int> flush_frames(const RolloutTrace& trace);
std::vector<int> cut_frames(const RolloutTrace& trace);

// Closed-form probe logit gain: the temporal-slice inner product of a
// constant per-pair unit vector rotated to coordinate distance delta,
//   g(delta) = sum_j cos(delta * freqs_f[j]),   g(0) = pairs_f = |v|^2.
double probe_gain(double delta, const FrequencyTable& table);

struct ProbeResult {
    FrameAttentionMap map;
    RolloutTrace trace;
};

struct ProbeConfig {
    CacheMode mode = CacheMode::Fixed;
    int capacity = 6;
    int f0 = 21;
    int f_limit = 21;
    int n_blocks = 7;
    int tokens_per_frame = 16;
    int head_dim = 16;
    double rope_base = 10000.0;
    std::array<int, 3> rope_split{0, 0, 0};
};

// Runs the cache/coordinate machinery under the schedule with an analytic
// attention head: every query and key is the same constant vector under
// temporal RoPE only, so logits depend on coordinate differences alone and
// the resulting map is exactly predictable.
ProbeResult rope_probe_map(const ProbeConfig& config,
                           const std::vector<RolloutCommand>& schedule);

}  // namespace horizon
