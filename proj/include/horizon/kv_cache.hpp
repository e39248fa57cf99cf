#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "horizon/tensor.hpp"

namespace horizon {

enum class CacheMode { Fixed, Unbounded };

// Per-layer key/value tensors for one 3-frame block, rows grouped by frame.
// Keys are stored without their temporal rotation (spatial axes may already
// be baked in); the cache never rotates anything itself.
struct BlockKv {
    std::vector<Tensor> keys;    // per layer, [3*tokens_per_frame x d_model]
    std::vector<Tensor> values;  // per layer, same shape
};

struct FrameEntry {
    int logical_index = 0;    // global 1-based latent frame counter
    int effective_index = 0;  // index the coordinate law sees; cuts move it
    bool is_sink = false;
    int segment_id = 0;
    int block_id = 0;  // append unit, also the eviction unit
    std::optional<int> cut_coordinate_override;  // coordinate recorded at cut time
    std::vector<Tensor> keys;    // per layer, [tokens_per_frame x d_model]
    std::vector<Tensor> values;
};

// KV-cache state machine. Stores un-rotated keys/values per latent frame and
// assigns every resident frame a temporal coordinate relative to a moving
// window: the newest block sits at {a-2, a-1, a} with a = min(i, f0), and a
// frame with effective index e gets max(1, a - (i_eff - e)). The max(1, .)
// clamp collapses frames older than the horizon onto the shared index 1.
class KvCache {
public:
    KvCache(CacheMode mode, int capacity, int onset_f0, int f_limit);

    // Appends one block of 3 consecutive frames. Indices must continue the
    // global counter. In fixed mode the oldest non-sink block is evicted
    // first whenever the new block would exceed capacity. Frame 1 becomes
    // the permanent sink.
    void append_block(const BlockKv& kv, std::array<int, 3> logical_indices);

    // Temporal coordinate for every resident frame plus the block ending at
    // logical index i (which may still be pending commit). i must be either
    // the newest resident index or the end of the next block.
    std::map<int, int> assign_coordinates(int current_block_end) const;

    // Drops everything except the sink and the newest frame. Performs no
    // per-token work; the token-op counter is untouched.
    void kv_flush();

    // Re-anchors the newest committed block {f-2, f-1, f}: the first frame
    // keeps its coordinate, the last two jump to anchor+delta-1, anchor+delta.
    // Raises RangeError if the jump leaves [1, f_limit] and forced is false.
    // Subsequent blocks resume from the pre-cut anchor span. Returns the
    // block's new coordinates.
    std::array<int, 3> apply_cut(std::array<int, 3> current_block, int delta, bool forced = false);

    // Unbounded-mode check of the horizon clamp: returns the logical indices
    // whose raw coordinate fell below 1 at the given block end.
    std::vector<int> semanticize(int current_block_end) const;

    std::vector<int> resident_frames() const;

    const std::vector<FrameEntry>& entries() const { return entries_; }
    const FrameEntry* find(int logical_index) const;

    CacheMode mode() const { return mode_; }
    int capacity() const { return capacity_; }
    int onset_f0() const { return f0_; }
    int f_limit() const { return f_limit_; }
    int next_logical() const { return next_logical_; }
    int current_segment() const { return segment_; }
    int non_sink_count() const;
    int peak_residency() const { return peak_residency_; }

    // Instrumentation: per-token work done on behalf of this cache
    // (rotations during attention, KV writes). Mutable so read-only model
    // passes can account their work.
    uint64_t token_ops() const { return token_ops_; }
    void add_token_ops(uint64_t n) const { token_ops_ += n; }

private:
    int effective_end_for(int current_block_end) const;
    void evict_oldest_block();

    CacheMode mode_;
    int capacity_;
    int f0_;
    int f_limit_;
    std::vector<FrameEntry> entries_;
    int next_logical_ = 1;   // logical index the next appended frame must carry
    int effective_end_ = 0;  // effective index of the newest appended frame
    int next_block_id_ = 0;
    int segment_ = 0;
    int peak_residency_ = 0;
    mutable uint64_t token_ops_ = 0;
};

}  // namespace horizon
