#include "horizon/kv_cache.hpp"

#include <algorithm>
#include <string>

#include "horizon/errors.hpp"

namespace horizon {

KvCache::KvCache(CacheMode mode, int capacity, int onset_f0, int f_limit)
    : mode_(mode), capacity_(capacity), f0_(onset_f0), f_limit_(f_limit) {
    if (f_limit_ < 1) throw ConfigError("f_limit must be >= 1");
    if (f0_ < 1 || f0_ > f_limit_)
        throw ConfigError("onset f0 must lie in [1, f_limit]");
    if (mode_ == CacheMode::Fixed && capacity_ < 3)
        throw ConfigError("fixed-mode capacity must hold at least one 3-frame block");
}

int KvCache::non_sink_count() const {
    int n = 0;
    for (const auto& e : entries_)
        if (!e.is_sink) ++n;
    return n;
}

const FrameEntry* KvCache::find(int logical_index) const {
    for (const auto& e : entries_)
        if (e.logical_index == logical_index) return &e;
    return nullptr;
}

void KvCache::evict_oldest_block() {
    int oldest = -1;
    for (const auto& e : entries_)
        if (!e.is_sink && (oldest < 0 || e.block_id < oldest)) oldest = e.block_id;
    if (oldest < 0) throw ProtocolError("cache has nothing evictable");
    std::erase_if(entries_, [oldest](const FrameEntry& e) {
        return !e.is_sink && e.block_id == oldest;
    });
}

void KvCache::append_block(const BlockKv& kv, std::array<int, 3> logical_indices) {
    for (int k = 0; k < 3; ++k)
        if (logical_indices[k] != next_logical_ + k)
            throw ProtocolError("append_block: indices must be the consecutive block {" +
                                std::to_string(next_logical_) + ".." +
                                std::to_string(next_logical_ + 2) + "}");
    if (kv.keys.size() != kv.values.size())
        throw ShapeError("append_block: key/value layer counts differ");
    for (size_t l = 0; l < kv.keys.size(); ++l) {
        if (kv.keys[l].rows() % 3 != 0 || !kv.keys[l].same_shape(kv.values[l]))
            throw ShapeError("append_block: block K/V must hold 3 equal frame slices");
    }

    if (mode_ == CacheMode::Fixed) {
        while (non_sink_count() + 3 > capacity_ && non_sink_count() > 0) evict_oldest_block();
    }

    const int layers = static_cast<int>(kv.keys.size());
    const int block_id = next_block_id_++;
    for (int k = 0; k < 3; ++k) {
        FrameEntry e;
        e.logical_index = logical_indices[k];
        e.effective_index = ++effective_end_;
        e.is_sink = (e.logical_index == 1);
        e.segment_id = segment_;
        e.block_id = block_id;
        e.keys.reserve(layers);
        e.values.reserve(layers);
        for (int l = 0; l < layers; ++l) {
            const Tensor& bk = kv.keys[l];
            const Tensor& bv = kv.values[l];
            const int tpf = bk.rows() / 3;
            const int cols = bk.cols();
            Tensor fk = Tensor::zeros({tpf, cols});
            Tensor fv = Tensor::zeros({tpf, cols});
            std::copy_n(bk.data.begin() + static_cast<size_t>(k) * tpf * cols,
                        static_cast<size_t>(tpf) * cols, fk.data.begin());
            std::copy_n(bv.data.begin() + static_cast<size_t>(k) * tpf * cols,
                        static_cast<size_t>(tpf) * cols, fv.data.begin());
            e.keys.push_back(std::move(fk));
            e.values.push_back(std::move(fv));
        }
        entries_.push_back(std::move(e));
    }
    next_logical_ += 3;
    peak_residency_ = std::max(peak_residency_, static_cast<int>(entries_.size()));
}

int KvCache::effective_end_for(int i) const {
    const int pending_end = next_logical_ + 2;
    if (i == pending_end) return effective_end_ + 3;
    if (!entries_.empty() && i == entries_.back().logical_index) {
        // After a cut the newest block's own indices moved forward; the
        // conceptual block end is the pre-cut one the counter rolled back to.
        if (entries_.back().cut_coordinate_override) return effective_end_ + 3;
        return entries_.back().effective_index;
    }
    if (!entries_.empty() && i < entries_.back().logical_index)
        throw ProtocolError("assign_coordinates: cache holds frames newer than block end " +
                            std::to_string(i));
    throw ProtocolError("assign_coordinates: " + std::to_string(i) +
                        " is neither the newest frame nor the pending block end");
}

std::map<int, int> KvCache::assign_coordinates(int i) const {
    const int eff_end = effective_end_for(i);
    const int anchor = std::min(eff_end, f0_);
    std::map<int, int> coords;
    for (const auto& e : entries_)
        coords[e.logical_index] = std::max(1, anchor - (eff_end - e.effective_index));
    if (i == next_logical_ + 2) {
        coords[i - 2] = anchor - 2;
        coords[i - 1] = anchor - 1;
        coords[i] = anchor;
    }
    return coords;
}

void KvCache::kv_flush() {
    if (entries_.empty()) throw ProtocolError("kv_flush on an empty cache");
    if (non_sink_count() == 0)
        throw ProtocolError("kv_flush needs at least one non-sink resident frame");
    const int last = entries_.back().logical_index;
    std::erase_if(entries_, [last](const FrameEntry& e) {
        return !e.is_sink && e.logical_index != last;
    });
}

std::array<int, 3> KvCache::apply_cut(std::array<int, 3> current_block, int delta, bool forced) {
    if (delta < 1) throw ConfigError("cut delta must be >= 1");
    if (entries_.size() < 3) throw ProtocolError("apply_cut: no active block");
    FrameEntry* blk[3];
    for (int k = 0; k < 3; ++k) {
        auto& e = entries_[entries_.size() - 3 + k];
        if (e.logical_index != current_block[k])
            throw ProtocolError("apply_cut: block does not match the newest resident frames");
        if (e.cut_coordinate_override)
            throw ProtocolError("apply_cut: block was already cut");
        blk[k] = &e;
    }
    const int eff_end = effective_end_;
    const int anchor = std::min(eff_end, f0_);
    if (anchor + delta > f_limit_ && !forced)
        throw RangeError("cut to coordinate " + std::to_string(anchor + delta) +
                         " exceeds f_limit " + std::to_string(f_limit_) +
                         " (force to extrapolate)");
    blk[1]->effective_index = eff_end + delta - 1;
    blk[2]->effective_index = eff_end + delta;
    blk[0]->cut_coordinate_override = anchor - 2;
    blk[1]->cut_coordinate_override = anchor + delta - 1;
    blk[2]->cut_coordinate_override = anchor + delta;
    // Next block re-occupies the span the cut block vacated.
    effective_end_ = eff_end - 3;
    ++segment_;
    return {anchor - 2, anchor + delta - 1, anchor + delta};
}

std::vector<int> KvCache::semanticize(int current_block_end) const {
    if (mode_ != CacheMode::Unbounded)
        throw ProtocolError("semanticize applies to unbounded caches only");
    const int eff_end = effective_end_for(current_block_end);
    const int anchor = std::min(eff_end, f0_);
    std::vector<int> clamped;
    for (const auto& e : entries_)
        if (anchor - (eff_end - e.effective_index) < 1) clamped.push_back(e.logical_index);
    return clamped;
}

std::vector<int> KvCache::resident_frames() const {
    std::vector<int> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.logical_index);
    return out;
}

}  // namespace horizon
