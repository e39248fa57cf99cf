#pragma once

#include <string>
#include <vector>

#include "horizon/analysis.hpp"
#include "horizon/engine.hpp"

namespace horizon {

// File emission. All formats are deterministic byte-for-byte for a given
// trace/map; see README.md for the exact layouts.

void write_trace_jsonl(const RolloutTrace& trace, const std::string& path);
void write_cache_trace_jsonl(const RolloutTrace& trace, const std::string& path);

void write_map_csv(const FrameAttentionMap& map, const std::string& path);
void write_map_pgm(const FrameAttentionMap& map, const std::string& path);

// Read-back used by the test suite to check the files parse without loss.
FrameAttentionMap read_map_csv(const std::string& path);
std::vector<std::vector<int>> read_pgm(const std::string& path);

}  // namespace horizon
