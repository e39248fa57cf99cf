#pragma once

#include <string>
#include <vector>

#include "horizon/analysis.hpp"
#include "horizon/run_config.hpp"

namespace horizon {

// Exit codes: 0 success, 2 config error, 3 protocol error, 4 range error.

struct RunArtifacts {
    RolloutTrace trace;
    FrameAttentionMap map;  // frames == 0 when capture is off
};

// Executes a rollout and writes trace.jsonl, cache_trace.jsonl and (when
// capturing) attnmap_layer<L>.csv/.pgm into out_dir.
RunArtifacts cmd_run(const RunConfig& config, const std::string& out_dir, bool force_cut = false);

// Runs the coordinate probe under the same schedule and emits the same file
// set (the attention map is the analytic probe map).
ProbeResult cmd_probe(const RunConfig& config, const std::string& out_dir,
                      bool force_cut = false);

// One run per value in out_dir/<param>_<value>/, plus summary.csv with the
// probe property metrics per value. For param "delta" the schedule's cuts
// take each swept value (one is injected at block 2 if the schedule has
// none), cuts run forced, values above f_limit are flagged out-of-horizon,
// and monotonicity.csv reports the probe cut-disjointness trend.
void cmd_sweep(const RunConfig& config, const std::string& param,
               const std::vector<long>& values, const std::string& out_dir);

// Full command-line entry point; maps errors onto the exit codes above.
int run_cli(int argc, char** argv);

}  // namespace horizon
