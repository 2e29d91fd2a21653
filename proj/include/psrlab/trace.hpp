#pragma once

#include <vector>

namespace psrlab {

struct StepRecord {
    long t = 0;
    int state = 0;
    int action = 0;
    double reward = 0.0;
};

struct EpisodeRecord {
    long start = 0;
    long length = 0;
    int sampled_member = -1;  // -1 when the agent has no member notion
    bool mismatch = false;    // episode policy differs from the true optimum
    // Exact conditional mismatch probability of the posterior used to sample
    // this episode; NaN for agents without an exact posterior.
    double posterior_mismatch = 0.0;
};

// Per-run record for regret accounting: every step plus per-episode summary.
struct RunTrace {
    std::vector<StepRecord> steps;
    std::vector<EpisodeRecord> episodes;
    int true_member = -1;
    double true_gain = 0.0;
};

}  // namespace psrlab
