#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psrlab/family.hpp"
#include "psrlab/ipsrl.hpp"
#include "psrlab/irlsvi.hpp"
#include "psrlab/schedule.hpp"
#include "psrlab/trace.hpp"

namespace psrlab {

// ---------------------------------------------------------------------------
// Rng stream discipline: every Monte Carlo task owns one Rng seeded by
// chaining derive_seed over (master, purpose, index...) counters:
//   epsilon estimation   derive(derive(derive(master, 1), n_index), run)
//   experiment run       derive(derive(derive(master, 2), agent_index), run)
//   lemma-2 check        derive(seed, run)
//   mismatch curve       derive(seed, run)
// A task consumes its stream sequentially (member draw, dataset draws, agent
// draws), so experiment cells that differ only in the offline size share the
// member and the dataset prefix run by run. Aggregation happens in run-index
// order on a single thread; --threads only changes scheduling.
// ---------------------------------------------------------------------------

// Partial sums of (true_gain - reward_t); entry i covers steps 0..i.
std::vector<double> cumulative_regret(const RunTrace& trace);

struct RegretReport {
    std::vector<long> checkpoints;
    std::vector<double> mean_regret;
    std::vector<double> stderr_regret;  // sample sd / sqrt(runs)
    int runs = 0;
    std::string config_digest;
};

struct BoundReport {
    double epsilon = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
    double r3 = 0.0;
    double total = 0.0;  // 3 vbar + 2 vbar (r1 + r2 + r3)
    struct Inputs {
        int num_states = 0;
        int num_actions = 0;
        long horizon = 0;
        long num_episodes = 0;  // K_T of the realized schedule
        long max_episode_len = 0;
        double vbar = 0.0;
    } inputs;
};

// Prior-dependent regret bound evaluated for a concrete schedule. Natural
// logs except the explicitly base-2 one in r3.
BoundReport theorem1_bound(double epsilon, int num_states, int num_actions,
                           long horizon, const EpisodeSchedule& schedule,
                           double vbar);

// Expert description used by the harness-level estimators; the exact path
// requires infinite lambda.
struct ExpertSetup {
    double beta = 10.0;
    double lambda = std::numeric_limits<double>::infinity();
    int start_state = 0;
};

struct EpsilonEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    int runs = 0;
};

// Initial mismatch probability: per run, draw a member from the prior,
// generate offline data, and record the exact conditional mismatch of the
// informed prior (a Rao-Blackwellized estimate of the unconditional one).
EpsilonEstimate estimate_epsilon(const ParameterFamily& family,
                                 const ExpertSetup& expert, long offline_n,
                                 int runs, std::uint64_t seed);

struct Lemma2Report {
    double p1 = 0.0;  // mismatch of a posterior sample (Rao-Blackwellized)
    double se1 = 0.0;
    double p2 = 0.0;  // mismatch of the majority-vote estimate
    double se2 = 0.0;
    double threshold = 0.0;  // 2 p2 + 3 pooled stderr
    bool pass = false;
    int runs = 0;
};

// Checks p1 <= 2 p2 + 3 * sqrt(se1^2 + (2 se2)^2) by Monte Carlo.
Lemma2Report lemma2_check(const ParameterFamily& family,
                          const ExpertSetup& expert, long offline_n, int runs,
                          std::uint64_t seed);

struct MismatchCurve {
    std::vector<int> episodes;       // 1-based episode indices
    std::vector<double> estimate;    // Rao-Blackwellized Pr(policy mismatch)
    std::vector<double> stderr_;
};

// Mismatch probability at selected episodes of the posterior-sampling agent,
// averaged over runs with the member redrawn from the prior each run. The
// horizon is sized so the schedule emits exactly max(episodes) episodes.
MismatchCurve mismatch_by_episode(const ParameterFamily& family,
                                  const ExpertSetup& expert, long offline_n,
                                  const std::vector<int>& episodes,
                                  const EpisodeSchedule& schedule, int runs,
                                  std::uint64_t seed);

// --------------------------- experiment engine ----------------------------

struct FamilyConfig {
    std::string type = "random";  // "random" | "riverswim"
    int num_states = 5;
    int num_actions = 3;
    int family_size = 20;
    double min_prob = 0.05;
    std::uint64_t seed = 1;
    // riverswim extras
    double right_success = 0.6;
    double left_reward = 0.005;
    double right_reward = 1.0;
    double perturbation = 0.05;
};

struct AgentConfig {
    std::string type = "ipsrl";  // "ipsrl" | "irlsvi"
    std::string schedule = "linear";  // linear | eps:<x> | eps:auto | const:<n>
    IrlsviHyper hyper;
    MinimizeOpts opts;
};

struct ExperimentConfig {
    FamilyConfig family;
    ExpertSetup expert;
    std::vector<long> n_grid{0};
    std::vector<AgentConfig> agents;
    long horizon = 10000;
    int runs = 100;
    std::vector<long> checkpoints;
    int epsilon_runs = 500;
    std::uint64_t master_seed = 1;
};

ParameterFamily build_family(const FamilyConfig& config);

// Parses and validates a config document; error messages carry field paths.
ExperimentConfig experiment_config_from_text(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Runs the full sweep and writes regret_<cell>.csv per cell plus
// summary.csv, comparison.csv, bounds.json and epsilon.json under out_dir.
// Files are written once, atomically, at the end. Returns the cell names.
std::vector<std::string> run_experiment(const ExperimentConfig& config,
                                        const std::string& out_dir,
                                        int threads = 0);

// Runs fn(0..count-1) on a small thread pool; any task exception is
// rethrown after all workers join.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace psrlab
