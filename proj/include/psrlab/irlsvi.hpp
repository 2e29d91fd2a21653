#pragma once

#include <functional>
#include <span>
#include <vector>

#include "psrlab/expert.hpp"
#include "psrlab/mdp.hpp"
#include "psrlab/posterior.hpp"
#include "psrlab/rng.hpp"
#include "psrlab/schedule.hpp"
#include "psrlab/trace.hpp"

namespace psrlab {

// Tabular q-table parameterization plus the deliberateness estimate. The
// q-table itself is the optimized parameter; acting greedily on it stands in
// for planning on a sampled environment.
struct QParams {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> qtable;  // num_states * num_actions
    double beta = 0.0;

    double q(int s, int a) const {
        return qtable[static_cast<std::size_t>(s) * num_actions + a];
    }
    static QParams zeros(int num_states, int num_actions, double beta = 0.0);
};

using StepSizeRule = std::function<double(std::size_t)>;

// eta_k = 1/(k+1); turns the recursion below into a running mean.
StepSizeRule harmonic_step();

// Bootstrap average-reward sequence: rt[0] = rewards[0] and
// rt[k+1] = (1 - eta(k)) * rt[k] + eta(k) * rewards[k]. Returns n+1 values
// for n rewards. Throws ValidationError on empty input.
std::vector<double> running_avg(std::span<const double> rewards,
                                const StepSizeRule& eta);

// One combined offline/online data point: state, action, bootstrap next
// state and the (known-table) reward.
struct CombinedDatum {
    int s = 0;
    int a = 0;
    int s2 = 0;
    double r = 0.0;
};

// r + max_a' q(s2, a') - q(s, a) - rtilde, all through the same q-table.
double td_error(const QParams& params, const CombinedDatum& datum,
                double rtilde);

struct IrlsviHyper {
    double sigma = 1.0;            // TD noise scale
    double lambda2 = 1.0;          // exponential prior rate on beta
    double prior_precision = 1.0;  // diagonal prior precision per q entry
    // Whether offline rewards feed the bootstrap average-reward recursion;
    // when false the recursion runs over online rewards only and offline
    // indices use rtilde = 0.
    bool offline_rewards_in_rtilde = true;

    enum class BetaEstimate { map, entropy };
    BetaEstimate beta_estimate = BetaEstimate::map;
    double entropy_c0 = 1.0;
    double entropy_beta_cap = 50.0;
};

// One realization of the randomized loss: Gaussian TD perturbations, unit
// exponential imitation weights, a Gaussian prior anchor, the combined
// offline+online data in that order, and the bootstrap sequence.
struct LossRealization {
    int num_states = 0;
    int num_actions = 0;
    double sigma = 1.0;
    double lambda2 = 1.0;
    std::vector<double> prior_precision;    // per q entry
    std::vector<double> td_noise;           // z_k, one per combined index
    std::vector<double> imitation_weights;  // w_k, one per offline index
    std::vector<double> prior_anchor;       // q-shaped
    std::vector<double> rtilde;             // one per combined index
    std::vector<CombinedDatum> combined;    // offline then online
    std::size_t offline_count = 0;

    // w-weighted offline visit tables; fixed once drawn, cached for the
    // imitation term.
    std::vector<double> weight_by_sa;
    std::vector<double> weight_by_state;
};

// Draws the perturbations (TD noise, imitation weights, prior anchor — in
// that order) and assembles the combined data. The anchor has per-entry
// variance 1/precision; zero precision disables the prior term and anchors
// at 0. Offline boundary: the bootstrap next state of offline index N-1 is
// the dataset's final state.
LossRealization build_loss(const Mdp& mdp, const OfflineDataset& dataset,
                           std::span<const Transition> online,
                           const IrlsviHyper& hyper, Rng& rng,
                           const StepSizeRule& eta = harmonic_step());

struct LossValueGrad {
    double value = 0.0;
    std::vector<double> grad_q;
    double grad_beta = 0.0;
};

// Smoothed objective: the max in the TD term reads from `frozen_targets`
// (a q-table snapshot), which makes the objective smooth in (q, beta); the
// imitation softmax uses the live parameters. The gradient is the exact
// analytic gradient of this smoothed objective. Throws std::domain_error
// for beta < 0.
LossValueGrad loss_value_and_grad(const LossRealization& real,
                                  const QParams& params,
                                  std::span<const double> frozen_targets);

struct MinimizeOpts {
    int outer_iters = 10;     // target refreshes
    int inner_iters = 200;    // gradient steps per refresh
    double learning_rate = 0.1;
    double beta_floor = 0.0;
    bool optimize_beta = true;
};

struct MinimizeResult {
    QParams params;
    std::vector<double> loss_history;  // accepted values, in order
};

// Fixed-target descent: freeze the bootstrap targets at the current table,
// run backtracking gradient steps (halving the rate on any increase,
// projecting beta onto [beta_floor, inf)), refresh, repeat. Throws
// OptimizationError when the loss turns non-finite.
MinimizeResult minimize_loss(const LossRealization& real, QParams init,
                             const MinimizeOpts& opts);

// Randomized-loss agent: per episode, draw a fresh loss realization over all
// data so far, minimize it warm-started from the previous episode, and act
// greedily on the resulting q-table (ties toward the lowest action index).
// Episode records carry sampled_member = -1 and a NaN posterior mismatch.
RunTrace run_irlsvi(const Mdp& env, const OfflineDataset& dataset,
                    const EpisodeSchedule& schedule, long horizon,
                    const IrlsviHyper& hyper, const MinimizeOpts& opts,
                    Rng& rng);

}  // namespace psrlab
