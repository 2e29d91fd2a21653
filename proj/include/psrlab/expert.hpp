#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "psrlab/mdp.hpp"
#include "psrlab/rng.hpp"

namespace psrlab {

// Expert competence: softmax deliberateness beta (scalar or one value per
// state) and knowledgeability lambda (the expert perceives q + noise of
// standard deviation 1/lambda per entry; lambda = inf means exact q).
struct Competence {
    std::vector<double> beta;  // size 1 (scalar) or num_states
    double lambda = std::numeric_limits<double>::infinity();

    Competence() : beta{0.0} {}
    explicit Competence(double b,
                        double l = std::numeric_limits<double>::infinity())
        : beta{b}, lambda(l) {}
    Competence(std::vector<double> b, double l) : beta(std::move(b)), lambda(l) {}

    double beta_at(int s) const {
        return beta.size() == 1 ? beta[0] : beta[static_cast<std::size_t>(s)];
    }
};

// Expert demonstration trajectory: N+1 states and N actions plus generation
// metadata. The trajectory is produced by a stationary policy on one family
// member, starting from a fixed state.
struct OfflineDataset {
    std::vector<int> states;   // s_0 .. s_N
    std::vector<int> actions;  // a_0 .. a_{N-1}

    struct Meta {
        double beta = 0.0;
        double lambda = std::numeric_limits<double>::infinity();
        std::uint64_t seed = 0;
        int true_member_index = -1;
    } meta;

    std::size_t num_steps() const { return actions.size(); }

    // Legal zero-step dataset anchored at start_state; the uninformed
    // baseline runs through the same code path with this.
    static OfflineDataset empty(int start_state = 0) {
        OfflineDataset d;
        d.states.push_back(start_state);
        return d;
    }
};

// Softmax policy over a q-table with per-state inverse temperature. For
// finite lambda, one perturbed table q + noise/lambda is drawn up front (the
// expert's policy is stationary) before applying the softmax.
StochasticPolicy expert_policy(std::span<const double> qvalues, int num_states,
                               int num_actions, const Competence& competence,
                               Rng& rng);

// Rolls `horizon` steps from the fixed start state, sampling actions from
// the policy and next states from the MDP. Metadata is left for the caller.
OfflineDataset generate_offline(const Mdp& mdp, const StochasticPolicy& policy,
                                long horizon, int start_state, Rng& rng);

// Majority-vote policy estimate: per state, the action with the highest
// visit count over (s_t, a_t) pairs; ties and unvisited states resolve to
// action 0.
DeterministicPolicy majority_estimator(const OfflineDataset& dataset,
                                       int num_states, int num_actions);

// Entropy-based deliberateness estimate: c0 / H where H is the empirical
// conditional entropy (natural log) of actions given states, capped at
// beta_cap; returns beta_cap when H == 0. Throws EstimationError on an
// empty dataset.
double entropy_beta_estimate(const OfflineDataset& dataset, double c0 = 1.0,
                             double beta_cap = 50.0);

}  // namespace psrlab
