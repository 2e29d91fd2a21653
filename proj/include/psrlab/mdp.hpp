#pragma once

#include <span>
#include <vector>

namespace psrlab {

// Finite MDP with dense tables: transitions in [state][action][next] layout,
// rewards in [state][action], plus an initial state distribution. Immutable
// by convention once built; every operation below is a pure function.
struct Mdp {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> transitions;   // num_states * num_actions * num_states
    std::vector<double> rewards;       // num_states * num_actions, each in [0,1]
    std::vector<double> initial_dist;  // num_states

    double transition(int s, int a, int s2) const {
        return transitions[(static_cast<std::size_t>(s) * num_actions + a) *
                               num_states +
                           s2];
    }
    std::span<const double> row(int s, int a) const {
        return {transitions.data() +
                    (static_cast<std::size_t>(s) * num_actions + a) * num_states,
                static_cast<std::size_t>(num_states)};
    }
    double reward(int s, int a) const {
        return rewards[static_cast<std::size_t>(s) * num_actions + a];
    }

    // Checks row sums (1 within 1e-12), nonnegativity and reward range.
    // Throws ValidationError.
    void validate() const;

    bool operator==(const Mdp&) const = default;
};

struct DeterministicPolicy {
    std::vector<int> actions;  // one action index per state

    bool operator==(const DeterministicPolicy&) const = default;
};

struct StochasticPolicy {
    int num_actions = 0;
    std::vector<double> probs;  // num_states * num_actions, rows sum to 1

    std::span<const double> row(int s) const {
        return {probs.data() + static_cast<std::size_t>(s) * num_actions,
                static_cast<std::size_t>(num_actions)};
    }
};

// Output of the average-reward planner. Bias is normalized so its minimum
// entry is exactly 0; the greedy policy breaks ties toward the lowest action
// index, which makes the solver a deterministic mapping.
struct PlanSolution {
    double gain = 0.0;
    std::vector<double> bias;     // per state, min entry == 0
    std::vector<double> qvalues;  // num_states * num_actions
    DeterministicPolicy policy;
    double residual = 0.0;  // sup-norm Bellman residual of (gain, bias)

    double q(int s, int a, int num_actions) const {
        return qvalues[static_cast<std::size_t>(s) * num_actions + a];
    }
};

// Average-reward planning oracle: relative value iteration on the damped
// kernel (P + I)/2 with reference state 0 and span-seminorm stopping. The
// damping guarantees convergence on periodic communicating chains; gain is
// unchanged by it and the bias is rescaled back. Requires a communicating
// MDP (caller's responsibility, see is_communicating).
// Throws ConvergenceError (carrying the last residual) past max_iters.
PlanSolution solve_avg_reward(const Mdp& mdp, double tol = 1e-10,
                              long max_iters = 100000);

// Long-run average reward of a stationary policy, computed exactly from the
// stationary distribution of the single recurrent class reachable from the
// initial distribution. Throws EvaluationError when that class is not unique
// or the stationary system is singular.
double policy_gain(const Mdp& mdp, const DeterministicPolicy& policy);
double policy_gain(const Mdp& mdp, const StochasticPolicy& policy);

// True iff the directed graph with an edge s -> s' whenever some action
// reaches s' with positive probability is strongly connected.
bool is_communicating(const Mdp& mdp);

// max(bias) - min(bias); equals max(bias) for normalized solutions.
double bias_span(const PlanSolution& solution);

// Minimum over states of (best q - second-best q); 0 when some state has a
// duplicated maximum. Throws UndefinedGapError for single-action MDPs.
double action_gap(const PlanSolution& solution, int num_actions);

// Greedy action map of a q-table, ties toward the lowest action index.
DeterministicPolicy greedy_policy(std::span<const double> qvalues,
                                  int num_states, int num_actions);

}  // namespace psrlab
