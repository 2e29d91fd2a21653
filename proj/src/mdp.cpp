#include "psrlab/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "psrlab/errors.hpp"
#include "psrlab/numerics.hpp"

namespace psrlab {

namespace {

constexpr double kProbTol = 1e-12;

void check_prob_vector(std::span<const double> p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0) throw ValidationError(what + ": negative entry");
        if (!std::isfinite(v)) throw ValidationError(what + ": non-finite entry");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > kProbTol)
        throw ValidationError(what + ": does not sum to 1");
}

}  // namespace

void Mdp::validate() const {
    if (num_states <= 0 || num_actions <= 0)
        throw ValidationError("mdp: state and action counts must be positive");
    const std::size_t s = static_cast<std::size_t>(num_states);
    const std::size_t a = static_cast<std::size_t>(num_actions);
    if (transitions.size() != s * a * s)
        throw ValidationError("mdp: transition table has wrong size");
    if (rewards.size() != s * a)
        throw ValidationError("mdp: reward table has wrong size");
    if (initial_dist.size() != s)
        throw ValidationError("mdp: initial distribution has wrong size");
    for (int si = 0; si < num_states; ++si)
        for (int ai = 0; ai < num_actions; ++ai)
            check_prob_vector(row(si, ai), "mdp: transition row (" +
                                               std::to_string(si) + "," +
                                               std::to_string(ai) + ")");
    for (double r : rewards)
        if (!(r >= 0.0 && r <= 1.0))
            throw ValidationError("mdp: reward outside [0, 1]");
    check_prob_vector(initial_dist, "mdp: initial distribution");
}

DeterministicPolicy greedy_policy(std::span<const double> qvalues,
                                  int num_states, int num_actions) {
    DeterministicPolicy pol;
    pol.actions.resize(num_states);
    for (int s = 0; s < num_states; ++s) {
        int best = 0;
        double best_q = qvalues[static_cast<std::size_t>(s) * num_actions];
        for (int a = 1; a < num_actions; ++a) {
            double q = qvalues[static_cast<std::size_t>(s) * num_actions + a];
            if (q > best_q) {  // strict: ties stay at the lowest index
                best_q = q;
                best = a;
            }
        }
        pol.actions[s] = best;
    }
    return pol;
}

PlanSolution solve_avg_reward(const Mdp& mdp, double tol, long max_iters) {
    mdp.validate();
    if (tol <= 0.0) throw ValidationError("solve_avg_reward: tol must be > 0");
    const int S = mdp.num_states;
    const int A = mdp.num_actions;

    // Relative value iteration on the damped kernel (P + I)/2. If (g, v)
    // solves the original Bellman equation then (g, 2v) solves the damped
    // one, with identical greedy sets, so gain carries over and bias halves.
    std::vector<double> h(S, 0.0);
    std::vector<double> th(S, 0.0);
    double gain = 0.0;
    double span = std::numeric_limits<double>::infinity();
    bool converged = false;

    for (long iter = 0; iter < max_iters; ++iter) {
        for (int s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < A; ++a) {
                auto p = mdp.row(s, a);
                double acc = 0.0;
                for (int s2 = 0; s2 < S; ++s2) acc += p[s2] * h[s2];
                double q = mdp.reward(s, a) + 0.5 * h[s] + 0.5 * acc;
                if (q > best) best = q;
            }
            th[s] = best;
        }
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < S; ++s) {
            double d = th[s] - h[s];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        span = hi - lo;
        gain = 0.5 * (hi + lo);
        if (span <= tol) {
            // Midpoint gain makes the damped residual <= span/2 <= tol/2 at
            // the current h, and the damped residual equals the original one
            // for v = h/2, leaving margin for the rounding below.
            converged = true;
            break;
        }
        const double ref = th[0];
        for (int s = 0; s < S; ++s) h[s] = th[s] - ref;
    }
    if (!converged)
        throw ConvergenceError(
            "solve_avg_reward: no convergence after " +
                std::to_string(max_iters) + " iterations (span " +
                std::to_string(span) + ")",
            0.5 * span);

    PlanSolution sol;
    sol.gain = gain;
    sol.bias.resize(S);
    double vmin = std::numeric_limits<double>::infinity();
    for (int s = 0; s < S; ++s) {
        sol.bias[s] = 0.5 * h[s];
        vmin = std::min(vmin, sol.bias[s]);
    }
    for (int s = 0; s < S; ++s) sol.bias[s] -= vmin;

    sol.qvalues.resize(static_cast<std::size_t>(S) * A);
    double residual = 0.0;
    for (int s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < A; ++a) {
            auto p = mdp.row(s, a);
            double acc = 0.0;
            for (int s2 = 0; s2 < S; ++s2) acc += p[s2] * sol.bias[s2];
            double q = mdp.reward(s, a) + acc;
            sol.qvalues[static_cast<std::size_t>(s) * A + a] = q;
            if (q > best) best = q;
        }
        residual = std::max(residual, std::fabs(best - sol.bias[s] - gain));
    }
    sol.residual = residual;
    sol.policy = greedy_policy(sol.qvalues, S, A);
    return sol;
}

namespace {

// Induced chain of a stationary policy: row-major S x S kernel plus the
// per-state expected reward.
struct InducedChain {
    int S = 0;
    std::vector<double> kernel;
    std::vector<double> reward;
};

InducedChain induce(const Mdp& mdp, const DeterministicPolicy& policy) {
    const int S = mdp.num_states;
    if (static_cast<int>(policy.actions.size()) != S)
        throw ValidationError("policy_gain: policy size mismatch");
    InducedChain c;
    c.S = S;
    c.kernel.resize(static_cast<std::size_t>(S) * S);
    c.reward.resize(S);
    for (int s = 0; s < S; ++s) {
        int a = policy.actions[s];
        if (a < 0 || a >= mdp.num_actions)
            throw ValidationError("policy_gain: action index out of range");
        auto p = mdp.row(s, a);
        std::copy(p.begin(), p.end(),
                  c.kernel.begin() + static_cast<std::size_t>(s) * S);
        c.reward[s] = mdp.reward(s, a);
    }
    return c;
}

InducedChain induce(const Mdp& mdp, const StochasticPolicy& policy) {
    const int S = mdp.num_states;
    const int A = mdp.num_actions;
    if (policy.num_actions != A ||
        policy.probs.size() != static_cast<std::size_t>(S) * A)
        throw ValidationError("policy_gain: policy shape mismatch");
    InducedChain c;
    c.S = S;
    c.kernel.assign(static_cast<std::size_t>(S) * S, 0.0);
    c.reward.assign(S, 0.0);
    for (int s = 0; s < S; ++s) {
        auto pi = policy.row(s);
        for (int a = 0; a < A; ++a) {
            if (pi[a] == 0.0) continue;
            auto p = mdp.row(s, a);
            for (int s2 = 0; s2 < S; ++s2)
                c.kernel[static_cast<std::size_t>(s) * S + s2] += pi[a] * p[s2];
            c.reward[s] += pi[a] * mdp.reward(s, a);
        }
    }
    return c;
}

std::vector<int> reachable_from(const InducedChain& c,
                                std::span<const double> start) {
    const int S = c.S;
    std::vector<char> seen(S, 0);
    std::vector<int> stack;
    for (int s = 0; s < S; ++s)
        if (start[s] > 0.0 && !seen[s]) {
            seen[s] = 1;
            stack.push_back(s);
        }
    while (!stack.empty()) {
        int s = stack.back();
        stack.pop_back();
        for (int s2 = 0; s2 < S; ++s2)
            if (!seen[s2] && c.kernel[static_cast<std::size_t>(s) * S + s2] > 0.0) {
                seen[s2] = 1;
                stack.push_back(s2);
            }
    }
    std::vector<int> out;
    for (int s = 0; s < S; ++s)
        if (seen[s]) out.push_back(s);
    return out;
}

// Kosaraju SCCs restricted to the given node set; returns a component id per
// node (indexed into `nodes`).
std::vector<int> scc_ids(const InducedChain& c, const std::vector<int>& nodes,
                         int& num_components) {
    const int n = static_cast<int>(nodes.size());
    std::vector<int> local(c.S, -1);
    for (int i = 0; i < n; ++i) local[nodes[i]] = i;

    std::vector<std::vector<int>> fwd(n), rev(n);
    for (int i = 0; i < n; ++i) {
        int s = nodes[i];
        for (int s2 = 0; s2 < c.S; ++s2) {
            if (c.kernel[static_cast<std::size_t>(s) * c.S + s2] > 0.0 &&
                local[s2] >= 0) {
                fwd[i].push_back(local[s2]);
                rev[local[s2]].push_back(i);
            }
        }
    }

    std::vector<char> seen(n, 0);
    std::vector<int> order;
    order.reserve(n);
    for (int start = 0; start < n; ++start) {
        if (seen[start]) continue;
        // iterative DFS with explicit finish order
        std::vector<std::pair<int, std::size_t>> st{{start, 0}};
        seen[start] = 1;
        while (!st.empty()) {
            auto& [u, next] = st.back();
            if (next < fwd[u].size()) {
                int v = fwd[u][next++];
                if (!seen[v]) {
                    seen[v] = 1;
                    st.emplace_back(v, 0);
                }
            } else {
                order.push_back(u);
                st.pop_back();
            }
        }
    }

    std::vector<int> comp(n, -1);
    num_components = 0;
    for (int i = n - 1; i >= 0; --i) {
        int root = order[i];
        if (comp[root] >= 0) continue;
        std::vector<int> stack{root};
        comp[root] = num_components;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : rev[u])
                if (comp[v] < 0) {
                    comp[v] = num_components;
                    stack.push_back(v);
                }
        }
        ++num_components;
    }
    return comp;
}

double chain_gain(const InducedChain& c, std::span<const double> start) {
    std::vector<int> nodes = reachable_from(c, start);
    if (nodes.empty()) throw EvaluationError("policy_gain: empty support");

    int num_components = 0;
    std::vector<int> comp = scc_ids(c, nodes, num_components);

    // A component is recurrent iff no edge leaves it (the reachable set is
    // closed, so all edges stay inside `nodes`).
    const int n = static_cast<int>(nodes.size());
    std::vector<int> local(c.S, -1);
    for (int i = 0; i < n; ++i) local[nodes[i]] = i;
    std::vector<char> escapes(num_components, 0);
    for (int i = 0; i < n; ++i) {
        int s = nodes[i];
        for (int s2 = 0; s2 < c.S; ++s2)
            if (c.kernel[static_cast<std::size_t>(s) * c.S + s2] > 0.0 &&
                comp[local[s2]] != comp[i])
                escapes[comp[i]] = 1;
    }
    int recurrent = -1;
    for (int k = 0; k < num_components; ++k) {
        if (escapes[k]) continue;
        if (recurrent >= 0)
            throw EvaluationError(
                "policy_gain: multiple recurrent classes reachable from the "
                "initial distribution");
        recurrent = k;
    }
    if (recurrent < 0) throw EvaluationError("policy_gain: no recurrent class");

    std::vector<int> cls;
    for (int i = 0; i < n; ++i)
        if (comp[i] == recurrent) cls.push_back(nodes[i]);
    const int m = static_cast<int>(cls.size());

    // Stationary distribution on the class: (P^T - I) mu = 0 with the last
    // equation replaced by the normalization sum(mu) = 1.
    std::vector<double> a(static_cast<std::size_t>(m) * m, 0.0);
    std::vector<double> b(m, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double p =
                c.kernel[static_cast<std::size_t>(cls[j]) * c.S + cls[i]];
            a[static_cast<std::size_t>(i) * m + j] = p - (i == j ? 1.0 : 0.0);
        }
    for (int j = 0; j < m; ++j) a[static_cast<std::size_t>(m - 1) * m + j] = 1.0;
    b[m - 1] = 1.0;

    std::vector<double> mu = solve_dense(std::move(a), std::move(b));
    double gain = 0.0;
    for (int i = 0; i < m; ++i) gain += mu[i] * c.reward[cls[i]];
    return gain;
}

}  // namespace

double policy_gain(const Mdp& mdp, const DeterministicPolicy& policy) {
    return chain_gain(induce(mdp, policy), mdp.initial_dist);
}

double policy_gain(const Mdp& mdp, const StochasticPolicy& policy) {
    return chain_gain(induce(mdp, policy), mdp.initial_dist);
}

bool is_communicating(const Mdp& mdp) {
    const int S = mdp.num_states;
    const int A = mdp.num_actions;
    auto reach = [&](bool forward) {
        std::vector<char> seen(S, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            int s = stack.back();
            stack.pop_back();
            for (int s2 = 0; s2 < S; ++s2) {
                if (seen[s2]) continue;
                bool edge = false;
                for (int a = 0; a < A && !edge; ++a)
                    edge = forward ? mdp.transition(s, a, s2) > 0.0
                                   : mdp.transition(s2, a, s) > 0.0;
                if (edge) {
                    seen[s2] = 1;
                    ++count;
                    stack.push_back(s2);
                }
            }
        }
        return count == S;
    };
    return reach(true) && reach(false);
}

double bias_span(const PlanSolution& solution) {
    if (solution.bias.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(solution.bias.begin(), solution.bias.end());
    return *hi - *lo;
}

double action_gap(const PlanSolution& solution, int num_actions) {
    if (num_actions < 2)
        throw UndefinedGapError("action_gap: undefined for single-action MDPs");
    const int S = static_cast<int>(solution.bias.size());
    double gap = std::numeric_limits<double>::infinity();
    for (int s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        double second = -std::numeric_limits<double>::infinity();
        int best_count = 0;
        for (int a = 0; a < num_actions; ++a) {
            double q = solution.q(s, a, num_actions);
            if (q > best) {
                second = best;
                best = q;
                best_count = 1;
            } else if (q == best) {
                ++best_count;
            } else if (q > second) {
                second = q;
            }
        }
        double state_gap = best_count > 1 ? 0.0 : best - second;
        gap = std::min(gap, state_gap);
    }
    return gap;
}

}  // namespace psrlab
