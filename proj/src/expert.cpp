#include "psrlab/expert.hpp"

#include <algorithm>
#include <cmath>

#include "psrlab/errors.hpp"
#include "psrlab/numerics.hpp"

namespace psrlab {

StochasticPolicy expert_policy(std::span<const double> qvalues, int num_states,
                               int num_actions, const Competence& competence,
                               Rng& rng) {
    if (qvalues.size() !=
        static_cast<std::size_t>(num_states) * num_actions)
        throw ValidationError("expert_policy: q-table shape mismatch");
    if (competence.beta.size() != 1 &&
        competence.beta.size() != static_cast<std::size_t>(num_states))
        throw ValidationError("expert_policy: beta must be scalar or per-state");
    for (double b : competence.beta)
        if (b < 0.0) throw ValidationError("expert_policy: beta must be >= 0");
    if (!(competence.lambda > 0.0))
        throw ValidationError("expert_policy: lambda must be positive");

    std::vector<double> q(qvalues.begin(), qvalues.end());
    if (!std::isinf(competence.lambda)) {
        // One table-wide draw: the expert acts on a fixed perceived q.
        const double sd = 1.0 / competence.lambda;
        for (double& v : q) v += sd * rng.gaussian();
    }

    StochasticPolicy pol;
    pol.num_actions = num_actions;
    pol.probs.resize(q.size());
    for (int s = 0; s < num_states; ++s) {
        const double b = competence.beta_at(s);
        std::span<double> row{pol.probs.data() +
                                  static_cast<std::size_t>(s) * num_actions,
                              static_cast<std::size_t>(num_actions)};
        for (int a = 0; a < num_actions; ++a)
            row[a] = b * q[static_cast<std::size_t>(s) * num_actions + a];
        softmax_inplace(row);
    }
    return pol;
}

OfflineDataset generate_offline(const Mdp& mdp, const StochasticPolicy& policy,
                                long horizon, int start_state, Rng& rng) {
    if (horizon < 0)
        throw ValidationError("generate_offline: horizon must be >= 0");
    if (start_state < 0 || start_state >= mdp.num_states)
        throw ValidationError("generate_offline: start state out of range");

    OfflineDataset data;
    data.states.reserve(horizon + 1);
    data.actions.reserve(horizon);
    int s = start_state;
    data.states.push_back(s);
    for (long t = 0; t < horizon; ++t) {
        int a = static_cast<int>(rng.categorical(policy.row(s)));
        int s2 = static_cast<int>(rng.categorical(mdp.row(s, a)));
        data.actions.push_back(a);
        data.states.push_back(s2);
        s = s2;
    }
    return data;
}

DeterministicPolicy majority_estimator(const OfflineDataset& dataset,
                                       int num_states, int num_actions) {
    std::vector<long> counts(
        static_cast<std::size_t>(num_states) * num_actions, 0);
    for (std::size_t t = 0; t < dataset.num_steps(); ++t) {
        int s = dataset.states[t];
        int a = dataset.actions[t];
        if (s < 0 || s >= num_states || a < 0 || a >= num_actions)
            throw ValidationError("majority_estimator: index out of range");
        ++counts[static_cast<std::size_t>(s) * num_actions + a];
    }
    DeterministicPolicy pol;
    pol.actions.resize(num_states);
    for (int s = 0; s < num_states; ++s) {
        int best = 0;
        long best_count = counts[static_cast<std::size_t>(s) * num_actions];
        for (int a = 1; a < num_actions; ++a) {
            long c = counts[static_cast<std::size_t>(s) * num_actions + a];
            if (c > best_count) {
                best_count = c;
                best = a;
            }
        }
        pol.actions[s] = best;  // all-zero counts fall through to action 0
    }
    return pol;
}

double entropy_beta_estimate(const OfflineDataset& dataset, double c0,
                             double beta_cap) {
    if (c0 <= 0.0 || beta_cap <= 0.0)
        throw ValidationError("entropy_beta_estimate: c0 and beta_cap must be > 0");
    const std::size_t n = dataset.num_steps();
    if (n == 0)
        throw EstimationError("entropy_beta_estimate: empty dataset");

    int num_states = 0;
    int num_actions = 0;
    for (std::size_t t = 0; t < n; ++t) {
        num_states = std::max(num_states, dataset.states[t] + 1);
        num_actions = std::max(num_actions, dataset.actions[t] + 1);
    }

    std::vector<long> joint(
        static_cast<std::size_t>(num_states) * num_actions, 0);
    std::vector<long> marginal(num_states, 0);
    for (std::size_t t = 0; t < n; ++t) {
        ++joint[static_cast<std::size_t>(dataset.states[t]) * num_actions +
                dataset.actions[t]];
        ++marginal[dataset.states[t]];
    }

    // H(a|s) under the empirical joint; only visited states contribute,
    // weighted by visitation frequency.
    double h = 0.0;
    for (int s = 0; s < num_states; ++s) {
        if (marginal[s] == 0) continue;
        const double ws = static_cast<double>(marginal[s]) / n;
        double hs = 0.0;
        for (int a = 0; a < num_actions; ++a) {
            long c = joint[static_cast<std::size_t>(s) * num_actions + a];
            if (c == 0) continue;
            double p = static_cast<double>(c) / marginal[s];
            hs -= p * std::log(p);
        }
        h += ws * hs;
    }
    if (h <= 0.0) return beta_cap;
    return std::min(c0 / h, beta_cap);
}

}  // namespace psrlab
