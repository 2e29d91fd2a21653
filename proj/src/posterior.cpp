#include "psrlab/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "psrlab/errors.hpp"
#include "psrlab/numerics.hpp"

namespace psrlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_binding(const PosteriorState& post, const ParameterFamily& family) {
    if (post.family_ref != family.id)
        throw ValidationError("posterior: state is bound to a different family");
    if (post.log_weights.size() != family.size())
        throw ValidationError("posterior: weight count mismatch");
}

void check_not_degenerate(const std::vector<double>& log_weights,
                          const char* what) {
    for (double lw : log_weights)
        if (lw > kNegInf) return;
    throw InconsistentEvidenceError(what);
}

}  // namespace

std::vector<double> PosteriorState::normalized() const {
    std::vector<double> w(log_weights.begin(), log_weights.end());
    double m = kNegInf;
    for (double v : w) m = std::max(m, v);
    if (m == kNegInf)
        throw InconsistentEvidenceError("posterior: all weights are zero");
    double sum = 0.0;
    for (double& v : w) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : w) v /= sum;
    return w;
}

PosteriorState prior_state(const ParameterFamily& family) {
    PosteriorState post;
    post.family_ref = family.id;
    post.epoch = 0;
    post.log_weights.resize(family.size());
    for (std::size_t i = 0; i < family.size(); ++i)
        post.log_weights[i] =
            family.prior[i] > 0.0 ? std::log(family.prior[i]) : kNegInf;
    return post;
}

PosteriorState informed_prior(const ParameterFamily& family,
                              const OfflineDataset& dataset, double beta) {
    if (beta < 0.0) throw ValidationError("informed_prior: beta must be >= 0");
    if (dataset.states.size() != dataset.actions.size() + 1)
        throw ValidationError("informed_prior: inconsistent dataset lengths");
    if (!std::isinf(dataset.meta.lambda))
        throw ModelMismatchError(
            "informed_prior: dataset was generated with finite lambda; the "
            "exact likelihood assumes the expert acted on the exact q-table");

    const Mdp& shape = family.members.front();
    const int S = shape.num_states;
    const int A = shape.num_actions;
    const std::size_t n = dataset.num_steps();
    for (std::size_t t = 0; t < n; ++t) {
        if (dataset.states[t] < 0 || dataset.states[t] >= S ||
            dataset.states[t + 1] < 0 || dataset.states[t + 1] >= S ||
            dataset.actions[t] < 0 || dataset.actions[t] >= A)
            throw ValidationError("informed_prior: dataset index out of range");
    }

    PosteriorState post = prior_state(family);
    post.epoch = 1;

    std::vector<double> lse(S);  // per-state logsumexp of beta * q, per member
    for (std::size_t i = 0; i < family.size(); ++i) {
        double& lw = post.log_weights[i];
        if (lw == kNegInf || n == 0) continue;

        const PlanSolution& plan = family.plans[i];
        std::vector<double> bq(static_cast<std::size_t>(S) * A);
        for (std::size_t j = 0; j < bq.size(); ++j)
            bq[j] = beta * plan.qvalues[j];
        for (int s = 0; s < S; ++s)
            lse[s] = logsumexp(
                {bq.data() + static_cast<std::size_t>(s) * A,
                 static_cast<std::size_t>(A)});

        for (std::size_t t = 0; t < n; ++t) {
            const int s = dataset.states[t];
            const int a = dataset.actions[t];
            const int s2 = dataset.states[t + 1];
            double logp = family.log_transition(i, s, a, s2);
            if (logp == kNegInf) {
                lw = kNegInf;
                break;
            }
            lw += logp + bq[static_cast<std::size_t>(s) * A + a] - lse[s];
        }
    }
    check_not_degenerate(post.log_weights,
                         "informed_prior: offline data impossible under every "
                         "family member");
    return post;
}

PosteriorState online_update(const PosteriorState& post,
                             const ParameterFamily& family,
                             std::span<const Transition> segment) {
    check_binding(post, family);
    const Mdp& shape = family.members.front();
    for (const Transition& tr : segment)
        if (tr.state < 0 || tr.state >= shape.num_states || tr.action < 0 ||
            tr.action >= shape.num_actions || tr.next_state < 0 ||
            tr.next_state >= shape.num_states)
            throw ValidationError("online_update: transition out of range");

    PosteriorState out = post;
    out.epoch = post.epoch + 1;
    for (std::size_t i = 0; i < family.size(); ++i) {
        double& lw = out.log_weights[i];
        if (lw == kNegInf) continue;
        for (const Transition& tr : segment) {
            double logp =
                family.log_transition(i, tr.state, tr.action, tr.next_state);
            if (logp == kNegInf) {
                lw = kNegInf;
                break;
            }
            lw += logp;
        }
    }
    check_not_degenerate(out.log_weights,
                         "online_update: segment impossible under every "
                         "family member");
    return out;
}

std::size_t sample_member(const PosteriorState& post, Rng& rng) {
    std::vector<double> w = post.normalized();
    return rng.categorical(w);
}

double mismatch_probability(const PosteriorState& post,
                            const ParameterFamily& family) {
    check_binding(post, family);
    std::vector<double> w = post.normalized();
    std::map<std::vector<int>, double> classes;
    for (std::size_t i = 0; i < family.size(); ++i) {
        if (w[i] == 0.0) continue;
        classes[family.plans[i].policy.actions] += w[i];
    }
    double acc = 0.0;
    for (const auto& [policy, mass] : classes) acc += mass * mass;
    return 1.0 - acc;
}

}  // namespace psrlab
