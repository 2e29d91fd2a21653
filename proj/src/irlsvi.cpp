#include "psrlab/irlsvi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "psrlab/errors.hpp"
#include "psrlab/numerics.hpp"

namespace psrlab {

QParams QParams::zeros(int num_states, int num_actions, double beta) {
    QParams p;
    p.num_states = num_states;
    p.num_actions = num_actions;
    p.qtable.assign(static_cast<std::size_t>(num_states) * num_actions, 0.0);
    p.beta = beta;
    return p;
}

StepSizeRule harmonic_step() {
    return [](std::size_t k) { return 1.0 / static_cast<double>(k + 1); };
}

std::vector<double> running_avg(std::span<const double> rewards,
                                const StepSizeRule& eta) {
    if (rewards.empty())
        throw ValidationError("running_avg: rewards must be nonempty");
    std::vector<double> rt(rewards.size() + 1);
    rt[0] = rewards[0];
    for (std::size_t k = 0; k < rewards.size(); ++k) {
        const double e = eta(k);
        rt[k + 1] = (1.0 - e) * rt[k] + e * rewards[k];
    }
    return rt;
}

double td_error(const QParams& params, const CombinedDatum& datum,
                double rtilde) {
    const int A = params.num_actions;
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) best = std::max(best, params.q(datum.s2, a));
    return datum.r + best - params.q(datum.s, datum.a) - rtilde;
}

LossRealization build_loss(const Mdp& mdp, const OfflineDataset& dataset,
                           std::span<const Transition> online,
                           const IrlsviHyper& hyper, Rng& rng,
                           const StepSizeRule& eta) {
    if (hyper.sigma <= 0.0 || hyper.lambda2 <= 0.0)
        throw ValidationError("build_loss: sigma and lambda2 must be > 0");
    if (hyper.prior_precision < 0.0)
        throw ValidationError("build_loss: prior precision must be >= 0");
    if (dataset.states.size() != dataset.actions.size() + 1)
        throw ValidationError("build_loss: inconsistent dataset lengths");

    const int S = mdp.num_states;
    const int A = mdp.num_actions;
    const std::size_t n_off = dataset.num_steps();
    const std::size_t n_all = n_off + online.size();

    LossRealization real;
    real.num_states = S;
    real.num_actions = A;
    real.sigma = hyper.sigma;
    real.lambda2 = hyper.lambda2;
    real.offline_count = n_off;
    real.prior_precision.assign(static_cast<std::size_t>(S) * A,
                                hyper.prior_precision);

    real.combined.reserve(n_all);
    for (std::size_t k = 0; k < n_off; ++k) {
        const int s = dataset.states[k];
        const int a = dataset.actions[k];
        real.combined.push_back({s, a, dataset.states[k + 1], mdp.reward(s, a)});
    }
    for (const Transition& tr : online)
        real.combined.push_back(
            {tr.state, tr.action, tr.next_state, mdp.reward(tr.state, tr.action)});

    if (hyper.offline_rewards_in_rtilde) {
        if (n_all > 0) {
            std::vector<double> rewards(n_all);
            for (std::size_t k = 0; k < n_all; ++k)
                rewards[k] = real.combined[k].r;
            std::vector<double> rt = running_avg(rewards, eta);
            real.rtilde.assign(rt.begin(), rt.begin() + n_all);
        }
    } else {
        real.rtilde.assign(n_all, 0.0);
        if (!online.empty()) {
            std::vector<double> rewards(online.size());
            for (std::size_t j = 0; j < online.size(); ++j)
                rewards[j] = real.combined[n_off + j].r;
            std::vector<double> rt = running_avg(rewards, eta);
            for (std::size_t j = 0; j < online.size(); ++j)
                real.rtilde[n_off + j] = rt[j];
        }
    }

    real.td_noise.resize(n_all);
    for (double& z : real.td_noise) z = hyper.sigma * rng.gaussian();
    real.imitation_weights.resize(n_off);
    for (double& w : real.imitation_weights) w = rng.exponential();
    real.prior_anchor.resize(static_cast<std::size_t>(S) * A);
    const double anchor_sd =
        hyper.prior_precision > 0.0 ? 1.0 / std::sqrt(hyper.prior_precision) : 0.0;
    for (double& v : real.prior_anchor) v = anchor_sd * rng.gaussian();

    real.weight_by_sa.assign(static_cast<std::size_t>(S) * A, 0.0);
    real.weight_by_state.assign(S, 0.0);
    for (std::size_t k = 0; k < n_off; ++k) {
        const CombinedDatum& d = real.combined[k];
        real.weight_by_sa[static_cast<std::size_t>(d.s) * A + d.a] +=
            real.imitation_weights[k];
        real.weight_by_state[d.s] += real.imitation_weights[k];
    }
    return real;
}

namespace {

// Imitation + prior terms shared by the canonical evaluator and the
// aggregated inner-loop evaluator. Adds into value/grads.
void imitation_prior_terms(const LossRealization& real, const QParams& params,
                           double& value, std::vector<double>* grad_q,
                           double* grad_beta) {
    const int S = real.num_states;
    const int A = real.num_actions;
    const double beta = params.beta;

    std::vector<double> row(A);
    for (int s = 0; s < S; ++s) {
        const double ws = real.weight_by_state[s];
        if (ws == 0.0) continue;
        for (int a = 0; a < A; ++a) row[a] = beta * params.q(s, a);
        const double lse = logsumexp(row);
        // pi = softmax(beta * q(s, .))
        for (int a = 0; a < A; ++a) row[a] = std::exp(row[a] - lse);

        double mean_q = 0.0;
        for (int a = 0; a < A; ++a) mean_q += row[a] * params.q(s, a);
        for (int a = 0; a < A; ++a) {
            const double wa =
                real.weight_by_sa[static_cast<std::size_t>(s) * A + a];
            value -= wa * (beta * params.q(s, a) - lse);
            if (grad_q)
                (*grad_q)[static_cast<std::size_t>(s) * A + a] -=
                    beta * (wa - ws * row[a]);
            if (grad_beta) *grad_beta -= wa * (params.q(s, a) - mean_q);
        }
    }

    for (std::size_t j = 0; j < real.prior_precision.size(); ++j) {
        const double d = params.qtable[j] - real.prior_anchor[j];
        value += 0.5 * real.prior_precision[j] * d * d;
        if (grad_q) (*grad_q)[j] += real.prior_precision[j] * d;
    }
    value += real.lambda2 * beta;
    if (grad_beta) *grad_beta += real.lambda2;
}

}  // namespace

LossValueGrad loss_value_and_grad(const LossRealization& real,
                                  const QParams& params,
                                  std::span<const double> frozen_targets) {
    const int S = real.num_states;
    const int A = real.num_actions;
    if (params.num_states != S || params.num_actions != A ||
        params.qtable.size() != static_cast<std::size_t>(S) * A)
        throw ValidationError("loss_value_and_grad: parameter shape mismatch");
    if (frozen_targets.size() != static_cast<std::size_t>(S) * A)
        throw ValidationError("loss_value_and_grad: frozen target shape mismatch");
    if (params.beta < 0.0)
        throw std::domain_error("loss_value_and_grad: beta must be >= 0");

    LossValueGrad out;
    out.grad_q.assign(static_cast<std::size_t>(S) * A, 0.0);

    std::vector<double> frozen_max(S, -std::numeric_limits<double>::infinity());
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            frozen_max[s] = std::max(
                frozen_max[s], frozen_targets[static_cast<std::size_t>(s) * A + a]);

    const double inv_var = 1.0 / (real.sigma * real.sigma);
    for (std::size_t k = 0; k < real.combined.size(); ++k) {
        const CombinedDatum& d = real.combined[k];
        const double td = d.r + real.td_noise[k] + frozen_max[d.s2] -
                          params.q(d.s, d.a) - real.rtilde[k];
        out.value += 0.5 * inv_var * td * td;
        out.grad_q[static_cast<std::size_t>(d.s) * A + d.a] -= inv_var * td;
    }

    imitation_prior_terms(real, params, out.value, &out.grad_q, &out.grad_beta);
    return out;
}

namespace {

// Given fixed targets, the TD sum collapses per (state, action) into
// count * q^2 - 2 q * csum + c2sum with c_k = r_k + z_k + max(frozen at
// bootstrap state) - rtilde_k; evaluation cost drops from O(data) to O(SA).
struct QuadraticVi {
    std::vector<double> count;  // per (s,a)
    std::vector<double> csum;   // per (s,a)
    double c2sum = 0.0;

    void rebuild(const LossRealization& real,
                 std::span<const double> frozen_targets) {
        const int S = real.num_states;
        const int A = real.num_actions;
        count.assign(static_cast<std::size_t>(S) * A, 0.0);
        csum.assign(static_cast<std::size_t>(S) * A, 0.0);
        c2sum = 0.0;
        std::vector<double> frozen_max(S,
                                       -std::numeric_limits<double>::infinity());
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                frozen_max[s] =
                    std::max(frozen_max[s],
                             frozen_targets[static_cast<std::size_t>(s) * A + a]);
        for (std::size_t k = 0; k < real.combined.size(); ++k) {
            const CombinedDatum& d = real.combined[k];
            const double c =
                d.r + real.td_noise[k] + frozen_max[d.s2] - real.rtilde[k];
            const std::size_t j = static_cast<std::size_t>(d.s) * A + d.a;
            count[j] += 1.0;
            csum[j] += c;
            c2sum += c * c;
        }
    }

    void eval(const LossRealization& real, const QParams& params, double& value,
              std::vector<double>* grad_q) const {
        const double inv_var = 1.0 / (real.sigma * real.sigma);
        double acc = c2sum;
        for (std::size_t j = 0; j < count.size(); ++j) {
            const double q = params.qtable[j];
            acc += count[j] * q * q - 2.0 * q * csum[j];
            if (grad_q)
                (*grad_q)[j] += inv_var * (count[j] * q - csum[j]);
        }
        value += 0.5 * inv_var * acc;
    }
};

}  // namespace

MinimizeResult minimize_loss(const LossRealization& real, QParams init,
                             const MinimizeOpts& opts) {
    if (opts.outer_iters < 1 || opts.inner_iters < 1 ||
        opts.learning_rate <= 0.0)
        throw ValidationError("minimize_loss: opts must be positive");
    const std::size_t table = static_cast<std::size_t>(real.num_states) *
                              real.num_actions;
    if (init.qtable.size() != table)
        throw ValidationError("minimize_loss: init shape mismatch");
    init.beta = std::max(init.beta, opts.beta_floor);

    QParams params = std::move(init);
    MinimizeResult result;
    QuadraticVi vi;

    std::size_t step_index = 0;
    for (int outer = 0; outer < opts.outer_iters; ++outer) {
        vi.rebuild(real, params.qtable);

        auto eval = [&](const QParams& p, std::vector<double>* gq,
                        double* gb) -> double {
            double v = 0.0;
            vi.eval(real, p, v, gq);
            imitation_prior_terms(real, p, v, gq, gb);
            return v;
        };

        std::vector<double> grad_q(table);
        QParams cand = params;
        for (int inner = 0; inner < opts.inner_iters; ++inner, ++step_index) {
            std::fill(grad_q.begin(), grad_q.end(), 0.0);
            double grad_beta = 0.0;
            const double v = eval(params, &grad_q, &grad_beta);
            if (!std::isfinite(v))
                throw OptimizationError("minimize_loss: non-finite loss",
                                        step_index);

            double lr = opts.learning_rate;
            bool accepted = false;
            for (int halving = 0; halving < 60; ++halving) {
                for (std::size_t j = 0; j < table; ++j)
                    cand.qtable[j] = params.qtable[j] - lr * grad_q[j];
                cand.beta = opts.optimize_beta
                                ? std::max(opts.beta_floor,
                                           params.beta - lr * grad_beta)
                                : params.beta;
                const double vc = eval(cand, nullptr, nullptr);
                if (std::isfinite(vc) && vc <= v) {
                    params.qtable.swap(cand.qtable);
                    params.beta = cand.beta;
                    result.loss_history.push_back(vc);
                    accepted = true;
                    break;
                }
                lr *= 0.5;
            }
            if (!accepted) break;  // stationary under the current targets
        }
    }

    result.params = std::move(params);
    return result;
}

RunTrace run_irlsvi(const Mdp& env, const OfflineDataset& dataset,
                    const EpisodeSchedule& schedule, long horizon,
                    const IrlsviHyper& hyper, const MinimizeOpts& opts,
                    Rng& rng) {
    env.validate();
    const std::vector<long> lengths = schedule_lengths(schedule, horizon);
    const PlanSolution plan = solve_avg_reward(env);

    MinimizeOpts episode_opts = opts;
    QParams params = QParams::zeros(env.num_states, env.num_actions,
                                    1.0 / hyper.lambda2);
    if (hyper.beta_estimate == IrlsviHyper::BetaEstimate::entropy &&
        dataset.num_steps() > 0) {
        params.beta = entropy_beta_estimate(dataset, hyper.entropy_c0,
                                            hyper.entropy_beta_cap);
        episode_opts.optimize_beta = false;
    }

    RunTrace trace;
    trace.true_member = -1;
    trace.true_gain = plan.gain;
    trace.steps.reserve(horizon);
    trace.episodes.reserve(lengths.size());

    std::vector<Transition> online;
    online.reserve(horizon);
    int s = static_cast<int>(rng.categorical(env.initial_dist));
    long t = 0;
    for (long tk : lengths) {
        LossRealization real = build_loss(env, dataset, online, hyper, rng);
        MinimizeResult res = minimize_loss(real, std::move(params), episode_opts);
        params = std::move(res.params);
        const DeterministicPolicy pol =
            greedy_policy(params.qtable, env.num_states, env.num_actions);

        EpisodeRecord ep;
        ep.start = t;
        ep.length = tk;
        ep.sampled_member = -1;
        ep.mismatch = pol.actions != plan.policy.actions;
        ep.posterior_mismatch = std::numeric_limits<double>::quiet_NaN();
        trace.episodes.push_back(ep);

        for (long i = 0; i < tk; ++i) {
            const int a = pol.actions[s];
            const double r = env.reward(s, a);
            const int s2 = static_cast<int>(rng.categorical(env.row(s, a)));
            trace.steps.push_back({t, s, a, r});
            online.push_back({s, a, s2});
            s = s2;
            ++t;
        }
    }
    return trace;
}

}  // namespace psrlab
