#include "psrlab/family.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "psrlab/errors.hpp"
#include "psrlab/numerics.hpp"

namespace psrlab {

namespace {

constexpr int kRetryCap = 100;

void append_doubles(std::string& out, const std::vector<double>& xs) {
    char buf[32];
    for (double x : xs) {
        std::snprintf(buf, sizeof(buf), "%.17g;", x);
        out += buf;
    }
}

std::string content_digest(const std::vector<Mdp>& members,
                           const std::vector<double>& prior) {
    std::string blob;
    blob += std::to_string(members.size()) + ":";
    for (const Mdp& m : members) {
        blob += std::to_string(m.num_states) + "," +
                std::to_string(m.num_actions) + ";";
        append_doubles(blob, m.transitions);
        append_doubles(blob, m.rewards);
        append_doubles(blob, m.initial_dist);
    }
    append_doubles(blob, prior);
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(blob)));
    return hex;
}

// Flat Dirichlet draw via normalized unit exponentials.
std::vector<double> flat_simplex(int n, Rng& rng) {
    std::vector<double> g(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        g[i] = rng.exponential();
        sum += g[i];
    }
    for (int i = 0; i < n; ++i) g[i] /= sum;
    return g;
}

}  // namespace

ParameterFamily finalize_family(std::vector<Mdp> members,
                                std::vector<double> prior,
                                ParameterFamily::Metadata meta) {
    if (members.empty()) throw ValidationError("family: no members");
    if (prior.size() != members.size())
        throw ValidationError("family: prior size mismatch");
    double psum = 0.0;
    for (double p : prior) {
        if (p < 0.0) throw ValidationError("family: negative prior weight");
        psum += p;
    }
    if (std::fabs(psum - 1.0) > 1e-12)
        throw ValidationError("family: prior does not sum to 1");

    const Mdp& first = members.front();
    for (const Mdp& m : members) {
        m.validate();
        if (m.num_states != first.num_states ||
            m.num_actions != first.num_actions || m.rewards != first.rewards ||
            m.initial_dist != first.initial_dist)
            throw ValidationError(
                "family: members must share S, A, rewards and initial "
                "distribution");
    }

    ParameterFamily fam;
    fam.members = std::move(members);
    fam.prior = std::move(prior);
    fam.meta = std::move(meta);
    fam.span = 0.0;
    fam.gap = std::numeric_limits<double>::infinity();
    fam.plans.reserve(fam.members.size());
    fam.log_transitions.reserve(fam.members.size());
    for (const Mdp& m : fam.members) {
        if (!is_communicating(m))
            throw GenerationError("family: member is not communicating");
        PlanSolution plan = solve_avg_reward(m);
        fam.span = std::max(fam.span, bias_span(plan));
        if (m.num_actions >= 2) {
            double g = action_gap(plan, m.num_actions);
            if (g <= 0.0)
                throw GenerationError("family: member has a zero action gap");
            fam.gap = std::min(fam.gap, g);
        }
        fam.plans.push_back(std::move(plan));
        std::vector<double> logs(m.transitions.size());
        for (std::size_t i = 0; i < logs.size(); ++i)
            logs[i] = m.transitions[i] > 0.0
                          ? std::log(m.transitions[i])
                          : -std::numeric_limits<double>::infinity();
        fam.log_transitions.push_back(std::move(logs));
    }
    fam.id = content_digest(fam.members, fam.prior);
    return fam;
}

ParameterFamily make_random_family(int num_states, int num_actions,
                                   int family_size, double min_prob,
                                   std::uint64_t seed) {
    if (num_states < 1 || num_actions < 1 || family_size < 1)
        throw ValidationError("make_random_family: counts must be positive");
    if (min_prob < 0.0 || min_prob * num_states > 1.0)
        throw ValidationError(
            "make_random_family: need 0 <= min_prob * num_states <= 1");

    Rng rng(seed);
    const std::size_t sa = static_cast<std::size_t>(num_states) * num_actions;

    std::vector<double> rewards(sa);
    for (double& r : rewards) r = rng.uniform();
    std::vector<double> nu(num_states, 1.0 / num_states);

    std::vector<Mdp> members;
    members.reserve(family_size);
    for (int i = 0; i < family_size; ++i) {
        bool accepted = false;
        for (int attempt = 0; attempt < kRetryCap && !accepted; ++attempt) {
            Mdp m;
            m.num_states = num_states;
            m.num_actions = num_actions;
            m.rewards = rewards;
            m.initial_dist = nu;
            m.transitions.resize(sa * num_states);
            for (std::size_t row = 0; row < sa; ++row) {
                std::vector<double> p = flat_simplex(num_states, rng);
                double sum = 0.0;
                for (double& v : p) {
                    v = std::max(v, min_prob);
                    sum += v;
                }
                for (int s2 = 0; s2 < num_states; ++s2)
                    m.transitions[row * num_states + s2] = p[s2] / sum;
            }
            if (!is_communicating(m)) continue;
            if (num_actions >= 2) {
                PlanSolution plan = solve_avg_reward(m);
                if (action_gap(plan, num_actions) <= 0.0) continue;
            }
            members.push_back(std::move(m));
            accepted = true;
        }
        if (!accepted)
            throw GenerationError(
                "make_random_family: retry cap exceeded while enforcing a "
                "positive action gap");
    }

    std::vector<double> prior(family_size, 1.0 / family_size);
    return finalize_family(std::move(members), std::move(prior),
                           {"random", seed});
}

Mdp make_riverswim(int num_states, double right_success, double left_reward,
                   double right_reward) {
    if (num_states < 2)
        throw ValidationError("make_riverswim: need at least 2 states");
    if (right_success < 0.0 || right_success > 1.0)
        throw ValidationError("make_riverswim: right_success outside [0, 1]");
    if (left_reward < 0.0 || right_reward < 0.0)
        throw ValidationError("make_riverswim: rewards must be nonnegative");

    double scale = std::max({1.0, left_reward, right_reward});

    const int S = num_states;
    const int A = 2;  // 0 = LEFT, 1 = RIGHT
    Mdp m;
    m.num_states = S;
    m.num_actions = A;
    m.transitions.assign(static_cast<std::size_t>(S) * A * S, 0.0);
    m.rewards.assign(static_cast<std::size_t>(S) * A, 0.0);
    m.initial_dist.assign(S, 0.0);
    m.initial_dist[0] = 1.0;

    auto at = [&](int s, int a, int s2) -> double& {
        return m.transitions[(static_cast<std::size_t>(s) * A + a) * S + s2];
    };
    const double p = right_success;
    for (int s = 0; s < S; ++s) {
        at(s, 0, s > 0 ? s - 1 : 0) = 1.0;
        if (s == 0) {
            at(s, 1, 1) = p;
            at(s, 1, 0) += 1.0 - p;
        } else if (s == S - 1) {
            at(s, 1, s) = p;
            at(s, 1, s - 1) += 1.0 - p;
        } else {
            at(s, 1, s + 1) = p;
            at(s, 1, s) += 0.75 * (1.0 - p);
            at(s, 1, s - 1) += 0.25 * (1.0 - p);
        }
    }
    m.rewards[0 * A + 0] = left_reward / scale;
    m.rewards[static_cast<std::size_t>(S - 1) * A + 1] = right_reward / scale;
    m.validate();
    return m;
}

ParameterFamily family_around(const Mdp& base, int family_size,
                              double perturbation, std::uint64_t seed) {
    base.validate();
    if (family_size < 1)
        throw ValidationError("family_around: family_size must be positive");
    if (perturbation < 0.0)
        throw ValidationError("family_around: perturbation must be >= 0");

    Rng rng(seed);
    const int S = base.num_states;
    const std::size_t sa = static_cast<std::size_t>(S) * base.num_actions;

    std::vector<Mdp> members;
    members.reserve(family_size);
    members.push_back(base);
    for (int i = 1; i < family_size; ++i) {
        Mdp m = base;
        for (std::size_t row = 0; row < sa; ++row) {
            std::vector<double> g = flat_simplex(S, rng);
            double sum = 0.0;
            for (int s2 = 0; s2 < S; ++s2) {
                double v = m.transitions[row * S + s2] + perturbation * g[s2];
                m.transitions[row * S + s2] = v;
                sum += v;
            }
            for (int s2 = 0; s2 < S; ++s2) m.transitions[row * S + s2] /= sum;
        }
        members.push_back(std::move(m));
    }

    std::vector<double> prior(family_size, 1.0 / family_size);
    return finalize_family(std::move(members), std::move(prior),
                           {"around", seed});
}

}  // namespace psrlab
