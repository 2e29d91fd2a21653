// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Statistical criteria run on the shipped golden config.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "psrlab/errors.hpp"
#include "psrlab/harness.hpp"
#include "psrlab/json_io.hpp"
#include "psrlab/numerics.hpp"
#include "test_util.hpp"

using namespace psrlab;
using namespace psrlab::test;
namespace fs = std::filesystem;

namespace {

#ifndef PSRLAB_CONFIG_DIR
#define PSRLAB_CONFIG_DIR "configs"
#endif

int g_failures = 0;

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void report(int index, const std::string& name, bool pass,
            const std::string& detail, double seconds) {
    if (!pass) ++g_failures;
    std::printf("[%s] criterion %d: %s — %s (%.2f s)\n",
                pass ? "PASS" : "FAIL", index, name.c_str(), detail.c_str(),
                seconds);
    std::fflush(stdout);
}

std::string fmt1(double x) {
    char b[64];
    std::snprintf(b, sizeof(b), "%.4g", x);
    return b;
}

// ------------------------- summary.csv parsing -----------------------------

struct SummaryRow {
    long checkpoint = 0;
    double mean = 0.0;
    double se = 0.0;
    double bound = 0.0;
};

std::map<std::string, std::map<long, SummaryRow>> parse_summary(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("missing summary: " + path);
    std::map<std::string, std::map<long, SummaryRow>> out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::stringstream row(line);
        std::string cell, cp, mean_s, se_s, bound_s;
        std::getline(row, cell, ',');
        std::getline(row, cp, ',');
        std::getline(row, mean_s, ',');
        std::getline(row, se_s, ',');
        std::getline(row, bound_s, ',');
        SummaryRow r{std::stol(cp), std::stod(mean_s), std::stod(se_s),
                     std::stod(bound_s)};
        out[cell][r.checkpoint] = r;
    }
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("missing file: " + p.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// ------------------------------ criteria -----------------------------------

void criterion1_planner() {
    Timer timer;
    Rng seeder(160493);
    bool pass = true;
    double worst_gap = 0.0;
    double worst_residual = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int S = 1 + static_cast<int>(seeder.next_u64() % 3);
        const int A = 1 + static_cast<int>(seeder.next_u64() % 2);
        Mdp m = random_dense_mdp(S, A, seeder);
        PlanSolution sol = solve_avg_reward(m, 1e-10);
        double brute = brute_force_best_gain(m);
        worst_gap = std::max(worst_gap, std::fabs(sol.gain - brute));
        worst_residual = std::max(worst_residual, sol.residual);
        if (std::fabs(sol.gain - brute) > 1e-8 || sol.residual > 1e-10)
            pass = false;
    }
    double secs = timer.seconds();
    if (secs >= 10.0) pass = false;
    report(1, "planner exactness vs exhaustive enumeration", pass,
           "100 instances, worst |gain gap| " + fmt1(worst_gap) +
               ", worst residual " + fmt1(worst_residual),
           secs);
}

void criterion2_posterior() {
    Timer timer;
    Rng seeder(271828);
    bool pass = true;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int family_size = 2 + static_cast<int>(seeder.next_u64() % 19);
        const int S = 2 + static_cast<int>(seeder.next_u64() % 3);
        const int A = 2 + static_cast<int>(seeder.next_u64() % 2);
        const long n = static_cast<long>(seeder.next_u64() % 201);
        const long t = static_cast<long>(seeder.next_u64() % 101);
        const double beta = 12.0 * seeder.uniform();
        ParameterFamily fam =
            make_random_family(S, A, family_size, 0.02, 7000 + i);

        Rng rng(90000 + i);
        const int member = static_cast<int>(rng.categorical(fam.prior));
        StochasticPolicy pol = expert_policy(fam.plans[member].qvalues, S, A,
                                             Competence(beta), rng);
        OfflineDataset data =
            generate_offline(fam.members[member], pol, n, 0, rng);
        std::vector<Transition> online;
        int s = 0;
        for (long j = 0; j < t; ++j) {
            int a = static_cast<int>(rng.next_u64() % A);
            int s2 = static_cast<int>(
                rng.categorical(fam.members[member].row(s, a)));
            online.push_back({s, a, s2});
            s = s2;
        }
        PosteriorState post =
            online_update(informed_prior(fam, data, beta), fam, online);
        std::vector<double> got = post.normalized();
        std::vector<double> want = brute_posterior(fam, data, beta, online);
        for (std::size_t j = 0; j < got.size(); ++j) {
            double scale = std::max({1e-300, std::fabs(want[j])});
            double rel = std::fabs(got[j] - want[j]) / scale;
            if (want[j] < 1e-280) continue;  // both numerically extinct
            worst = std::max(worst, rel);
            if (rel > 1e-9) pass = false;
        }
    }
    double secs = timer.seconds();
    if (secs >= 10.0) pass = false;
    report(2, "posterior exactness vs long-double brute force", pass,
           "100 family/dataset pairs, worst relative error " + fmt1(worst),
           secs);
}

void criterion3_bound() {
    Timer timer;
    bool pass = true;
    std::string note;

    BoundReport zero =
        theorem1_bound(0.0, 5, 3, 10000, EpisodeSchedule::linear(), 2.0);
    if (!(zero.r1 == 0.0 && zero.r2 == 0.0 && zero.r3 == 0.0 &&
          zero.total == 6.0)) {
        pass = false;
        note += " zero-mismatch case broken;";
    }

    struct Case {
        double eps;
        int s, a;
        long t;
        EpisodeSchedule sched;
        double vbar;
        double r1, r2, r3, total;
    };
    // frozen from an independent high-precision recomputation
    const std::vector<Case> cases{
        {0.1, 5, 3, 10000, EpisodeSchedule::linear(), 2.0,
         14.100000000000000783, 3143.6694616704385805, 1000.0,
         16637.077846681754547},
        {1.0, 2, 2, 100, EpisodeSchedule::constant(10), 0.5, 10.0,
         174.97051561581092257, 100.0, 286.47051561581092257},
        {0.37, 8, 4, 44721, EpisodeSchedule::eps_linear(0.2), 3.25,
         246.78999999999999704, 27316.48967976328813, 16546.769999999999801,
         286725.07291846137153},
        {0.004, 3, 2, 1000, EpisodeSchedule::linear(), 1.0,
         0.18000000000000000375, 76.276011917839845082, 4.0,
         163.91202383567969034},
    };
    double worst = 0.0;
    for (const Case& c : cases) {
        BoundReport b = theorem1_bound(c.eps, c.s, c.a, c.t, c.sched, c.vbar);
        for (auto [got, want] : {std::pair{b.r1, c.r1}, {b.r2, c.r2},
                                 {b.r3, c.r3}, {b.total, c.total}}) {
            double rel = std::fabs(got - want) / std::max(1.0, std::fabs(want));
            worst = std::max(worst, rel);
            if (rel > 1e-12) pass = false;
        }
    }
    report(3, "bound formula reproduction on pinned tuples", pass,
           "5 tuples, worst relative error " + fmt1(worst) + note,
           timer.seconds());
}

struct GoldenOutputs {
    ExperimentConfig config;
    std::map<std::string, std::map<long, SummaryRow>> summary;
    std::string out_dir;
};

GoldenOutputs run_golden(const std::string& out_dir) {
    GoldenOutputs g;
    g.config =
        load_experiment_config(std::string(PSRLAB_CONFIG_DIR) + "/golden.json");
    g.out_dir = out_dir;
    fs::remove_all(out_dir);
    run_experiment(g.config, out_dir, 0);
    g.summary = parse_summary(out_dir + "/summary.csv");
    return g;
}

void criterion4_scaling(const GoldenOutputs& g) {
    Timer timer;
    bool pass = true;
    std::string note;

    const auto& cell = g.summary.at("ipsrl-linear-N0");
    const double ratio = cell.at(10000).mean / cell.at(2500).mean;
    if (!(ratio <= 2.6)) {
        pass = false;
        note += " ratio above 2.6;";
    }
    // bound holds at every checkpoint of every cell (3-stderr slack)
    long violations = 0;
    for (const auto& [name, rows] : g.summary)
        for (const auto& [cp, row] : rows)
            if (row.mean > row.bound + 3.0 * row.se) ++violations;
    if (violations > 0) {
        pass = false;
        note += " " + std::to_string(violations) + " bound violations;";
    }
    report(4, "sqrt-T scaling and bound domination on the golden family",
           pass,
           "regret(T)/regret(T/4) = " + fmt1(ratio) +
               ", bound respected at all checkpoints" + note,
           timer.seconds());
}

void criterion5_ordering(const GoldenOutputs& g) {
    Timer timer;
    bool pass = true;
    const long final_cp = 10000;
    const SummaryRow& n0 = g.summary.at("ipsrl-linear-N0").at(final_cp);
    const SummaryRow& n200 = g.summary.at("ipsrl-linear-N200").at(final_cp);
    const SummaryRow& n800 = g.summary.at("ipsrl-linear-N800").at(final_cp);
    auto ordered = [](const SummaryRow& lo, const SummaryRow& hi) {
        double pooled = std::sqrt(lo.se * lo.se + hi.se * hi.se);
        return lo.mean <= hi.mean + 2.0 * pooled;
    };
    if (!ordered(n800, n200) || !ordered(n200, n0)) pass = false;
    report(5, "informed-data benefit ordering at the final horizon", pass,
           "mean regret N800 " + fmt1(n800.mean) + " <= N200 " +
               fmt1(n200.mean) + " <= N0 " + fmt1(n0.mean) +
               " (2 pooled stderr)",
           timer.seconds());
}

void criterion6_lemma2_monotone(const ParameterFamily& golden,
                                const ExpertSetup& expert) {
    Timer timer;
    bool pass = true;
    std::string note;

    struct Pinned {
        const ParameterFamily* family;
        double beta;
        long n;
    };
    ParameterFamily small = make_random_family(3, 2, 5, 0.05, 424242);
    const std::vector<Pinned> configs{
        {&golden, 10.0, 200}, {&golden, 0.0, 50}, {&small, 10.0, 100}};
    for (std::size_t i = 0; i < configs.size(); ++i) {
        ExpertSetup setup{configs[i].beta,
                          std::numeric_limits<double>::infinity(), 0};
        Lemma2Report rep = lemma2_check(*configs[i].family, setup,
                                        configs[i].n, 1000, 5100 + i);
        if (!rep.pass) {
            pass = false;
            note += " config " + std::to_string(i) + " failed;";
        }
        note += " [p1 " + fmt1(rep.p1) + " vs 2p2 " + fmt1(2 * rep.p2) + "]";
    }

    MismatchCurve curve =
        mismatch_by_episode(golden, expert, 0, {1, 2, 5, 10},
                            EpisodeSchedule::linear(), 500, 777001);
    for (std::size_t j = 1; j < curve.estimate.size(); ++j) {
        double pooled = std::sqrt(curve.stderr_[0] * curve.stderr_[0] +
                                  curve.stderr_[j] * curve.stderr_[j]);
        if (!(curve.estimate[j] <= curve.estimate[0] + 3.0 * pooled))
            pass = false;
    }
    note += " mismatch by episode:";
    for (double e : curve.estimate) note += " " + fmt1(e);
    report(6, "estimator inequality and episode-mismatch monotonicity", pass,
           note, timer.seconds());
}

void criterion7_epsilon_decay(const ParameterFamily& golden,
                              const ExpertSetup& expert) {
    Timer timer;
    bool pass = true;
    const std::vector<long> grid{0, 50, 200, 800};
    std::vector<EpsilonEstimate> est;
    for (std::size_t i = 0; i < grid.size(); ++i)
        est.push_back(
            estimate_epsilon(golden, expert, grid[i], 500, 31400 + i));
    std::string note = "eps-hat:";
    for (const EpsilonEstimate& e : est) note += " " + fmt1(e.estimate);
    for (std::size_t i = 1; i < est.size(); ++i) {
        double pooled = std::sqrt(est[i].stderr_ * est[i].stderr_ +
                                  est[i - 1].stderr_ * est[i - 1].stderr_);
        if (!(est[i].estimate <= est[i - 1].estimate + 3.0 * pooled))
            pass = false;
    }
    if (!(est.back().estimate < 0.05)) pass = false;
    report(7, "initial-mismatch decay in the offline size", pass, note,
           timer.seconds());
}

void criterion8_irlsvi() {
    Timer timer;
    bool pass = true;
    std::string note;

    // (a) analytic gradient vs central finite differences
    {
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Rng rng(60000 + seed);
            const int S = 2 + static_cast<int>(rng.next_u64() % 2);
            const int A = 2 + static_cast<int>(rng.next_u64() % 2);
            Mdp env = random_dense_mdp(S, A, rng);
            StochasticPolicy uniform;
            uniform.num_actions = A;
            uniform.probs.assign(static_cast<std::size_t>(S) * A, 1.0 / A);
            OfflineDataset data = generate_offline(
                env, uniform, static_cast<long>(rng.next_u64() % 6), 0, rng);
            std::vector<Transition> online;
            int s = 0;
            for (long j = 0; j < static_cast<long>(rng.next_u64() % 6); ++j) {
                int a = static_cast<int>(rng.next_u64() % A);
                int s2 = static_cast<int>(rng.categorical(env.row(s, a)));
                online.push_back({s, a, s2});
                s = s2;
            }
            LossRealization real = build_loss(env, data, online, {}, rng);
            QParams p = QParams::zeros(S, A, 0.2 + 2.0 * rng.uniform());
            for (double& v : p.qtable) v = 2.0 * rng.uniform() - 1.0;
            std::vector<double> frozen = p.qtable;
            for (double& v : frozen) v += 0.3 * (rng.uniform() - 0.5);

            LossValueGrad out = loss_value_and_grad(real, p, frozen);
            const double h = 1e-5;
            double err = 0.0, scale = 1.0;
            for (std::size_t j = 0; j < p.qtable.size(); ++j) {
                QParams lo = p, hi = p;
                lo.qtable[j] -= h;
                hi.qtable[j] += h;
                double fd = (loss_value_and_grad(real, hi, frozen).value -
                             loss_value_and_grad(real, lo, frozen).value) /
                            (2.0 * h);
                err = std::max(err, std::fabs(fd - out.grad_q[j]));
                scale = std::max(scale, std::fabs(out.grad_q[j]));
            }
            QParams blo = p, bhi = p;
            blo.beta -= h;
            bhi.beta += h;
            double fdb = (loss_value_and_grad(real, bhi, frozen).value -
                          loss_value_and_grad(real, blo, frozen).value) /
                         (2.0 * h);
            err = std::max(err, std::fabs(fdb - out.grad_beta));
            scale = std::max(scale, std::fabs(out.grad_beta));
            worst = std::max(worst, err / scale);
        }
        if (worst > 1e-5) pass = false;
        note += "grad err " + fmt1(worst);
    }

    // (b) zero-randomness realization reproduces the MAP objective
    {
        double worst = 0.0;
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            Rng rng(61000 + seed);
            Mdp env = random_dense_mdp(3, 2, rng);
            StochasticPolicy uniform;
            uniform.num_actions = 2;
            uniform.probs.assign(6, 0.5);
            OfflineDataset data = generate_offline(env, uniform, 5, 0, rng);
            std::vector<Transition> online{{0, 1, 1}, {1, 0, 2}, {2, 1, 0}};
            LossRealization real = build_loss(env, data, online, {}, rng);
            zero_randomness(real, data);
            QParams p1 = QParams::zeros(3, 2, 0.7);
            QParams p2 = QParams::zeros(3, 2, 1.9);
            for (double& v : p1.qtable) v = 2.0 * rng.uniform() - 1.0;
            for (double& v : p2.qtable) v = 2.0 * rng.uniform() - 1.0;
            double l1 = loss_value_and_grad(real, p1, p1.qtable).value;
            double l2 = loss_value_and_grad(real, p2, p2.qtable).value;
            double m1 = map_loss(real, data, p1);
            double m2 = map_loss(real, data, p2);
            worst = std::max(worst, std::fabs((l1 - l2) - (m1 - m2)));
        }
        if (worst > 1e-9) pass = false;
        note += ", map diff " + fmt1(worst);
    }

    // (c) imitation loss equals the count-weighted KL up to constants
    {
        Rng rng(62000);
        Mdp env = random_dense_mdp(3, 3, rng);
        StochasticPolicy uniform;
        uniform.num_actions = 3;
        uniform.probs.assign(9, 1.0 / 3);
        OfflineDataset data = generate_offline(env, uniform, 40, 0, rng);
        LossRealization real;
        real.num_states = 3;
        real.num_actions = 3;
        real.sigma = 1.0;
        real.lambda2 = 0.0;
        real.prior_precision.assign(9, 0.0);
        real.prior_anchor.assign(9, 0.0);
        real.offline_count = data.num_steps();
        real.imitation_weights.assign(data.num_steps(), 1.0);
        real.weight_by_sa.assign(9, 0.0);
        real.weight_by_state.assign(3, 0.0);
        for (std::size_t k = 0; k < data.num_steps(); ++k) {
            real.weight_by_sa[static_cast<std::size_t>(data.states[k]) * 3 +
                              data.actions[k]] += 1.0;
            real.weight_by_state[data.states[k]] += 1.0;
        }
        auto kl_sum = [&](const QParams& p) {
            double acc = 0.0;
            for (int s = 0; s < 3; ++s) {
                double ns = real.weight_by_state[s];
                if (ns == 0.0) continue;
                double z = 0.0;
                for (int a = 0; a < 3; ++a) z += std::exp(p.beta * p.q(s, a));
                for (int a = 0; a < 3; ++a) {
                    double nsa = real.weight_by_sa[s * 3 + a];
                    if (nsa == 0.0) continue;
                    double phat = nsa / ns;
                    double pm = std::exp(p.beta * p.q(s, a)) / z;
                    acc += ns * phat * std::log(phat / pm);
                }
            }
            return acc;
        };
        Rng prng(63000);
        QParams p1 = QParams::zeros(3, 3, 0.6);
        QParams p2 = QParams::zeros(3, 3, 2.3);
        for (double& v : p1.qtable) v = 2.0 * prng.uniform() - 1.0;
        for (double& v : p2.qtable) v = 2.0 * prng.uniform() - 1.0;
        double l1 = loss_value_and_grad(real, p1, p1.qtable).value;
        double l2 = loss_value_and_grad(real, p2, p2.qtable).value;
        double diff = std::fabs((l1 - l2) - (kl_sum(p1) - kl_sum(p2)));
        if (diff > 1e-9) pass = false;
        note += ", kl diff " + fmt1(diff);
    }

    // (d) perfect offline data recovers the optimal policy
    {
        Rng gen(5150);
        Mdp env = random_dense_mdp(3, 2, gen);
        PlanSolution plan = solve_avg_reward(env);
        int hits = 0;
        const int seeds = 100;
        for (int r = 0; r < seeds; ++r) {
            Rng rng(derive_seed(64000, r));
            StochasticPolicy pol =
                expert_policy(plan.qvalues, 3, 2, Competence(50.0), rng);
            OfflineDataset data = generate_offline(env, pol, 400, 0, rng);
            LossRealization real = build_loss(env, data, {}, {}, rng);
            MinimizeOpts opts;
            opts.outer_iters = 10;
            opts.inner_iters = 150;
            MinimizeResult res =
                minimize_loss(real, QParams::zeros(3, 2, 1.0), opts);
            if (greedy_policy(res.params.qtable, 3, 2).actions ==
                plan.policy.actions)
                ++hits;
        }
        if (hits < 90) pass = false;
        note += ", recovery " + std::to_string(hits) + "/100";
    }

    report(8, "randomized-loss correctness suite", pass, note,
           timer.seconds());
}

void criterion9_determinism(const GoldenOutputs& first) {
    Timer timer;
    run_experiment(first.config, "acceptance_out/run2", 0);
    bool pass = true;
    std::string note;
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(first.out_dir))
        names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    for (const std::string& n : names) {
        if (slurp(fs::path(first.out_dir) / n) !=
            slurp(fs::path("acceptance_out/run2") / n)) {
            pass = false;
            note += " " + n + " differs;";
        }
    }
    report(9, "bit-identical outputs across consecutive experiment runs",
           pass, std::to_string(names.size()) + " files compared" + note,
           timer.seconds());
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    Timer total;

    criterion1_planner();
    criterion2_posterior();
    criterion3_bound();

    Timer golden_timer;
    GoldenOutputs golden_run = run_golden("acceptance_out/run1");
    std::printf("  (golden experiment: %.2f s, %zu cells)\n",
                golden_timer.seconds(), golden_run.summary.size());
    const ParameterFamily golden_family = build_family(golden_run.config.family);
    const ExpertSetup golden_expert = golden_run.config.expert;

    criterion4_scaling(golden_run);
    criterion5_ordering(golden_run);
    criterion6_lemma2_monotone(golden_family, golden_expert);
    criterion7_epsilon_decay(golden_family, golden_expert);
    criterion8_irlsvi();
    criterion9_determinism(golden_run);

    std::printf("%s: %d criterion(s) failed (total %.1f s)\n",
                g_failures == 0 ? "SUCCESS" : "FAILURE", g_failures,
                total.seconds());
    return g_failures;
}
