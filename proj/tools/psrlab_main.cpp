// Command-line front end: family/dataset generation, agent sweeps, bound and
// estimator queries, and the config-driven experiment engine.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "psrlab/errors.hpp"
#include "psrlab/harness.hpp"
#include "psrlab/json_io.hpp"

using namespace psrlab;
using nlohmann::json;

namespace {

double parse_lambda_arg(const std::string& text) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    return std::stod(text);
}

std::vector<long> parse_checkpoints(const std::string& text, long horizon) {
    std::vector<long> out;
    if (text.empty()) {
        for (int i = 1; i <= 10; ++i) {
            long cp = horizon * i / 10;
            if (cp >= 1 && (out.empty() || cp > out.back())) out.push_back(cp);
        }
        return out;
    }
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(std::stol(text.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] < 1 || out[i] > horizon)
            throw ValidationError("checkpoints must lie in [1, horizon]");
        if (i > 0 && out[i] <= out[i - 1])
            throw ValidationError("checkpoints must be strictly increasing");
    }
    return out;
}

json episode_summary(const EpisodeRecord& ep, bool with_posterior) {
    json e{{"start", ep.start},
           {"length", ep.length},
           {"member", ep.sampled_member},
           {"mismatch", ep.mismatch}};
    if (with_posterior) e["posterior_mismatch"] = ep.posterior_mismatch;
    return e;
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty())
        std::cout << j.dump(2) << "\n";
    else
        save_json_file(out_path, j);
}

// Shared driver for the run-ipsrl / run-irlsvi subcommands.
struct SweepArgs {
    std::string family_path;
    std::string dataset_path;
    int member = -1;
    double beta = -1.0;  // <0: take it from the dataset metadata
    std::string schedule = "linear";
    long horizon = 10000;
    int runs = 1;
    std::string checkpoints;
    std::uint64_t seed = 1;
    std::string out = "out";
    int threads = 0;
};

void run_sweep(const SweepArgs& args, bool use_irlsvi,
               const IrlsviHyper& hyper, const MinimizeOpts& opts) {
    const ParameterFamily family = [&] {
        return family_from_json(load_json_file(args.family_path));
    }();
    const EpisodeSchedule schedule = parse_schedule(args.schedule);
    const std::vector<long> cps =
        parse_checkpoints(args.checkpoints, args.horizon);

    OfflineDataset base_data = OfflineDataset::empty();
    int fixed_member = args.member;
    double beta = args.beta;
    if (!args.dataset_path.empty()) {
        base_data = dataset_from_json(load_json_file(args.dataset_path));
        if (fixed_member < 0) fixed_member = base_data.meta.true_member_index;
        if (beta < 0.0) beta = base_data.meta.beta;
    }
    if (beta < 0.0) beta = 0.0;
    if (fixed_member >= static_cast<int>(family.size()))
        throw ValidationError("member index outside the family");

    std::filesystem::create_directories(args.out);
    std::vector<json> summaries(args.runs);
    std::vector<std::vector<double>> regrets(args.runs);

    parallel_for(args.runs, args.threads, [&](std::size_t run) {
        Rng rng(derive_seed(args.seed, run));
        int member = fixed_member;
        if (member < 0) member = static_cast<int>(rng.categorical(family.prior));

        RunTrace trace;
        if (use_irlsvi) {
            trace = run_irlsvi(family.members[member], base_data, schedule,
                               args.horizon, hyper, opts, rng);
            trace.true_member = member;
            trace.true_gain = family.plans[member].gain;
        } else {
            trace = run_ipsrl(family, member, base_data, beta, schedule,
                              args.horizon, rng);
        }
        std::vector<double> regret = cumulative_regret(trace);

        json eps = json::array();
        for (const EpisodeRecord& ep : trace.episodes)
            eps.push_back(episode_summary(ep, !use_irlsvi));
        summaries[run] = json{{"run", run},
                              {"true_member", trace.true_member},
                              {"true_gain", trace.true_gain},
                              {"final_regret", regret.back()},
                              {"episodes", eps}};
        std::vector<double>& row = regrets[run];
        for (long cp : cps) row.push_back(regret[cp - 1]);
    });

    for (int run = 0; run < args.runs; ++run)
        save_json_file(args.out + "/trace_run" + std::to_string(run) + ".json",
                       summaries[run]);

    std::string csv = "run,t,cumulative_regret\n";
    char buf[40];
    for (int run = 0; run < args.runs; ++run)
        for (std::size_t i = 0; i < cps.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", regrets[run][i]);
            csv += std::to_string(run) + "," + std::to_string(cps[i]) + "," +
                   buf + "\n";
        }
    write_text_file_atomic(args.out + "/regret.csv", csv);
    std::cout << "wrote " << args.runs << " traces to " << args.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Tabular average-reward MDP lab: exact informed posterior sampling, "
        "its randomized-loss approximation, and a Monte Carlo regret "
        "harness"};
    app.require_subcommand(1);

    try {
        // ---------------- generate-family ----------------
        auto* gen_family = app.add_subcommand(
            "generate-family", "Generate a candidate environment family");
        FamilyConfig fam_cfg;
        std::string gf_out = "family.json";
        gen_family->add_option("--type", fam_cfg.type,
                               "random | riverswim");
        gen_family->add_option("--states", fam_cfg.num_states);
        gen_family->add_option("--actions", fam_cfg.num_actions);
        gen_family->add_option("--size", fam_cfg.family_size);
        gen_family->add_option("--min-prob", fam_cfg.min_prob);
        gen_family->add_option("--right-success", fam_cfg.right_success);
        gen_family->add_option("--left-reward", fam_cfg.left_reward);
        gen_family->add_option("--right-reward", fam_cfg.right_reward);
        gen_family->add_option("--perturbation", fam_cfg.perturbation);
        gen_family->add_option("--seed", fam_cfg.seed);
        gen_family->add_option("--out", gf_out);
        gen_family->callback([&] {
            ParameterFamily fam = build_family(fam_cfg);
            save_json_file(gf_out, family_to_json(fam));
            std::cout << "family " << fam.id << ": " << fam.size()
                      << " members, span " << fam.span << ", gap " << fam.gap
                      << " -> " << gf_out << "\n";
        });

        // ---------------- generate-offline ----------------
        auto* gen_offline = app.add_subcommand(
            "generate-offline", "Roll an expert demonstration trajectory");
        std::string go_family, go_out = "offline.json", go_lambda = "inf";
        int go_member = 0, go_start = 0;
        double go_beta = 10.0;
        long go_steps = 100;
        std::uint64_t go_seed = 1;
        gen_offline->add_option("--family", go_family)->required();
        gen_offline->add_option("--member", go_member)->required();
        gen_offline->add_option("--beta", go_beta);
        gen_offline->add_option("--lambda", go_lambda,
                                "positive number or inf");
        gen_offline->add_option("--steps", go_steps);
        gen_offline->add_option("--start", go_start);
        gen_offline->add_option("--seed", go_seed);
        gen_offline->add_option("--out", go_out);
        gen_offline->callback([&] {
            ParameterFamily fam = family_from_json(load_json_file(go_family));
            if (go_member < 0 || go_member >= static_cast<int>(fam.size()))
                throw ValidationError("member index outside the family");
            const Mdp& env = fam.members[go_member];
            Rng rng(go_seed);
            Competence comp(go_beta, parse_lambda_arg(go_lambda));
            StochasticPolicy pol =
                expert_policy(fam.plans[go_member].qvalues, env.num_states,
                              env.num_actions, comp, rng);
            OfflineDataset data =
                generate_offline(env, pol, go_steps, go_start, rng);
            data.meta.beta = go_beta;
            data.meta.lambda = comp.lambda;
            data.meta.seed = go_seed;
            data.meta.true_member_index = go_member;
            save_json_file(go_out, dataset_to_json(data));
            std::cout << "offline dataset: " << data.num_steps()
                      << " steps from member " << go_member << " -> " << go_out
                      << "\n";
        });

        // ---------------- run-ipsrl ----------------
        SweepArgs ps_args;
        auto* run_ps = app.add_subcommand(
            "run-ipsrl", "Posterior-sampling sweep with an informed prior");
        run_ps->add_option("--family", ps_args.family_path)->required();
        run_ps->add_option("--dataset", ps_args.dataset_path);
        run_ps->add_option("--member", ps_args.member);
        run_ps->add_option("--beta", ps_args.beta);
        run_ps->add_option("--schedule", ps_args.schedule,
                           "linear | eps:<x> | const:<n>");
        run_ps->add_option("--horizon", ps_args.horizon);
        run_ps->add_option("--runs", ps_args.runs);
        run_ps->add_option("--checkpoints", ps_args.checkpoints,
                           "comma-separated times (default: deciles)");
        run_ps->add_option("--seed", ps_args.seed);
        run_ps->add_option("--out", ps_args.out);
        run_ps->add_option("--threads", ps_args.threads);
        run_ps->callback([&] { run_sweep(ps_args, false, {}, {}); });

        // ---------------- run-irlsvi ----------------
        SweepArgs rl_args;
        IrlsviHyper rl_hyper;
        MinimizeOpts rl_opts;
        std::string rl_beta_est = "map";
        auto* run_rl = app.add_subcommand(
            "run-irlsvi", "Randomized-loss sweep (approximate sampling)");
        run_rl->add_option("--family", rl_args.family_path)->required();
        run_rl->add_option("--dataset", rl_args.dataset_path);
        run_rl->add_option("--member", rl_args.member);
        run_rl->add_option("--schedule", rl_args.schedule);
        run_rl->add_option("--horizon", rl_args.horizon);
        run_rl->add_option("--runs", rl_args.runs);
        run_rl->add_option("--checkpoints", rl_args.checkpoints);
        run_rl->add_option("--seed", rl_args.seed);
        run_rl->add_option("--out", rl_args.out);
        run_rl->add_option("--threads", rl_args.threads);
        run_rl->add_option("--sigma", rl_hyper.sigma);
        run_rl->add_option("--lambda2", rl_hyper.lambda2);
        run_rl->add_option("--prior-prec", rl_hyper.prior_precision);
        run_rl->add_option("--beta-est", rl_beta_est, "map | entropy");
        run_rl->add_option("--outer-iters", rl_opts.outer_iters);
        run_rl->add_option("--inner-iters", rl_opts.inner_iters);
        run_rl->add_option("--learning-rate", rl_opts.learning_rate);
        run_rl->callback([&] {
            if (rl_beta_est == "entropy")
                rl_hyper.beta_estimate = IrlsviHyper::BetaEstimate::entropy;
            else if (rl_beta_est != "map")
                throw ValidationError("--beta-est must be map or entropy");
            run_sweep(rl_args, true, rl_hyper, rl_opts);
        });

        // ---------------- estimate-epsilon ----------------
        auto* est_eps = app.add_subcommand(
            "estimate-epsilon", "Initial mismatch probability of a family");
        std::string ee_family, ee_lambda = "inf", ee_out;
        ExpertSetup ee_expert;
        long ee_steps = 0;
        int ee_runs = 500;
        std::uint64_t ee_seed = 1;
        est_eps->add_option("--family", ee_family)->required();
        est_eps->add_option("--beta", ee_expert.beta);
        est_eps->add_option("--lambda", ee_lambda);
        est_eps->add_option("--steps", ee_steps);
        est_eps->add_option("--start", ee_expert.start_state);
        est_eps->add_option("--runs", ee_runs);
        est_eps->add_option("--seed", ee_seed);
        est_eps->add_option("--out", ee_out);
        est_eps->callback([&] {
            ParameterFamily fam = family_from_json(load_json_file(ee_family));
            ee_expert.lambda = parse_lambda_arg(ee_lambda);
            EpsilonEstimate e =
                estimate_epsilon(fam, ee_expert, ee_steps, ee_runs, ee_seed);
            emit(json{{"n", ee_steps},
                      {"estimate", e.estimate},
                      {"stderr", e.stderr_},
                      {"runs", e.runs}},
                 ee_out);
        });

        // ---------------- bound ----------------
        auto* bound_cmd = app.add_subcommand(
            "bound", "Evaluate the prior-dependent regret bound");
        double b_eps = 0.1, b_vbar = 1.0;
        int b_states = 5, b_actions = 3;
        long b_horizon = 10000;
        std::string b_schedule = "linear", b_out;
        bound_cmd->add_option("--epsilon", b_eps)->required();
        bound_cmd->add_option("--states", b_states)->required();
        bound_cmd->add_option("--actions", b_actions)->required();
        bound_cmd->add_option("--horizon", b_horizon)->required();
        bound_cmd->add_option("--schedule", b_schedule);
        bound_cmd->add_option("--vbar", b_vbar)->required();
        bound_cmd->add_option("--out", b_out);
        bound_cmd->callback([&] {
            BoundReport rep =
                theorem1_bound(b_eps, b_states, b_actions, b_horizon,
                               parse_schedule(b_schedule), b_vbar);
            emit(json{{"epsilon", rep.epsilon},
                      {"r1", rep.r1},
                      {"r2", rep.r2},
                      {"r3", rep.r3},
                      {"total", rep.total},
                      {"inputs",
                       {{"num_states", rep.inputs.num_states},
                        {"num_actions", rep.inputs.num_actions},
                        {"horizon", rep.inputs.horizon},
                        {"num_episodes", rep.inputs.num_episodes},
                        {"max_episode_len", rep.inputs.max_episode_len},
                        {"vbar", rep.inputs.vbar}}}},
                 b_out);
        });

        // ---------------- check-lemma2 ----------------
        auto* lemma2 = app.add_subcommand(
            "check-lemma2",
            "Sampled-policy mismatch vs twice the estimator mismatch");
        std::string l2_family, l2_out;
        ExpertSetup l2_expert;
        long l2_steps = 100;
        int l2_runs = 500;
        std::uint64_t l2_seed = 1;
        bool l2_failed = false;
        lemma2->add_option("--family", l2_family)->required();
        lemma2->add_option("--beta", l2_expert.beta);
        lemma2->add_option("--steps", l2_steps);
        lemma2->add_option("--start", l2_expert.start_state);
        lemma2->add_option("--runs", l2_runs);
        lemma2->add_option("--seed", l2_seed);
        lemma2->add_option("--out", l2_out);
        lemma2->callback([&] {
            ParameterFamily fam = family_from_json(load_json_file(l2_family));
            Lemma2Report rep =
                lemma2_check(fam, l2_expert, l2_steps, l2_runs, l2_seed);
            emit(json{{"p1", rep.p1},
                      {"se1", rep.se1},
                      {"p2", rep.p2},
                      {"se2", rep.se2},
                      {"threshold", rep.threshold},
                      {"pass", rep.pass},
                      {"runs", rep.runs}},
                 l2_out);
            l2_failed = !rep.pass;
        });

        // ---------------- experiment ----------------
        auto* exp_cmd = app.add_subcommand(
            "experiment", "Config-driven sweep with regret/bound reports");
        std::string ex_config, ex_out = "experiment_out";
        int ex_threads = 0;
        std::uint64_t ex_seed = 0;
        bool ex_seed_set = false;
        exp_cmd->add_option("--config", ex_config)->required();
        exp_cmd->add_option("--out", ex_out);
        exp_cmd->add_option("--threads", ex_threads,
                            "parallelism degree only, no semantic effect");
        exp_cmd->add_option("--seed", ex_seed)
            ->each([&](const std::string&) { ex_seed_set = true; });
        exp_cmd->callback([&] {
            ExperimentConfig cfg = load_experiment_config(ex_config);
            if (ex_seed_set) cfg.master_seed = ex_seed;
            std::vector<std::string> cells =
                run_experiment(cfg, ex_out, ex_threads);
            std::cout << "experiment finished: " << cells.size()
                      << " cells -> " << ex_out << "\n";
        });

        CLI11_PARSE(app, argc, argv);
        return l2_failed ? 1 : 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
