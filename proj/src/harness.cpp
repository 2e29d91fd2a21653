#include "psrlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "psrlab/errors.hpp"
#include "psrlab/json_io.hpp"
#include "psrlab/numerics.hpp"
#include "psrlab/posterior.hpp"

namespace psrlab {

using nlohmann::json;

namespace {

constexpr std::uint64_t kPurposeEpsilon = 1;
constexpr std::uint64_t kPurposeRun = 2;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Draws the expert's policy and a fresh offline trajectory for one member;
// n == 0 yields the zero-step dataset without consuming randomness.
OfflineDataset make_expert_dataset(const ParameterFamily& family, int member,
                                   const ExpertSetup& expert, long n, Rng& rng,
                                   std::uint64_t seed_label) {
    OfflineDataset data;
    if (n == 0) {
        data = OfflineDataset::empty(expert.start_state);
    } else {
        const Mdp& env = family.members[member];
        Competence comp(expert.beta, expert.lambda);
        StochasticPolicy pol =
            expert_policy(family.plans[member].qvalues, env.num_states,
                          env.num_actions, comp, rng);
        data = generate_offline(env, pol, n, expert.start_state, rng);
    }
    data.meta.beta = expert.beta;
    data.meta.lambda = expert.lambda;
    data.meta.seed = seed_label;
    data.meta.true_member_index = member;
    return data;
}

}  // namespace

std::vector<double> cumulative_regret(const RunTrace& trace) {
    std::vector<double> out;
    out.reserve(trace.steps.size());
    double acc = 0.0;
    for (const StepRecord& step : trace.steps) {
        acc += trace.true_gain - step.reward;
        out.push_back(acc);
    }
    return out;
}

BoundReport theorem1_bound(double epsilon, int num_states, int num_actions,
                           long horizon, const EpisodeSchedule& schedule,
                           double vbar) {
    if (num_states < 1 || num_actions < 1 || horizon < 1)
        throw ValidationError("theorem1_bound: inputs must be positive");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw ValidationError("theorem1_bound: epsilon must be in [0, 1]");
    if (vbar < 0.0) throw ValidationError("theorem1_bound: vbar must be >= 0");

    const std::vector<long> lengths = schedule_lengths(schedule, horizon);
    const double k = static_cast<double>(lengths.size());
    const double max_tk =
        static_cast<double>(*std::max_element(lengths.begin(), lengths.end()));
    const double s = num_states;
    const double a = num_actions;
    const double t = static_cast<double>(horizon);

    BoundReport rep;
    rep.epsilon = epsilon;
    rep.r1 = epsilon * k;
    rep.r2 = std::sqrt(epsilon * s * s * a * t * std::log(2.0 * s * a * k * t) *
                       (1.0 + std::log(t / (s * a) + 1.0)));
    rep.r3 = std::min(epsilon * t,
                      s * a * max_tk * std::log2(t / (s * a) + 1.0));
    rep.total = 3.0 * vbar + 2.0 * vbar * (rep.r1 + rep.r2 + rep.r3);
    rep.inputs = {num_states, num_actions, horizon,
                  static_cast<long>(lengths.size()),
                  static_cast<long>(max_tk), vbar};
    return rep;
}

EpsilonEstimate estimate_epsilon(const ParameterFamily& family,
                                 const ExpertSetup& expert, long offline_n,
                                 int runs, std::uint64_t seed) {
    if (runs < 1) throw ValidationError("estimate_epsilon: runs must be >= 1");
    std::vector<double> samples(runs);
    for (int r = 0; r < runs; ++r) {
        Rng rng(derive_seed(seed, r));
        const int member = static_cast<int>(rng.categorical(family.prior));
        OfflineDataset data =
            make_expert_dataset(family, member, expert, offline_n, rng, seed);
        PosteriorState post = informed_prior(family, data, expert.beta);
        samples[r] = mismatch_probability(post, family);
    }
    return {mean(samples), sample_stderr(samples), runs};
}

Lemma2Report lemma2_check(const ParameterFamily& family,
                          const ExpertSetup& expert, long offline_n, int runs,
                          std::uint64_t seed) {
    if (runs < 1) throw ValidationError("lemma2_check: runs must be >= 1");
    const Mdp& shape = family.members.front();
    std::vector<double> p1(runs), p2(runs);
    for (int r = 0; r < runs; ++r) {
        Rng rng(derive_seed(seed, r));
        const int member = static_cast<int>(rng.categorical(family.prior));
        OfflineDataset data =
            make_expert_dataset(family, member, expert, offline_n, rng, seed);
        PosteriorState post = informed_prior(family, data, expert.beta);
        p1[r] = mismatch_probability(post, family);
        DeterministicPolicy estimate =
            majority_estimator(data, shape.num_states, shape.num_actions);
        p2[r] = estimate.actions == family.plans[member].policy.actions ? 0.0
                                                                        : 1.0;
    }
    Lemma2Report rep;
    rep.runs = runs;
    rep.p1 = mean(p1);
    rep.se1 = sample_stderr(p1);
    rep.p2 = mean(p2);
    rep.se2 = sample_stderr(p2);
    const double pooled = std::sqrt(rep.se1 * rep.se1 + 4.0 * rep.se2 * rep.se2);
    rep.threshold = 2.0 * rep.p2 + 3.0 * pooled;
    rep.pass = rep.p1 <= rep.threshold;
    return rep;
}

MismatchCurve mismatch_by_episode(const ParameterFamily& family,
                                  const ExpertSetup& expert, long offline_n,
                                  const std::vector<int>& episodes,
                                  const EpisodeSchedule& schedule, int runs,
                                  std::uint64_t seed) {
    if (episodes.empty() || runs < 1)
        throw ValidationError("mismatch_by_episode: empty request");
    const int max_episode = *std::max_element(episodes.begin(), episodes.end());
    if (max_episode < 1)
        throw ValidationError("mismatch_by_episode: episode indices are 1-based");

    long horizon = 0;
    for (long k = 1; k <= max_episode; ++k) horizon += nominal_length(schedule, k);

    std::vector<std::vector<double>> samples(episodes.size(),
                                             std::vector<double>(runs));
    for (int r = 0; r < runs; ++r) {
        Rng rng(derive_seed(seed, r));
        const int member = static_cast<int>(rng.categorical(family.prior));
        OfflineDataset data =
            make_expert_dataset(family, member, expert, offline_n, rng, seed);
        RunTrace trace = run_ipsrl(family, member, data, expert.beta, schedule,
                                   horizon, rng);
        for (std::size_t j = 0; j < episodes.size(); ++j)
            samples[j][r] = trace.episodes[episodes[j] - 1].posterior_mismatch;
    }

    MismatchCurve curve;
    curve.episodes = episodes;
    for (std::size_t j = 0; j < episodes.size(); ++j) {
        curve.estimate.push_back(mean(samples[j]));
        curve.stderr_.push_back(sample_stderr(samples[j]));
    }
    return curve;
}

// --------------------------- experiment engine ----------------------------

namespace {

// Three-action chain benchmark: action 0 anchors at state 0 for a small
// income, actions 1 and 2 climb toward the top state with different risk
// profiles, and only action 2 collects the large reward at the top. Whether
// climbing beats anchoring (and in which style) is decided by the transition
// numbers, so kernel perturbations flip the optimal policy across family
// members while keeping members statistically close.
Mdp chain3_base(int num_states, double swim_up, double anchor_reward,
                double top_reward) {
    if (num_states < 2)
        throw ConfigError("config error at family.num_states: chain needs >= 2");
    if (swim_up <= 0.0 || swim_up >= 1.0)
        throw ConfigError(
            "config error at family.right_success: chain needs (0, 1)");
    const int S = num_states;
    const int A = 3;
    const double wade_up = 0.4;

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
    for (int s = 0; s < S; ++s) {
        at(s, 0, s > 0 ? s - 1 : 0) = 1.0;  // anchor / retreat
        if (s == 0) {
            at(s, 1, 1) = wade_up;
            at(s, 1, 0) = 1.0 - wade_up;
            at(s, 2, 1) = swim_up;
            at(s, 2, 0) = 1.0 - swim_up;
        } else if (s == S - 1) {
            at(s, 1, s) = 0.9;
            at(s, 1, s - 1) = 0.1;
            at(s, 2, s) = 0.6;
            at(s, 2, s - 1) = 0.4;
        } else {
            at(s, 1, s + 1) = wade_up;   // steady climb
            at(s, 1, s) = 0.5;
            at(s, 1, s - 1) = 0.1;
            at(s, 2, s + 1) = swim_up;   // fast but slippery
            at(s, 2, s) = 0.05;
            at(s, 2, s - 1) = 0.95 - swim_up;
        }
    }
    const double scale = std::max({1.0, anchor_reward, top_reward});
    m.rewards[0 * A + 0] = anchor_reward / scale;
    m.rewards[static_cast<std::size_t>(S - 1) * A + 2] = top_reward / scale;
    m.validate();
    return m;
}

}  // namespace

ParameterFamily build_family(const FamilyConfig& config) {
    if (config.type == "random")
        return make_random_family(config.num_states, config.num_actions,
                                  config.family_size, config.min_prob,
                                  config.seed);
    if (config.type == "riverswim") {
        Mdp base = make_riverswim(config.num_states, config.right_success,
                                  config.left_reward, config.right_reward);
        return family_around(base, config.family_size, config.perturbation,
                             config.seed);
    }
    if (config.type == "chain") {
        Mdp base = chain3_base(config.num_states, config.right_success,
                               config.left_reward, config.right_reward);
        return family_around(base, config.family_size, config.perturbation,
                             config.seed);
    }
    throw ConfigError("config error at family.type: unknown type '" +
                      config.type + "'");
}

namespace {

const json& require_field(const json& j, const char* key,
                          const std::string& path) {
    if (!j.contains(key))
        throw ConfigError("config error at " + path + ": missing field '" +
                          key + "'");
    return j.at(key);
}

template <typename T>
T field_as(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config error at " + path + ": wrong type");
    }
}

template <typename T>
T optional_field(const json& j, const char* key, const std::string& path,
                 T fallback) {
    if (!j.contains(key)) return fallback;
    return field_as<T>(j.at(key), path + "." + key);
}

double parse_lambda(const json& j, const std::string& path) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf")
            return std::numeric_limits<double>::infinity();
        throw ConfigError("config error at " + path +
                          ": expected a number or \"inf\"");
    }
    return field_as<double>(j, path);
}

json experiment_config_to_json(const ExperimentConfig& c) {
    json fam{{"type", c.family.type},
             {"num_states", c.family.num_states},
             {"num_actions", c.family.num_actions},
             {"family_size", c.family.family_size},
             {"min_prob", c.family.min_prob},
             {"seed", c.family.seed},
             {"right_success", c.family.right_success},
             {"left_reward", c.family.left_reward},
             {"right_reward", c.family.right_reward},
             {"perturbation", c.family.perturbation}};
    json expert{{"beta", c.expert.beta},
                {"lambda", std::isinf(c.expert.lambda)
                               ? json("inf")
                               : json(c.expert.lambda)},
                {"start_state", c.expert.start_state},
                {"n_grid", c.n_grid}};
    json agents = json::array();
    for (const AgentConfig& a : c.agents) {
        agents.push_back(
            {{"type", a.type},
             {"schedule", a.schedule},
             {"sigma", a.hyper.sigma},
             {"lambda2", a.hyper.lambda2},
             {"prior_precision", a.hyper.prior_precision},
             {"offline_rewards_in_rtilde", a.hyper.offline_rewards_in_rtilde},
             {"beta_estimate",
              a.hyper.beta_estimate == IrlsviHyper::BetaEstimate::map
                  ? "map"
                  : "entropy"},
             {"outer_iters", a.opts.outer_iters},
             {"inner_iters", a.opts.inner_iters},
             {"learning_rate", a.opts.learning_rate}});
    }
    return json{{"family", fam},         {"expert", expert},
                {"agents", agents},      {"horizon", c.horizon},
                {"runs", c.runs},        {"checkpoints", c.checkpoints},
                {"epsilon_runs", c.epsilon_runs},
                {"master_seed", c.master_seed}};
}

}  // namespace

ExperimentConfig experiment_config_from_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config error: invalid JSON: ") + e.what());
    }

    ExperimentConfig c;
    const json& jf = require_field(j, "family", "config");
    c.family.type = optional_field<std::string>(jf, "type", "family", "random");
    c.family.num_states =
        optional_field<int>(jf, "num_states", "family", c.family.num_states);
    c.family.num_actions =
        optional_field<int>(jf, "num_actions", "family", c.family.num_actions);
    c.family.family_size =
        optional_field<int>(jf, "family_size", "family", c.family.family_size);
    c.family.min_prob =
        optional_field<double>(jf, "min_prob", "family", c.family.min_prob);
    c.family.seed =
        optional_field<std::uint64_t>(jf, "seed", "family", c.family.seed);
    c.family.right_success = optional_field<double>(jf, "right_success",
                                                    "family",
                                                    c.family.right_success);
    c.family.left_reward =
        optional_field<double>(jf, "left_reward", "family", c.family.left_reward);
    c.family.right_reward = optional_field<double>(jf, "right_reward", "family",
                                                   c.family.right_reward);
    c.family.perturbation = optional_field<double>(jf, "perturbation", "family",
                                                   c.family.perturbation);
    if (c.family.num_states < 1)
        throw ConfigError("config error at family.num_states: must be >= 1");
    if (c.family.family_size < 1)
        throw ConfigError("config error at family.family_size: must be >= 1");

    const json& je = require_field(j, "expert", "config");
    c.expert.beta = optional_field<double>(je, "beta", "expert", 10.0);
    if (je.contains("lambda"))
        c.expert.lambda = parse_lambda(je.at("lambda"), "expert.lambda");
    c.expert.start_state = optional_field<int>(je, "start_state", "expert", 0);
    c.n_grid = optional_field<std::vector<long>>(je, "n_grid", "expert",
                                                 std::vector<long>{0});
    for (long n : c.n_grid)
        if (n < 0)
            throw ConfigError("config error at expert.n_grid: entries must be >= 0");
    if (c.expert.beta < 0.0)
        throw ConfigError("config error at expert.beta: must be >= 0");

    c.agents.clear();
    if (j.contains("agents")) {
        const json& ja = j.at("agents");
        if (!ja.is_array())
            throw ConfigError("config error at agents: expected an array");
        for (std::size_t i = 0; i < ja.size(); ++i) {
            const std::string path = "agents[" + std::to_string(i) + "]";
            const json& a = ja.at(i);
            AgentConfig ac;
            ac.type = optional_field<std::string>(a, "type", path, "ipsrl");
            if (ac.type != "ipsrl" && ac.type != "irlsvi")
                throw ConfigError("config error at " + path +
                                  ".type: expected ipsrl or irlsvi");
            ac.schedule = optional_field<std::string>(a, "schedule", path,
                                                      "linear");
            ac.hyper.sigma = optional_field<double>(a, "sigma", path, 1.0);
            ac.hyper.lambda2 = optional_field<double>(a, "lambda2", path, 1.0);
            ac.hyper.prior_precision =
                optional_field<double>(a, "prior_precision", path, 1.0);
            ac.hyper.offline_rewards_in_rtilde = optional_field<bool>(
                a, "offline_rewards_in_rtilde", path, true);
            const std::string best = optional_field<std::string>(
                a, "beta_estimate", path, "map");
            if (best == "map")
                ac.hyper.beta_estimate = IrlsviHyper::BetaEstimate::map;
            else if (best == "entropy")
                ac.hyper.beta_estimate = IrlsviHyper::BetaEstimate::entropy;
            else
                throw ConfigError("config error at " + path +
                                  ".beta_estimate: expected map or entropy");
            ac.opts.outer_iters = optional_field<int>(a, "outer_iters", path, 10);
            ac.opts.inner_iters =
                optional_field<int>(a, "inner_iters", path, 200);
            ac.opts.learning_rate =
                optional_field<double>(a, "learning_rate", path, 0.1);
            c.agents.push_back(std::move(ac));
        }
    }

    c.horizon = field_as<long>(require_field(j, "horizon", "config"), "horizon");
    if (c.horizon < 1)
        throw ConfigError("config error at horizon: must be >= 1");
    c.runs = field_as<int>(require_field(j, "runs", "config"), "runs");
    if (c.runs < 1) throw ConfigError("config error at runs: must be >= 1");
    c.checkpoints = optional_field<std::vector<long>>(
        j, "checkpoints", "config", std::vector<long>{c.horizon});
    if (c.checkpoints.empty()) c.checkpoints = {c.horizon};
    for (std::size_t i = 0; i < c.checkpoints.size(); ++i) {
        if (c.checkpoints[i] < 1 || c.checkpoints[i] > c.horizon)
            throw ConfigError(
                "config error at checkpoints: entries must lie in [1, horizon]");
        if (i > 0 && c.checkpoints[i] <= c.checkpoints[i - 1])
            throw ConfigError(
                "config error at checkpoints: must be strictly increasing");
    }
    c.epsilon_runs = optional_field<int>(j, "epsilon_runs", "config", 500);
    if (c.epsilon_runs < 1)
        throw ConfigError("config error at epsilon_runs: must be >= 1");
    c.master_seed = field_as<std::uint64_t>(
        require_field(j, "master_seed", "config"), "master_seed");
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return experiment_config_from_text(read_text_file(path));
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn) {
    if (threads <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        threads = hw == 0 ? 1 : static_cast<int>(hw);
    }
    threads = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(threads),
                              std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

struct CellSpec {
    int agent_index = 0;
    long offline_n = 0;
    EpisodeSchedule schedule;
    std::string name;
    double eps_design = 0.0;
};

}  // namespace

std::vector<std::string> run_experiment(const ExperimentConfig& config,
                                        const std::string& out_dir,
                                        int threads) {
    if (!std::isinf(config.expert.lambda))
        throw ConfigError(
            "config error at expert.lambda: the exact path requires \"inf\"");

    std::filesystem::create_directories(out_dir);
    const ParameterFamily family = build_family(config.family);
    const Mdp& shape = family.members.front();
    if (config.expert.start_state < 0 ||
        config.expert.start_state >= shape.num_states)
        throw ConfigError("config error at expert.start_state: out of range");

    const std::string config_digest = [&] {
        char hex[24];
        std::snprintf(
            hex, sizeof(hex), "%016llx",
            static_cast<unsigned long long>(
                fnv1a64(experiment_config_to_json(config).dump())));
        return std::string(hex);
    }();

    // Epsilon estimates per offline size (also feed eps:auto schedules and
    // the bound column). Design value = estimate + 2 stderr, clamped.
    const std::uint64_t eps_seed = derive_seed(config.master_seed,
                                               kPurposeEpsilon);
    std::vector<EpsilonEstimate> eps(config.n_grid.size());
    for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni)
        eps[ni] = estimate_epsilon(family, config.expert, config.n_grid[ni],
                                   config.epsilon_runs,
                                   derive_seed(eps_seed, ni));
    auto design_eps = [&](std::size_t ni) {
        double e = eps[ni].estimate + 2.0 * eps[ni].stderr_;
        return std::min(1.0, std::max(e, 1e-6));
    };

    // Cells = agents x offline sizes.
    std::vector<CellSpec> cells;
    for (std::size_t ai = 0; ai < config.agents.size(); ++ai) {
        for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni) {
            CellSpec cell;
            cell.agent_index = static_cast<int>(ai);
            cell.offline_n = config.n_grid[ni];
            cell.eps_design = design_eps(ni);
            const std::string& sched = config.agents[ai].schedule;
            cell.schedule = sched == "eps:auto"
                                ? EpisodeSchedule::eps_linear(cell.eps_design)
                                : parse_schedule(sched);
            cell.name = config.agents[ai].type + "-" +
                        cell.schedule.describe() + "-N" +
                        std::to_string(cell.offline_n);
            cells.push_back(std::move(cell));
        }
    }

    // One task per (cell, run); each owns a counter-derived rng stream keyed
    // by (agent, run) only, so cells differing in offline size share the
    // member draw and the dataset prefix run by run.
    const std::size_t num_cp = config.checkpoints.size();
    const std::size_t num_tasks = cells.size() * config.runs;
    std::vector<std::vector<double>> task_regret(num_tasks);
    const std::uint64_t run_seed = derive_seed(config.master_seed, kPurposeRun);

    parallel_for(num_tasks, threads, [&](std::size_t task) {
        const std::size_t ci = task / config.runs;
        const int run = static_cast<int>(task % config.runs);
        const CellSpec& cell = cells[ci];
        const AgentConfig& agent = config.agents[cell.agent_index];

        Rng rng(derive_seed(derive_seed(run_seed, cell.agent_index), run));
        const int member = static_cast<int>(rng.categorical(family.prior));
        OfflineDataset data = make_expert_dataset(
            family, member, config.expert, cell.offline_n, rng,
            config.master_seed);

        RunTrace trace;
        if (agent.type == "ipsrl") {
            trace = run_ipsrl(family, member, data, config.expert.beta,
                              cell.schedule, config.horizon, rng);
        } else {
            trace = run_irlsvi(family.members[member], data, cell.schedule,
                               config.horizon, agent.hyper, agent.opts, rng);
        }
        const std::vector<double> regret = cumulative_regret(trace);
        std::vector<double>& out = task_regret[task];
        out.reserve(num_cp);
        for (long cp : config.checkpoints) out.push_back(regret[cp - 1]);
    });

    // ---------------- aggregation and output (single thread) ---------------

    std::vector<std::string> cell_names;
    std::string summary = "cell,checkpoint,mean_regret,stderr,bound_total\n";
    json bounds_cells = json::array();

    // mean/stderr per (cell, checkpoint), kept for the comparison file
    std::vector<std::vector<double>> cell_mean(cells.size()),
        cell_se(cells.size());

    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        const CellSpec& cell = cells[ci];
        cell_names.push_back(cell.name);

        std::string csv = "run,checkpoint,cumulative_regret\n";
        for (int run = 0; run < config.runs; ++run) {
            const std::vector<double>& row = task_regret[ci * config.runs + run];
            for (std::size_t cp = 0; cp < num_cp; ++cp)
                csv += std::to_string(run) + "," +
                       std::to_string(config.checkpoints[cp]) + "," +
                       fmt(row[cp]) + "\n";
        }
        write_text_file_atomic(out_dir + "/regret_" + cell.name + ".csv", csv);

        cell_mean[ci].resize(num_cp);
        cell_se[ci].resize(num_cp);
        std::vector<double> column(config.runs);
        for (std::size_t cp = 0; cp < num_cp; ++cp) {
            for (int run = 0; run < config.runs; ++run)
                column[run] = task_regret[ci * config.runs + run][cp];
            cell_mean[ci][cp] = mean(column);
            cell_se[ci][cp] = sample_stderr(column);
            const BoundReport b =
                theorem1_bound(cell.eps_design, shape.num_states,
                               shape.num_actions, config.checkpoints[cp],
                               cell.schedule, family.span);
            summary += cell.name + "," +
                       std::to_string(config.checkpoints[cp]) + "," +
                       fmt(cell_mean[ci][cp]) + "," + fmt(cell_se[ci][cp]) +
                       "," + fmt(b.total) + "\n";
        }

        const BoundReport final_bound =
            theorem1_bound(cell.eps_design, shape.num_states,
                           shape.num_actions, config.horizon, cell.schedule,
                           family.span);
        bounds_cells.push_back(
            {{"cell", cell.name},
             {"n", cell.offline_n},
             {"epsilon", final_bound.epsilon},
             {"r1", final_bound.r1},
             {"r2", final_bound.r2},
             {"r3", final_bound.r3},
             {"total", final_bound.total},
             {"inputs",
              {{"num_states", final_bound.inputs.num_states},
               {"num_actions", final_bound.inputs.num_actions},
               {"horizon", final_bound.inputs.horizon},
               {"num_episodes", final_bound.inputs.num_episodes},
               {"max_episode_len", final_bound.inputs.max_episode_len},
               {"vbar", final_bound.inputs.vbar}}}});
    }
    write_text_file_atomic(out_dir + "/summary.csv", summary);

    // Informed-vs-uninformed comparison whenever the grid has both N == 0
    // and N > 0 for the same agent.
    std::string comparison =
        "agent,schedule,n_informed,checkpoint,mean_informed,mean_uninformed,"
        "diff,pooled_stderr\n";
    for (std::size_t ai = 0; ai < config.agents.size(); ++ai) {
        int base_ci = -1;
        for (std::size_t ci = 0; ci < cells.size(); ++ci)
            if (cells[ci].agent_index == static_cast<int>(ai) &&
                cells[ci].offline_n == 0)
                base_ci = static_cast<int>(ci);
        if (base_ci < 0) continue;
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            if (cells[ci].agent_index != static_cast<int>(ai) ||
                cells[ci].offline_n == 0)
                continue;
            for (std::size_t cp = 0; cp < num_cp; ++cp) {
                const double pooled = std::sqrt(
                    cell_se[ci][cp] * cell_se[ci][cp] +
                    cell_se[base_ci][cp] * cell_se[base_ci][cp]);
                comparison += config.agents[ai].type + "," +
                              config.agents[ai].schedule + "," +
                              std::to_string(cells[ci].offline_n) + "," +
                              std::to_string(config.checkpoints[cp]) + "," +
                              fmt(cell_mean[ci][cp]) + "," +
                              fmt(cell_mean[base_ci][cp]) + "," +
                              fmt(cell_mean[ci][cp] - cell_mean[base_ci][cp]) +
                              "," + fmt(pooled) + "\n";
            }
        }
    }
    write_text_file_atomic(out_dir + "/comparison.csv", comparison);

    json eps_entries = json::array();
    for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni)
        eps_entries.push_back({{"n", config.n_grid[ni]},
                               {"estimate", eps[ni].estimate},
                               {"stderr", eps[ni].stderr_},
                               {"design", design_eps(ni)},
                               {"runs", eps[ni].runs}});
    save_json_file(out_dir + "/epsilon.json",
                   json{{"config_digest", config_digest},
                        {"estimates", eps_entries}});
    save_json_file(out_dir + "/bounds.json",
                   json{{"config_digest", config_digest},
                        {"vbar", family.span},
                        {"family_id", family.id},
                        {"cells", bounds_cells}});
    return cell_names;
}

}  // namespace psrlab
