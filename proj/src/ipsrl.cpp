#include "psrlab/ipsrl.hpp"

#include "psrlab/errors.hpp"

namespace psrlab {

RunTrace run_ipsrl(const ParameterFamily& family, int true_member,
                   const OfflineDataset& dataset, double beta,
                   const EpisodeSchedule& schedule, long horizon, Rng& rng,
                   PosteriorState* final_posterior) {
    if (true_member < 0 || static_cast<std::size_t>(true_member) >= family.size())
        throw ValidationError("run_ipsrl: true member out of range");
    const std::vector<long> lengths = schedule_lengths(schedule, horizon);
    const Mdp& env = family.members[true_member];
    const DeterministicPolicy& optimal = family.plans[true_member].policy;

    PosteriorState post = informed_prior(family, dataset, beta);

    RunTrace trace;
    trace.true_member = true_member;
    trace.true_gain = family.plans[true_member].gain;
    trace.steps.reserve(horizon);
    trace.episodes.reserve(lengths.size());

    int s = static_cast<int>(rng.categorical(env.initial_dist));
    long t = 0;
    std::vector<Transition> segment;
    for (long tk : lengths) {
        const int sampled = static_cast<int>(sample_member(post, rng));
        const DeterministicPolicy& pol = family.plans[sampled].policy;

        EpisodeRecord ep;
        ep.start = t;
        ep.length = tk;
        ep.sampled_member = sampled;
        ep.mismatch = pol.actions != optimal.actions;
        ep.posterior_mismatch = mismatch_probability(post, family);
        trace.episodes.push_back(ep);

        segment.clear();
        segment.reserve(tk);
        for (long i = 0; i < tk; ++i) {
            const int a = pol.actions[s];
            const double r = env.reward(s, a);
            const int s2 = static_cast<int>(rng.categorical(env.row(s, a)));
            trace.steps.push_back({t, s, a, r});
            segment.push_back({s, a, s2});
            s = s2;
            ++t;
        }
        post = online_update(post, family, segment);
    }

    if (final_posterior) *final_posterior = std::move(post);
    return trace;
}

}  // namespace psrlab
