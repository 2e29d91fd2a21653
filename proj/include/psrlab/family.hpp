#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psrlab/mdp.hpp"
#include "psrlab/rng.hpp"

namespace psrlab {

// Finite candidate set of environments sharing state/action spaces, reward
// table and initial distribution; only transition kernels differ. Plans are
// precomputed per member, and span/gap hold the family-level constants
// (max bias span, min action gap).
struct ParameterFamily {
    std::vector<Mdp> members;
    std::vector<double> prior;  // sums to 1
    std::vector<PlanSolution> plans;
    double span = 0.0;
    double gap = 0.0;
    std::string id;  // content digest; posterior states bind to it

    // log transition tables per member, cached for posterior updates
    std::vector<std::vector<double>> log_transitions;

    struct Metadata {
        std::string generator;
        std::uint64_t seed = 0;
    } meta;

    std::size_t size() const { return members.size(); }
    double log_transition(std::size_t member, int s, int a, int s2) const {
        const Mdp& m = members[member];
        return log_transitions[member]
                              [(static_cast<std::size_t>(s) * m.num_actions + a) *
                                   m.num_states +
                               s2];
    }
};

// Validates shared structure, solves every member, computes the family
// constants and the content digest. Throws ValidationError on structural
// problems and GenerationError when a member is not communicating or has a
// zero action gap (the latter only when num_actions >= 2).
ParameterFamily finalize_family(std::vector<Mdp> members,
                                std::vector<double> prior,
                                ParameterFamily::Metadata meta = {});

// Random dense family: per-member transition rows drawn from a flat simplex,
// floored at min_prob and renormalized; one shared uniform[0,1] reward table;
// uniform initial distribution and uniform prior. Members whose plan has a
// zero action gap at any state are resampled up to a retry cap.
ParameterFamily make_random_family(int num_states, int num_actions,
                                   int family_size, double min_prob,
                                   std::uint64_t seed);

// Standard chain benchmark. Action 0 (LEFT) moves deterministically toward
// state 0; action 1 (RIGHT) moves up with probability right_success and
// otherwise stays or falls back (interior remainder split 3:1 stay:down).
// Rewards: left_reward at (0, LEFT), right_reward at (last, RIGHT), else 0,
// scaled into [0,1] when either exceeds 1. Starts at state 0.
Mdp make_riverswim(int num_states, double right_success = 0.6,
                   double left_reward = 0.005, double right_reward = 1.0);

// Family built around a benchmark: member 0 is `base`, the rest perturb each
// transition row by mixing in a flat-simplex draw of weight `perturbation`
// and renormalizing. Uniform prior. Throws GenerationError when a member
// loses the communicating property or the positive action gap.
ParameterFamily family_around(const Mdp& base, int family_size,
                              double perturbation, std::uint64_t seed);

}  // namespace psrlab
