#pragma once

#include <string>
#include <vector>

#include "psrlab/expert.hpp"
#include "psrlab/family.hpp"
#include "psrlab/rng.hpp"

namespace psrlab {

// One observed environment transition.
struct Transition {
    int state = 0;
    int action = 0;
    int next_state = 0;
};

// Unnormalized log-weights over family members. A value type: updates return
// fresh states and never mutate their inputs.
struct PosteriorState {
    std::vector<double> log_weights;
    std::string family_ref;  // must match ParameterFamily::id on use
    long epoch = 0;          // number of updates applied

    // Normalized weights via max-subtracted exponentiation.
    std::vector<double> normalized() const;
};

// Log-weights initialized from the family prior; epoch 0.
PosteriorState prior_state(const ParameterFamily& family);

// Conditions the prior on the offline expert trajectory: per member, adds
// the log transition probability and the softmax action log-likelihood
// (known scalar beta) of every offline step. Members assigning zero
// probability to an observed transition drop to -inf. Throws
// InconsistentEvidenceError when every member does, and ModelMismatchError
// when the dataset was generated with finite lambda (the exact likelihood
// assumes the expert acted on the exact q-table).
PosteriorState informed_prior(const ParameterFamily& family,
                              const OfflineDataset& dataset, double beta);

// Conditions on a segment of the agent's own transitions: only transition
// probabilities enter (the agent's actions carry no extra information).
PosteriorState online_update(const PosteriorState& post,
                             const ParameterFamily& family,
                             std::span<const Transition> segment);

// Inverse-CDF draw from the normalized weights.
std::size_t sample_member(const PosteriorState& post, Rng& rng);

// Probability that two independent draws from the posterior have different
// optimal policies: members are grouped into policy-equivalence classes with
// masses p_j and the result is 1 - sum p_j^2. Conditioned on the data this
// equals the probability that a posterior sample's policy differs from the
// true one.
double mismatch_probability(const PosteriorState& post,
                            const ParameterFamily& family);

}  // namespace psrlab
