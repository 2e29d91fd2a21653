#pragma once

#include "psrlab/posterior.hpp"
#include "psrlab/schedule.hpp"
#include "psrlab/trace.hpp"

namespace psrlab {

// Posterior-sampling agent with an informed prior and a fixed episode
// schedule. Per episode: sample a member from the current posterior, act with
// its cached plan's policy while the true member drives transitions, then
// fold the episode's transitions into the posterior. The initial online
// state is drawn from the shared initial distribution.
//
// `dataset` may be a zero-step dataset (OfflineDataset::empty) for the
// uninformed baseline. When `final_posterior` is non-null it receives the
// posterior after the last episode's update.
RunTrace run_ipsrl(const ParameterFamily& family, int true_member,
                   const OfflineDataset& dataset, double beta,
                   const EpisodeSchedule& schedule, long horizon, Rng& rng,
                   PosteriorState* final_posterior = nullptr);

}  // namespace psrlab
