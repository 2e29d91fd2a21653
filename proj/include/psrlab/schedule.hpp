#pragma once

#include <string>
#include <vector>

namespace psrlab {

// Deterministic episode-length rule. Lengths are emitted until they cover
// the horizon; the final episode is truncated so the total matches exactly.
struct EpisodeSchedule {
    enum class Kind { linear, eps_linear, constant, explicit_list };

    Kind kind = Kind::linear;
    double eps_hat = 0.0;             // eps_linear: T_k = ceil(eps_hat * k)
    long block = 0;                   // constant block length
    std::vector<long> lengths;        // explicit list

    static EpisodeSchedule linear() { return {}; }
    static EpisodeSchedule eps_linear(double eps_hat);
    static EpisodeSchedule constant(long block);
    static EpisodeSchedule explicit_list(std::vector<long> lengths);

    std::string describe() const;
};

// Nominal (untruncated) length of episode k >= 1 under the rule.
long nominal_length(const EpisodeSchedule& schedule, long k);

// Realized lengths T_1..T_K covering `horizon` steps exactly. The number of
// emitted episodes equals max{k : t_k < horizon}.
std::vector<long> schedule_lengths(const EpisodeSchedule& schedule,
                                   long horizon);

// Parses "linear", "eps:<x>" or "const:<n>". Throws ValidationError.
EpisodeSchedule parse_schedule(const std::string& text);

}  // namespace psrlab
