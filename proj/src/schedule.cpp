#include "psrlab/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "psrlab/errors.hpp"

namespace psrlab {

EpisodeSchedule EpisodeSchedule::eps_linear(double eps_hat) {
    if (!(eps_hat > 0.0))
        throw ValidationError("schedule: eps_linear needs eps_hat > 0");
    EpisodeSchedule s;
    s.kind = Kind::eps_linear;
    s.eps_hat = eps_hat;
    return s;
}

EpisodeSchedule EpisodeSchedule::constant(long block) {
    if (block < 1) throw ValidationError("schedule: block length must be >= 1");
    EpisodeSchedule s;
    s.kind = Kind::constant;
    s.block = block;
    return s;
}

EpisodeSchedule EpisodeSchedule::explicit_list(std::vector<long> lengths) {
    for (long l : lengths)
        if (l < 1) throw ValidationError("schedule: explicit lengths must be >= 1");
    EpisodeSchedule s;
    s.kind = Kind::explicit_list;
    s.lengths = std::move(lengths);
    return s;
}

std::string EpisodeSchedule::describe() const {
    switch (kind) {
        case Kind::linear: return "linear";
        case Kind::eps_linear: return "eps:" + std::to_string(eps_hat);
        case Kind::constant: return "const:" + std::to_string(block);
        case Kind::explicit_list:
            return "explicit[" + std::to_string(lengths.size()) + "]";
    }
    return "?";
}

long nominal_length(const EpisodeSchedule& schedule, long k) {
    if (k < 1) throw ValidationError("schedule: episode index must be >= 1");
    long tk = 0;
    switch (schedule.kind) {
        case EpisodeSchedule::Kind::linear:
            tk = k;
            break;
        case EpisodeSchedule::Kind::eps_linear:
            tk = static_cast<long>(
                std::ceil(schedule.eps_hat * static_cast<double>(k)));
            break;
        case EpisodeSchedule::Kind::constant:
            tk = schedule.block;
            break;
        case EpisodeSchedule::Kind::explicit_list:
            if (static_cast<std::size_t>(k - 1) >= schedule.lengths.size())
                throw ValidationError(
                    "schedule: explicit list too short for horizon");
            tk = schedule.lengths[k - 1];
            break;
    }
    if (tk < 1) throw ValidationError("schedule: produced length < 1");
    return tk;
}

std::vector<long> schedule_lengths(const EpisodeSchedule& schedule,
                                   long horizon) {
    if (horizon < 1) throw ValidationError("schedule: horizon must be >= 1");
    std::vector<long> out;
    long covered = 0;
    for (long k = 1; covered < horizon; ++k) {
        long tk = std::min(nominal_length(schedule, k), horizon - covered);
        out.push_back(tk);
        covered += tk;
    }
    return out;
}

EpisodeSchedule parse_schedule(const std::string& text) {
    if (text == "linear") return EpisodeSchedule::linear();
    if (text.rfind("eps:", 0) == 0)
        return EpisodeSchedule::eps_linear(std::stod(text.substr(4)));
    if (text.rfind("const:", 0) == 0)
        return EpisodeSchedule::constant(std::stol(text.substr(6)));
    throw ValidationError("schedule: cannot parse '" + text +
                          "' (expected linear, eps:<x> or const:<n>)");
}

}  // namespace psrlab
