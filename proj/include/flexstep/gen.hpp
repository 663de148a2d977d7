#pragma once

#include "flexstep/model.hpp"
#include "flexstep/rng.hpp"

#include <stdexcept>
#include <vector>

namespace flexstep
{
    struct GenerationFailure : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    inline constexpr int kMaxUtilRedraws = 100;

    // Bini & Buttazzo UUnifast. Returns n positive utilizations summing to util;
    // the last element closes the sum.
    std::vector<double> uunifast(int n, double util, Rng& rng);

    // UUnifast with rejection: redraws the whole vector while any u_i >= 1,
    // up to kMaxUtilRedraws attempts, then throws GenerationFailure.
    std::vector<double> uunifast_discard(int n, double util, Rng& rng, int max_redraws = kMaxUtilRedraws);

    // Rounds to the 12 significant digits used by the task-set text format, so
    // generated sets survive a serialize/parse round trip unchanged.
    double quantize12(double v);

    TaskSet generate_taskset(const GenConfig& cfg);
} // namespace flexstep
