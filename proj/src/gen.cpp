#include "flexstep/gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>

namespace flexstep
{
    namespace
    {
        // One UUnifast draw. Returns false if floating-point rounding produced a
        // non-positive element (r^(1/k) rounding to 1).
        bool draw_once(int n, double util, Rng& rng, std::vector<double>& out)
        {
            out.resize(static_cast<std::size_t>(n));
            double sum = util;
            for (int i = 0; i < n - 1; ++i)
            {
                const double next = sum * std::pow(rng.uniform_open(), 1.0 / static_cast<double>(n - 1 - i));
                out[static_cast<std::size_t>(i)] = sum - next;
                sum = next;
            }
            out.back() = sum;
            return std::all_of(out.begin(), out.end(), [](double u) { return u > 0.0; });
        }

        std::vector<double> draw(int n, double util, Rng& rng, int max_redraws, bool below_one)
        {
            if (n < 1) throw InvalidArgument("uunifast: n must be >= 1");
            if (!(util > 0.0)) throw InvalidArgument("uunifast: util must be > 0");
            std::vector<double> out;
            for (int attempt = 0; attempt < max_redraws; ++attempt)
            {
                if (!draw_once(n, util, rng, out)) continue;
                if (below_one && std::any_of(out.begin(), out.end(), [](double u) { return u >= 1.0; })) continue;
                return out;
            }
            throw GenerationFailure("uunifast: no valid utilization vector after " + std::to_string(max_redraws) +
                                    " draws");
        }
    } // namespace

    std::vector<double> uunifast(int n, double util, Rng& rng) { return draw(n, util, rng, kMaxUtilRedraws, false); }

    std::vector<double> uunifast_discard(int n, double util, Rng& rng, int max_redraws)
    {
        return draw(n, util, rng, max_redraws, true);
    }

    double quantize12(double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return std::strtod(buf, nullptr);
    }

    TaskSet generate_taskset(const GenConfig& cfg)
    {
        cfg.validate();
        Rng rng(cfg.seed);

        const auto utils = uunifast_discard(cfg.n, cfg.util, rng);

        const double log_lo = std::log(cfg.period_min);
        const double log_hi = std::log(cfg.period_max);

        TaskSet ts;
        ts.target_util = cfg.util;
        ts.meta = cfg;
        ts.tasks.reserve(static_cast<std::size_t>(cfg.n));
        for (int i = 0; i < cfg.n; ++i)
        {
            const double period = quantize12(std::exp(rng.uniform(log_lo, log_hi)));
            const double wcet = quantize12(utils[static_cast<std::size_t>(i)] * period);
            ts.tasks.push_back(Task{i, wcet, period, period, TaskClass::NonVerify});
        }

        // Class labels go to uniformly chosen indices (partial Fisher-Yates):
        // first floor(alpha*n) become V2, the next floor(beta*n) become V3.
        const auto n = static_cast<std::size_t>(cfg.n);
        const auto n_v2 = static_cast<std::size_t>(std::floor(cfg.alpha * cfg.n + kEps));
        const auto n_v3 = static_cast<std::size_t>(std::floor(cfg.beta * cfg.n + kEps));
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < n_v2 + n_v3 && i < n; ++i)
        {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
            std::swap(idx[i], idx[j]);
            ts.tasks[idx[i]].cls = i < n_v2 ? TaskClass::DoubleCheck : TaskClass::TripleCheck;
        }
        return ts;
    }
} // namespace flexstep
