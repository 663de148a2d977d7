#include "flexstep/sweep.hpp"

#include "flexstep/gen.hpp"
#include "flexstep/partition.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace flexstep
{
    namespace
    {
        // Runs fn(i) for i in [0, count) on a small worker pool. The first
        // exception thrown by any worker is rethrown on the caller's thread.
        template <class Fn>
        void parallel_for(std::size_t count, int threads, const ProgressFn& progress, Fn fn)
        {
            unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
            workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
            std::atomic<std::size_t> next{0};
            std::mutex mu;
            std::uint64_t completed = 0;
            std::exception_ptr error;

            auto body = [&] {
                while (true)
                {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= count) return;
                    try
                    {
                        fn(i);
                    }
                    catch (...)
                    {
                        std::lock_guard lk(mu);
                        if (!error) error = std::current_exception();
                        next = count;
                        return;
                    }
                    std::lock_guard lk(mu);
                    ++completed;
                    if (progress) progress(completed, count);
                }
            };

            if (workers == 1)
                body();
            else
            {
                std::vector<std::thread> pool;
                for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
                for (auto& t : pool) t.join();
            }
            if (error) std::rethrow_exception(error);
        }

        std::vector<VerdictMode> modes_of(SweepVerdict v)
        {
            switch (v)
            {
            case SweepVerdict::Analytic: return {VerdictMode::Analytic};
            case SweepVerdict::Sim: return {VerdictMode::Sim};
            case SweepVerdict::Both: return {VerdictMode::Analytic, VerdictMode::Sim};
            }
            return {};
        }

        std::string_view mode_name(VerdictMode m) { return m == VerdictMode::Analytic ? "analytic" : "sim"; }
    } // namespace

    std::string_view to_string(SweepVerdict v) noexcept
    {
        switch (v)
        {
        case SweepVerdict::Analytic: return "analytic";
        case SweepVerdict::Sim: return "sim";
        case SweepVerdict::Both: return "both";
        }
        return "?";
    }

    SweepVerdict parse_sweep_verdict(std::string_view s)
    {
        if (s == "analytic") return SweepVerdict::Analytic;
        if (s == "sim") return SweepVerdict::Sim;
        if (s == "both") return SweepVerdict::Both;
        throw InvalidArgument("unknown verdict mode '" + std::string(s) + "' (expected analytic, sim or both)");
    }

    void SweepConfig::validate() const
    {
        if (!(util_start > 0.0)) throw InvalidArgument("sweep: util_start must be > 0");
        if (util_start > util_end) throw InvalidArgument("sweep: util_start must be <= util_end");
        if (!(util_step > 0.0)) throw InvalidArgument("sweep: util_step must be > 0");
        if (sets_per_point < 1) throw InvalidArgument("sweep: sets_per_point must be >= 1");
        if (schemes.empty()) throw InvalidArgument("sweep: no schemes selected");
        if (sim_horizon && !(*sim_horizon > 0.0)) throw InvalidArgument("sweep: sim horizon must be > 0");
        GenConfig g;
        g.n = n;
        g.m = m;
        g.util = util_start;
        g.alpha = alpha;
        g.beta = beta;
        g.period_min = period_min;
        g.period_max = period_max;
        g.validate();
        if (beta > 0.0 && m < 3)
            throw InfeasibleConfiguration("sweep: triple-check tasks (beta > 0) need at least 3 cores, got " +
                                          std::to_string(m));
        if (alpha > 0.0 && m < 2)
            throw InfeasibleConfiguration("sweep: double-check tasks (alpha > 0) need at least 2 cores");
        if (m < 2 && std::find(schemes.begin(), schemes.end(), SchemeId::LockStep) != schemes.end())
            throw InfeasibleConfiguration("sweep: lockstep needs at least 2 cores");
    }

    std::vector<double> SweepConfig::utilization_points() const
    {
        const auto count = static_cast<std::size_t>(std::floor((util_end - util_start) / util_step + 1e-9)) + 1;
        std::vector<double> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) out.push_back(util_start + static_cast<double>(i) * util_step);
        return out;
    }

    std::uint64_t sweep_set_seed(std::uint64_t seed, std::size_t point_index, std::size_t set_index)
    {
        return seed + static_cast<std::uint64_t>(point_index) * 1000000ULL + static_cast<std::uint64_t>(set_index);
    }

    SweepResult run_sweep(const SweepConfig& cfg, const ProgressFn& progress)
    {
        cfg.validate();
        const auto points = cfg.utilization_points();
        const auto modes = modes_of(cfg.verdict);
        const std::size_t sets = static_cast<std::size_t>(cfg.sets_per_point);
        const std::size_t per_set = cfg.schemes.size() * modes.size();

        // verdict[(point*sets + set)*per_set + scheme*modes + mode]; 2 = generation failure
        std::vector<std::uint8_t> verdict(points.size() * sets * per_set, 0);

        parallel_for(points.size() * sets, cfg.threads, progress, [&](std::size_t job) {
            const std::size_t p = job / sets;
            const std::size_t s = job % sets;
            GenConfig g;
            g.n = cfg.n;
            g.m = cfg.m;
            g.util = points[p];
            g.alpha = cfg.alpha;
            g.beta = cfg.beta;
            g.period_min = cfg.period_min;
            g.period_max = cfg.period_max;
            g.seed = sweep_set_seed(cfg.seed, p, s);
            std::uint8_t* out = &verdict[job * per_set];
            TaskSet ts;
            try
            {
                ts = generate_taskset(g);
            }
            catch (const GenerationFailure&)
            {
                std::fill(out, out + per_set, std::uint8_t{2});
                return;
            }
            for (std::size_t k = 0; k < cfg.schemes.size(); ++k)
                for (std::size_t v = 0; v < modes.size(); ++v)
                {
                    VerdictOptions opts;
                    opts.mode = modes[v];
                    opts.sim_horizon = cfg.sim_horizon;
                    opts.checker_release = cfg.checker_release;
                    opts.skip_proven = cfg.skip_proven;
                    out[k * modes.size() + v] = schedulable(ts, cfg.m, cfg.schemes[k], opts) ? 1 : 0;
                }
        });

        SweepResult r;
        for (std::size_t job = 0; job < points.size() * sets; ++job)
            if (verdict[job * per_set] == 2) ++r.generation_failures;
        for (std::size_t k = 0; k < cfg.schemes.size(); ++k)
            for (std::size_t v = 0; v < modes.size(); ++v)
                for (std::size_t p = 0; p < points.size(); ++p)
                {
                    SweepRow row;
                    row.scheme = cfg.schemes[k];
                    row.mode = modes[v];
                    row.util = points[p];
                    row.total = cfg.sets_per_point;
                    for (std::size_t s = 0; s < sets; ++s)
                        row.accepted += verdict[(p * sets + s) * per_set + k * modes.size() + v] == 1;
                    r.rows.push_back(row);
                }
        return r;
    }

    void write_sweep_csv(std::ostream& os, const SweepConfig& cfg, const SweepResult& r)
    {
        os << "scheme,util,accepted,total,ratio\n";
        for (const auto& row : r.rows)
        {
            os << to_string(row.scheme);
            if (cfg.verdict == SweepVerdict::Both) os << '/' << mode_name(row.mode);
            os << ',' << format_number(row.util) << ',' << row.accepted << ',' << row.total << ','
               << format_number(row.ratio()) << '\n';
        }
    }

    void write_sweep_metadata(std::ostream& os, const SweepConfig& cfg, const SweepResult& r)
    {
        os << "cores=" << cfg.m << '\n'
           << "tasks=" << cfg.n << '\n'
           << "alpha=" << format_number(cfg.alpha) << '\n'
           << "beta=" << format_number(cfg.beta) << '\n'
           << "util-start=" << format_number(cfg.util_start) << '\n'
           << "util-end=" << format_number(cfg.util_end) << '\n'
           << "util-step=" << format_number(cfg.util_step) << '\n'
           << "sets-per-point=" << cfg.sets_per_point << '\n'
           << "seed=" << cfg.seed << '\n'
           << "verdict=" << to_string(cfg.verdict) << '\n'
           << "sim-horizon=" << (cfg.sim_horizon ? format_number(*cfg.sim_horizon) : "default") << '\n'
           << "checker-release="
           << (cfg.checker_release == CheckerRelease::AtVirtualDeadline ? "virtual-deadline" : "original-start") << '\n'
           << "skip-proven=" << (cfg.skip_proven ? "yes" : "no") << '\n'
           << "period-min=" << format_number(cfg.period_min) << '\n'
           << "period-max=" << format_number(cfg.period_max) << '\n'
           << "generation-failures=" << r.generation_failures << '\n';
    }

    // ------------------------------------------------------------- campaign

    void CampaignConfig::validate() const
    {
        if (faults > 0 && programs < 1) throw InvalidArgument("faults: need at least one program");
        if (program_length < 1) throw InvalidArgument("faults: program length must be >= 1");
        if (seg_limit < 1) throw InvalidArgument("faults: seg_limit must be >= 1");
        if (capacity < 1) throw InvalidArgument("faults: channel capacity must be >= 1");
        if (checkers < 1 || checkers > 2) throw InvalidArgument("faults: checkers must be 1 or 2");
        if (bucket_width < 1) throw InvalidArgument("faults: bucket width must be >= 1");
    }

    CampaignResult run_fault_campaign(const CampaignConfig& cfg, const ProgressFn& progress)
    {
        cfg.validate();
        CampaignResult r;
        r.records.resize(cfg.faults);
        if (cfg.faults == 0) return r;

        const auto programs = static_cast<std::size_t>(
            std::min<std::uint64_t>(static_cast<std::uint64_t>(cfg.programs), cfg.faults));
        InjectConfig ic;
        ic.seg_limit = cfg.seg_limit;
        ic.capacity = cfg.capacity;
        ic.checker_lag = cfg.checker_lag;
        ic.checkers = cfg.checkers;
        ic.mem_words = cfg.mix.mem_words;

        parallel_for(programs, cfg.threads, progress, [&](std::size_t p) {
            Rng prog_rng(cfg.seed + p);
            const auto program = random_program(prog_rng, cfg.program_length, cfg.mix);
            const auto segments = segment_program(program, cfg.seg_limit, cfg.mix.mem_words);
            std::vector<FaultSpec> faults;
            std::vector<std::uint64_t> ids;
            for (std::uint64_t id = p; id < cfg.faults; id += programs)
            {
                Rng fault_rng(cfg.seed ^ (0x9E3779B97F4A7C15ULL * (id + 1)));
                faults.push_back(random_fault(fault_rng, segments, cfg.checkers));
                ids.push_back(id);
            }
            const auto recs = inject_and_measure(program, ic, faults);
            for (std::size_t i = 0; i < recs.size(); ++i) r.records[ids[i]] = recs[i];
        });

        for (const auto& rec : r.records)
        {
            r.detected += rec.detected;
            r.bound_violations += rec.detected && rec.latency > rec.latency_bound;
        }
        return r;
    }

    void write_campaign_csv(std::ostream& os, const CampaignResult& r)
    {
        write_detection_csv_header(os);
        for (std::size_t i = 0; i < r.records.size(); ++i) write_detection_csv_row(os, i, r.records[i]);
    }

    std::vector<HistogramBucket> latency_histogram(const std::vector<DetectionRecord>& records,
                                                   std::uint64_t bucket_width)
    {
        if (bucket_width < 1) throw InvalidArgument("histogram: bucket width must be >= 1");
        std::vector<HistogramBucket> out;
        std::uint64_t max_latency = 0;
        bool any = false;
        for (const auto& rec : records)
            if (rec.detected)
            {
                any = true;
                max_latency = std::max(max_latency, rec.latency);
            }
        if (!any) return out;
        const std::uint64_t buckets = max_latency / bucket_width + 1;
        out.resize(buckets);
        for (std::uint64_t b = 0; b < buckets; ++b) out[b] = {b * bucket_width, (b + 1) * bucket_width, 0};
        for (const auto& rec : records)
            if (rec.detected) ++out[rec.latency / bucket_width].count;
        return out;
    }

    void write_histogram_csv(std::ostream& os, const std::vector<HistogramBucket>& h)
    {
        os << "bucket_lo,bucket_hi,count\n";
        for (const auto& b : h) os << b.lo << ',' << b.hi << ',' << b.count << '\n';
    }
} // namespace flexstep
