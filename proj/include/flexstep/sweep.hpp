#pragma once

#include "flexstep/checkerflow.hpp"
#include "flexstep/model.hpp"
#include "flexstep/simkernel.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace flexstep
{
    inline constexpr int kDefaultSetsPerPoint = 500;
    // Ten times the default largest period.
    inline constexpr double kDefaultSweepHorizon = 1e4;

    enum class SweepVerdict : std::uint8_t
    {
        Analytic,
        Sim,
        Both,
    };

    std::string_view to_string(SweepVerdict v) noexcept;
    SweepVerdict parse_sweep_verdict(std::string_view s);

    struct SweepConfig
    {
        int m = 8;
        int n = 160;
        double alpha = 0.125;
        double beta = 0.125;
        double util_start = 1.0;
        double util_end = 8.0;
        double util_step = 0.5;
        int sets_per_point = kDefaultSetsPerPoint;
        std::vector<SchemeId> schemes{SchemeId::LockStep, SchemeId::HMR, SchemeId::FlexStep};
        std::uint64_t seed = 1;
        SweepVerdict verdict = SweepVerdict::Analytic;
        // Simulation horizon for verdicts that simulate; nullopt = default_horizon.
        // Generated periods are not integers, so default_horizon would hit its cap.
        std::optional<double> sim_horizon = kDefaultSweepHorizon;
        CheckerRelease checker_release = CheckerRelease::AtVirtualDeadline;
        // See VerdictOptions::skip_proven.
        bool skip_proven = true;
        double period_min = 10.0;
        double period_max = 1000.0;
        int threads = 0; // 0 = hardware concurrency

        // Throws InvalidArgument / InfeasibleConfiguration before any work is done.
        void validate() const;
        std::vector<double> utilization_points() const;
    };

    struct SweepRow
    {
        SchemeId scheme = SchemeId::FlexStep;
        VerdictMode mode = VerdictMode::Analytic;
        double util = 0.0;
        int accepted = 0;
        int total = 0;

        double ratio() const noexcept { return total ? static_cast<double>(accepted) / total : 0.0; }
    };

    struct SweepResult
    {
        // Ordered by (scheme in config order, verdict mode, utilization).
        std::vector<SweepRow> rows;
        // Task sets the generator could not produce (counted as rejected).
        int generation_failures = 0;
    };

    // Called with (completed, total) task sets; may be invoked from worker threads
    // but never concurrently.
    using ProgressFn = std::function<void(std::uint64_t, std::uint64_t)>;

    // Seed of set `set_index` at point `point_index`: seed + point_index*10^6 + set_index.
    std::uint64_t sweep_set_seed(std::uint64_t seed, std::size_t point_index, std::size_t set_index);

    SweepResult run_sweep(const SweepConfig& cfg, const ProgressFn& progress = {});

    // scheme,util,accepted,total,ratio. In Both mode the scheme column carries
    // the verdict path as "<scheme>/<analytic|sim>".
    void write_sweep_csv(std::ostream& os, const SweepConfig& cfg, const SweepResult& r);
    // key=value lines describing the run (parameters, sets per point, verdict path).
    void write_sweep_metadata(std::ostream& os, const SweepConfig& cfg, const SweepResult& r);

    struct CampaignConfig
    {
        int programs = 100;
        std::size_t program_length = 2000;
        std::uint64_t faults = 10000;
        std::uint64_t seg_limit = kDefaultSegLimit;
        std::size_t capacity = kDefaultChannelCapacity;
        std::uint64_t checker_lag = 0;
        int checkers = 1;
        std::uint64_t seed = 1;
        std::uint64_t bucket_width = 100;
        int threads = 0;
        ProgramMix mix{};

        void validate() const;
    };

    struct CampaignResult
    {
        std::vector<DetectionRecord> records; // fault_id = index
        std::uint64_t detected = 0;
        std::uint64_t bound_violations = 0;

        double detection_rate() const noexcept
        {
            return records.empty() ? 1.0 : static_cast<double>(detected) / static_cast<double>(records.size());
        }
    };

    // Faults are spread round-robin over `programs` random programs (program p
    // drawn from seed + p); each fault gets an independent coupled run.
    CampaignResult run_fault_campaign(const CampaignConfig& cfg, const ProgressFn& progress = {});

    void write_campaign_csv(std::ostream& os, const CampaignResult& r);

    struct HistogramBucket
    {
        std::uint64_t lo = 0; // inclusive
        std::uint64_t hi = 0; // exclusive
        std::uint64_t count = 0;
    };

    // Buckets of detected latencies; empty when nothing was detected.
    std::vector<HistogramBucket> latency_histogram(const std::vector<DetectionRecord>& records,
                                                   std::uint64_t bucket_width);
    // bucket_lo,bucket_hi,count
    void write_histogram_csv(std::ostream& os, const std::vector<HistogramBucket>& h);
} // namespace flexstep
