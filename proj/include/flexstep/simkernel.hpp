#pragma once

#include "flexstep/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace flexstep
{
    enum class CheckerRelease : std::uint8_t
    {
        AtVirtualDeadline, // checker job j released at r_j + D'
        AtOriginalStart,   // eligible once original job j first runs; progress-coupled to it
    };

    enum class TimeMode : std::uint8_t
    {
        Float,
        ExactInteger,
    };

    // Exact-integer mode counts time in ticks of 1/kTicksPerUnit base units.
    // Task parameters must be whole base units; virtual deadlines (irrational for
    // TripleCheck) are rounded down to a tick.
    inline constexpr std::int64_t kTicksPerUnit = std::int64_t{1} << 20;

    inline constexpr double kDefaultHorizonCap = 1e6;

    struct SimConfig
    {
        // <= 0 selects default_horizon(partition); otherwise must be > 0.
        std::optional<double> horizon;
        CheckerRelease checker_release = CheckerRelease::AtVirtualDeadline;
        TimeMode time_mode = TimeMode::Float;
        bool record_trace = false;
        bool stop_at_first_miss = false;
    };

    struct MissRecord
    {
        int entity_id = 0;
        std::int64_t job_index = 0;
        double abs_deadline = 0.0;

        friend bool operator==(const MissRecord&, const MissRecord&) = default;
    };

    enum class TraceKind : std::uint8_t
    {
        Release,
        Dispatch,
        Preempt,
        Complete,
        Miss,
    };

    std::string_view to_string(TraceKind k) noexcept;

    struct TraceEvent
    {
        double t = 0.0;
        int core = 0;
        TraceKind kind = TraceKind::Release;
        int entity_id = 0;
        std::int64_t job_index = 0;

        friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
    };

    struct SimResult
    {
        std::vector<MissRecord> misses;
        std::uint64_t preemptions = 0;
        std::map<int, double> max_response;
        double busiest_core_util = 0.0;
        double horizon = 0.0;
        bool horizon_approximate = false;
        // HMR: total time main cores spent stalled on an occupied checker core.
        double stall_time = 0.0;
        std::vector<TraceEvent> trace;

        bool schedulable() const noexcept { return misses.empty(); }
    };

    struct Horizon
    {
        double value = 0.0;
        bool approximate = false; // true when the cap replaced the true value
    };

    // lcm of the (integer) periods, capped. Non-integer periods or overflow
    // yield the cap flagged approximate.
    Horizon hyperperiod_horizon(const TaskSet& ts, double cap);
    Horizon hyperperiod_horizon(const std::vector<double>& periods, double cap);

    // min(2 x hyperperiod, cap) over the periods present in the partition.
    Horizon default_horizon(const Partition& partition, double cap = kDefaultHorizonCap);

    // Preemptive per-core EDF simulation of a partition under its scheme's
    // checking semantics. Synchronous first release at t = 0, strictly periodic
    // afterwards; a job still unfinished at its deadline is recorded and dropped.
    SimResult simulate(const Partition& partition, const SimConfig& cfg = {});

    // "t=<time> core=<k> event=<kind> entity=<id> job=<j>"
    void write_trace(std::ostream& os, const std::vector<TraceEvent>& trace);

    enum class VerdictMode : std::uint8_t
    {
        Analytic,
        Sim,
    };

    struct VerdictOptions
    {
        VerdictMode mode = VerdictMode::Analytic;
        // Horizon used when a verdict needs simulation; nullopt = default_horizon.
        std::optional<double> sim_horizon;
        CheckerRelease checker_release = CheckerRelease::AtVirtualDeadline;
        // Sim mode: accept FlexStep/LockStep partitions that already pass their
        // (sufficient) density test without simulating them.
        bool skip_proven = false;
    };

    // Analytic: FlexStep/LockStep by the partition outcome, HMR by partition
    // outcome plus a miss-free simulation. Sim: every scheme by simulation of its
    // partition (LockStep additionally requires all groups to have been built).
    bool schedulable(const TaskSet& ts, int m, SchemeId scheme, const VerdictOptions& opts = {});
} // namespace flexstep
