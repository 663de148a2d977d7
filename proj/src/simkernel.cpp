#include "flexstep/simkernel.hpp"

#include "flexstep/analysis.hpp"
#include "flexstep/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <tuple>

namespace flexstep
{
    std::string_view to_string(TraceKind k) noexcept
    {
        switch (k)
        {
        case TraceKind::Release: return "release";
        case TraceKind::Dispatch: return "dispatch";
        case TraceKind::Preempt: return "preempt";
        case TraceKind::Complete: return "complete";
        case TraceKind::Miss: return "miss";
        }
        return "?";
    }

    Horizon hyperperiod_horizon(const std::vector<double>& periods, double cap)
    {
        if (!(cap > 0.0)) throw InvalidArgument("hyperperiod_horizon: cap must be > 0");
        std::uint64_t l = 1;
        for (double p : periods)
        {
            if (!(p >= 1.0) || std::floor(p) != p || p > 9.0e15) return {cap, true};
            const auto q = static_cast<std::uint64_t>(p);
            const std::uint64_t g = std::gcd(l, q);
            const std::uint64_t step = q / g;
            if (l > std::numeric_limits<std::uint64_t>::max() / step) return {cap, true};
            l *= step;
            if (static_cast<double>(l) > cap) return {cap, true};
        }
        return {static_cast<double>(l), false};
    }

    Horizon hyperperiod_horizon(const TaskSet& ts, double cap)
    {
        std::vector<double> periods;
        periods.reserve(ts.tasks.size());
        for (const auto& t : ts.tasks) periods.push_back(t.period);
        return hyperperiod_horizon(periods, cap);
    }

    Horizon default_horizon(const Partition& partition, double cap)
    {
        std::vector<double> periods;
        for (const auto& core : partition.assignment)
            for (const auto& e : core) periods.push_back(e.period);
        if (periods.empty()) return {cap, true};
        const auto h = hyperperiod_horizon(periods, cap);
        if (h.approximate) return h;
        if (2.0 * h.value > cap) return {cap, true};
        return {2.0 * h.value, false};
    }

    namespace
    {
        template <class Time>
        struct TimeTraits;

        template <>
        struct TimeTraits<double>
        {
            static constexpr double eps = kEps;
            static double exact(double v) { return v; }
            static double floor(double v) { return v; }
            static double units(double t) { return t; }
            static constexpr double infinity() { return std::numeric_limits<double>::infinity(); }
        };

        template <>
        struct TimeTraits<std::int64_t>
        {
            static constexpr std::int64_t eps = 0;
            static std::int64_t exact(double v) { return std::llround(v * static_cast<double>(kTicksPerUnit)); }
            static std::int64_t floor(double v)
            {
                return static_cast<std::int64_t>(std::floor(v * static_cast<double>(kTicksPerUnit)));
            }
            static double units(std::int64_t t) { return static_cast<double>(t) / static_cast<double>(kTicksPerUnit); }
            static constexpr std::int64_t infinity() { return std::numeric_limits<std::int64_t>::max(); }
        };

        template <class Time>
        struct EntityRt
        {
            int entity_id = 0;
            int task_id = 0;
            Role role = Role::Original;
            int core = 0;
            Time period{};
            Time offset{};
            Time rel_deadline{};
            Time exec{};
            int original = -1;          // checkers: index of the same task's original entity
            bool coupled = false;       // checker released at the original's start
            bool verification = false;  // HMR: original of a verification task
            std::vector<int> occupy;    // HMR: checker cores occupied while this runs
            std::int64_t next_job = 0;
            // Progress of the current original job (used by coupled checkers).
            std::int64_t prog_job = -1;
            Time prog_exec{};
            bool prog_started = false;
            bool prog_running = false;
        };

        template <class Time>
        struct Job
        {
            int ent = 0;
            std::int64_t index = 0;
            Time release{};
            Time deadline{};
            Time remaining{};
            Time executed{};
            bool allow_caught_up = true;
        };

        struct JobKey
        {
            int ent = -1;
            std::int64_t index = -1;
            friend bool operator==(const JobKey&, const JobKey&) = default;
        };

        template <class Time>
        class Engine
        {
            using Tr = TimeTraits<Time>;

        public:
            Engine(const Partition& p, const SimConfig& cfg, double horizon)
                : cfg_(cfg), scheme_(p.scheme), cores_(p.assignment.size()), horizon_(Tr::floor(horizon))
            {
                build(p);
            }

            SimResult run()
            {
                Time t{};
                std::vector<Time> busy(cores_.size(), Time{});
                std::vector<int> chosen(cores_.size(), -1);
                std::vector<int> occupant(cores_.size(), -1); // HMR: core -> (core, pos) of the occupying job
                std::vector<int> occupant_core(cores_.size(), -1);
                std::vector<JobKey> prev(cores_.size());
                std::vector<char> stalled;

                while (true)
                {
                    drop_misses(t);
                    release_until(t);
                    if (t >= horizon_) break;
                    if (cfg_.stop_at_first_miss && !result_.misses.empty()) break;

                    std::fill(chosen.begin(), chosen.end(), -1);
                    std::fill(occupant.begin(), occupant.end(), -1);
                    std::fill(occupant_core.begin(), occupant_core.end(), -1);
                    if (scheme_ == SchemeId::HMR)
                        dispatch_hmr(chosen, occupant, occupant_core, stalled);
                    else
                        dispatch_edf(chosen);

                    note_switches(t, chosen, occupant, occupant_core, prev);

                    for (auto& e : ents_) e.prog_running = false;
                    for (std::size_t k = 0; k < cores_.size(); ++k)
                        if (chosen[k] >= 0)
                        {
                            const auto& j = cores_[k][static_cast<std::size_t>(chosen[k])];
                            auto& e = ents_[static_cast<std::size_t>(j.ent)];
                            if (e.role == Role::Original && e.prog_job == j.index) e.prog_running = true;
                        }

                    // Next event.
                    Time next = horizon_;
                    if (!releases_.empty()) next = std::min(next, std::get<0>(releases_.top()));
                    for (std::size_t k = 0; k < cores_.size(); ++k)
                    {
                        for (const auto& j : cores_[k])
                            if (j.deadline > t) next = std::min(next, j.deadline);
                        if (chosen[k] < 0) continue;
                        const auto& j = cores_[k][static_cast<std::size_t>(chosen[k])];
                        next = std::min(next, t + j.remaining);
                        const auto& e = ents_[static_cast<std::size_t>(j.ent)];
                        if (e.coupled)
                        {
                            const auto& o = ents_[static_cast<std::size_t>(e.original)];
                            const Time gap = o.prog_exec - j.executed;
                            if (!o.prog_running && gap > Tr::eps) next = std::min(next, t + gap);
                        }
                    }
                    const Time dt = next - t;

                    // Advance running jobs.
                    for (std::size_t k = 0; k < cores_.size(); ++k)
                    {
                        if (chosen[k] >= 0 || occupant[k] >= 0) busy[k] += dt;
                        if (chosen[k] < 0) continue;
                        auto& j = cores_[k][static_cast<std::size_t>(chosen[k])];
                        j.remaining -= dt;
                        j.executed += dt;
                        auto& e = ents_[static_cast<std::size_t>(j.ent)];
                        if (e.role == Role::Original && e.prog_job == j.index)
                        {
                            e.prog_exec = j.executed;
                            e.prog_started = true;
                        }
                    }
                    if (scheme_ == SchemeId::HMR)
                        for (char s : stalled)
                            if (s) stall_ += dt;
                    t = next;

                    for (std::size_t k = 0; k < cores_.size(); ++k)
                    {
                        if (chosen[k] < 0) continue;
                        const auto pos = static_cast<std::size_t>(chosen[k]);
                        auto& j = cores_[k][pos];
                        if (j.remaining > Tr::eps) continue;
                        const auto& e = ents_[static_cast<std::size_t>(j.ent)];
                        auto& resp = result_.max_response[e.entity_id];
                        resp = std::max(resp, Tr::units(t - j.release));
                        trace(t, static_cast<int>(k), TraceKind::Complete, e.entity_id, j.index);
                        prev[k] = {};
                        cores_[k].erase(cores_[k].begin() + static_cast<std::ptrdiff_t>(pos));
                    }
                }

                result_.horizon = Tr::units(horizon_);
                result_.stall_time = Tr::units(stall_);
                if (horizon_ > Time{})
                    for (const auto& b : busy)
                        result_.busiest_core_util =
                            std::max(result_.busiest_core_util, Tr::units(b) / Tr::units(horizon_));
                return std::move(result_);
            }

        private:
            void build(const Partition& p)
            {
                std::map<int, int> original_of_task;
                std::map<int, std::vector<int>> occupy_of_task;
                for (const auto& b : p.bindings) occupy_of_task[b.task_id] = b.checker_cores;

                for (std::size_t k = 0; k < p.assignment.size(); ++k)
                    for (const auto& e : p.assignment[k])
                    {
                        if (scheme_ == SchemeId::HMR && e.role != Role::Original) continue;
                        EntityRt<Time> r;
                        r.entity_id = e.entity_id;
                        r.task_id = e.task_id;
                        r.role = e.role;
                        r.core = static_cast<int>(k);
                        validate_integer(e);
                        r.period = Tr::exact(e.period);
                        r.exec = Tr::exact(e.exec);
                        r.offset = Tr::floor(e.release_offset);
                        // Deadlines equal to the period are exact; virtual deadlines round down.
                        r.rel_deadline = e.rel_deadline == e.period ? Tr::exact(e.rel_deadline) : Tr::floor(e.rel_deadline);
                        if (e.role == Role::Original) original_of_task[e.task_id] = static_cast<int>(ents_.size());
                        if (scheme_ == SchemeId::HMR)
                        {
                            auto it = occupy_of_task.find(e.task_id);
                            if (it != occupy_of_task.end())
                            {
                                r.verification = true;
                                r.occupy = it->second;
                            }
                        }
                        ents_.push_back(std::move(r));
                    }
                for (auto& r : ents_)
                {
                    if (r.role == Role::Original) continue;
                    r.original = original_of_task.at(r.task_id);
                    r.coupled = scheme_ == SchemeId::FlexStep && cfg_.checker_release == CheckerRelease::AtOriginalStart;
                }
                for (std::size_t i = 0; i < ents_.size(); ++i) schedule_release(static_cast<int>(i));
            }

            void validate_integer(const SchedEntity& e) const
            {
                if constexpr (std::is_same_v<Time, std::int64_t>)
                {
                    if (std::floor(e.exec) != e.exec || std::floor(e.period) != e.period)
                        throw InvalidArgument("simulate: ExactInteger mode requires integer task parameters (entity " +
                                              std::to_string(e.entity_id) + ")");
                }
            }

            Time origin_release(const EntityRt<Time>& e, std::int64_t j) const { return e.period * static_cast<Time>(j); }

            void schedule_release(int ei)
            {
                auto& e = ents_[static_cast<std::size_t>(ei)];
                const Time at = origin_release(e, e.next_job) + (e.coupled ? Time{} : e.offset);
                if (at < horizon_) releases_.emplace(at, e.entity_id, ei);
            }

            void release_until(Time t)
            {
                while (!releases_.empty() && std::get<0>(releases_.top()) <= t)
                {
                    const int ei = std::get<2>(releases_.top());
                    releases_.pop();
                    auto& e = ents_[static_cast<std::size_t>(ei)];
                    const std::int64_t j = e.next_job++;
                    const Time r = origin_release(e, j);
                    Job<Time> job;
                    job.ent = ei;
                    job.index = j;
                    job.release = r + (e.coupled ? Time{} : e.offset);
                    job.deadline = r + e.rel_deadline;
                    job.remaining = e.exec;
                    cores_[static_cast<std::size_t>(e.core)].push_back(job);
                    if (e.role == Role::Original)
                    {
                        e.prog_job = j;
                        e.prog_exec = Time{};
                        e.prog_started = false;
                    }
                    trace(t, e.core, TraceKind::Release, e.entity_id, j);
                    schedule_release(ei);
                }
            }

            void drop_misses(Time t)
            {
                for (std::size_t k = 0; k < cores_.size(); ++k)
                {
                    auto& jobs = cores_[k];
                    for (std::size_t i = 0; i < jobs.size();)
                    {
                        if (jobs[i].deadline <= t && jobs[i].remaining > Tr::eps)
                        {
                            const auto& e = ents_[static_cast<std::size_t>(jobs[i].ent)];
                            result_.misses.push_back({e.entity_id, jobs[i].index, Tr::units(jobs[i].deadline)});
                            trace(t, static_cast<int>(k), TraceKind::Miss, e.entity_id, jobs[i].index);
                            jobs.erase(jobs.begin() + static_cast<std::ptrdiff_t>(i));
                        }
                        else
                            ++i;
                    }
                }
            }

            auto key(const Job<Time>& j) const
            {
                return std::make_tuple(j.deadline, ents_[static_cast<std::size_t>(j.ent)].entity_id, j.index);
            }

            // Coupled checker readiness, excluding the caught-up case (handled by the caller).
            enum class Ready { No, Yes, CaughtUp };

            Ready readiness(const Job<Time>& j) const
            {
                const auto& e = ents_[static_cast<std::size_t>(j.ent)];
                if (!e.coupled) return Ready::Yes;
                const auto& o = ents_[static_cast<std::size_t>(e.original)];
                if (o.prog_job != j.index) return o.prog_job > j.index ? Ready::Yes : Ready::No;
                if (!o.prog_started) return Ready::No;
                return o.prog_exec - j.executed > Tr::eps ? Ready::Yes : Ready::CaughtUp;
            }

            void pick_edf(std::vector<int>& chosen)
            {
                for (std::size_t k = 0; k < cores_.size(); ++k)
                {
                    int best = -1;
                    for (std::size_t i = 0; i < cores_[k].size(); ++i)
                    {
                        const auto& j = cores_[k][i];
                        const Ready r = readiness(j);
                        if (r == Ready::No || (r == Ready::CaughtUp && !j.allow_caught_up)) continue;
                        if (best < 0 || key(j) < key(cores_[k][static_cast<std::size_t>(best)])) best = static_cast<int>(i);
                    }
                    chosen[k] = best;
                }
            }

            bool is_running(int ent, std::int64_t index, const std::vector<int>& chosen) const
            {
                const auto& e = ents_[static_cast<std::size_t>(ent)];
                const auto k = static_cast<std::size_t>(e.core);
                if (chosen[k] < 0) return false;
                const auto& j = cores_[k][static_cast<std::size_t>(chosen[k])];
                return j.ent == ent && j.index == index;
            }

            void dispatch_edf(std::vector<int>& chosen)
            {
                bool any_coupled = false;
                for (auto& jobs : cores_)
                    for (auto& j : jobs)
                    {
                        j.allow_caught_up = true;
                        any_coupled = any_coupled || ents_[static_cast<std::size_t>(j.ent)].coupled;
                    }
                pick_edf(chosen);
                if (!any_coupled) return;
                // A caught-up checker may only run in step with its running original.
                // Shrink the allowed set until every allowed caught-up checker's
                // original is actually dispatched.
                for (bool changed = true; changed;)
                {
                    changed = false;
                    for (auto& jobs : cores_)
                        for (auto& j : jobs)
                        {
                            if (!j.allow_caught_up || readiness(j) != Ready::CaughtUp) continue;
                            const auto& e = ents_[static_cast<std::size_t>(j.ent)];
                            if (!is_running(e.original, j.index, chosen))
                            {
                                j.allow_caught_up = false;
                                changed = true;
                            }
                        }
                    if (changed) pick_edf(chosen);
                }
            }

            void dispatch_hmr(std::vector<int>& chosen, std::vector<int>& occupant, std::vector<int>& occupant_core,
                              std::vector<char>& stalled)
            {
                std::vector<char> claimed(cores_.size(), 0);
                std::vector<std::pair<std::size_t, std::size_t>> vjobs;
                for (std::size_t k = 0; k < cores_.size(); ++k)
                    for (std::size_t i = 0; i < cores_[k].size(); ++i)
                        if (ents_[static_cast<std::size_t>(cores_[k][i].ent)].verification) vjobs.emplace_back(k, i);
                std::sort(vjobs.begin(), vjobs.end(), [&](const auto& a, const auto& b) {
                    return key(cores_[a.first][a.second]) < key(cores_[b.first][b.second]);
                });
                stalled.assign(vjobs.size(), 0);

                for (std::size_t v = 0; v < vjobs.size(); ++v)
                {
                    const auto [k, i] = vjobs[v];
                    if (claimed[k]) continue;
                    const auto& job = cores_[k][i];
                    // Standard EDF on the main core against its own NonVerify jobs.
                    bool beaten = false;
                    for (const auto& other : cores_[k])
                        if (!ents_[static_cast<std::size_t>(other.ent)].verification && key(other) < key(job))
                        {
                            beaten = true;
                            break;
                        }
                    if (beaten) continue;
                    const auto& e = ents_[static_cast<std::size_t>(job.ent)];
                    const bool blocked = std::any_of(e.occupy.begin(), e.occupy.end(),
                                                     [&](int c) { return claimed[static_cast<std::size_t>(c)] != 0; });
                    if (blocked)
                    {
                        stalled[v] = 1;
                        continue;
                    }
                    claimed[k] = 1;
                    chosen[k] = static_cast<int>(i);
                    for (int c : e.occupy)
                    {
                        claimed[static_cast<std::size_t>(c)] = 1;
                        occupant[static_cast<std::size_t>(c)] = static_cast<int>(i);
                        occupant_core[static_cast<std::size_t>(c)] = static_cast<int>(k);
                    }
                }
                // Remaining cores run their earliest-deadline NonVerify job; a core
                // occupied by checking never runs NonVerify work.
                for (std::size_t k = 0; k < cores_.size(); ++k)
                {
                    if (claimed[k]) continue;
                    int best = -1;
                    for (std::size_t i = 0; i < cores_[k].size(); ++i)
                    {
                        const auto& j = cores_[k][i];
                        if (ents_[static_cast<std::size_t>(j.ent)].verification) continue;
                        if (best < 0 || key(j) < key(cores_[k][static_cast<std::size_t>(best)])) best = static_cast<int>(i);
                    }
                    chosen[k] = best;
                }
                // A stalled main that ended up running other work is not counted as stalled.
                for (std::size_t v = 0; v < vjobs.size(); ++v)
                    if (stalled[v] && chosen[vjobs[v].first] >= 0) stalled[v] = 0;
            }

            void note_switches(Time t, const std::vector<int>& chosen, const std::vector<int>& occupant,
                               const std::vector<int>& occupant_core, std::vector<JobKey>& prev)
            {
                for (std::size_t k = 0; k < cores_.size(); ++k)
                {
                    JobKey now;
                    if (chosen[k] >= 0)
                    {
                        const auto& j = cores_[k][static_cast<std::size_t>(chosen[k])];
                        now = {j.ent, j.index};
                    }
                    else if (occupant[k] >= 0)
                    {
                        const auto& j = cores_[static_cast<std::size_t>(occupant_core[k])][static_cast<std::size_t>(occupant[k])];
                        now = {j.ent, j.index};
                    }
                    if (now == prev[k]) continue;
                    if (prev[k].ent >= 0 && ents_[static_cast<std::size_t>(prev[k].ent)].core == static_cast<int>(k))
                    {
                        // Still pending on its own core: it was preempted (or stalled).
                        for (const auto& j : cores_[k])
                            if (j.ent == prev[k].ent && j.index == prev[k].index)
                            {
                                ++result_.preemptions;
                                trace(t, static_cast<int>(k), TraceKind::Preempt,
                                      ents_[static_cast<std::size_t>(j.ent)].entity_id, j.index);
                                break;
                            }
                    }
                    if (now.ent >= 0)
                        trace(t, static_cast<int>(k), TraceKind::Dispatch,
                              ents_[static_cast<std::size_t>(now.ent)].entity_id, now.index);
                    prev[k] = now;
                }
            }

            void trace(Time t, int core, TraceKind kind, int entity_id, std::int64_t job)
            {
                if (cfg_.record_trace) result_.trace.push_back({Tr::units(t), core, kind, entity_id, job});
            }

            const SimConfig& cfg_;
            SchemeId scheme_;
            std::vector<std::vector<Job<Time>>> cores_;
            std::vector<EntityRt<Time>> ents_;
            Time horizon_{};
            Time stall_{};
            // (time, entity_id, entity index): ties release in entity-id order.
            std::priority_queue<std::tuple<Time, int, int>, std::vector<std::tuple<Time, int, int>>, std::greater<>>
                releases_;
            SimResult result_;
        };
    } // namespace

    SimResult simulate(const Partition& partition, const SimConfig& cfg)
    {
        Horizon h;
        if (cfg.horizon)
        {
            if (!(*cfg.horizon > 0.0)) throw InvalidArgument("simulate: horizon must be > 0");
            h = {*cfg.horizon, false};
        }
        else
            h = default_horizon(partition);

        SimResult r = cfg.time_mode == TimeMode::ExactInteger ? Engine<std::int64_t>(partition, cfg, h.value).run()
                                                              : Engine<double>(partition, cfg, h.value).run();
        r.horizon_approximate = h.approximate;
        return r;
    }

    void write_trace(std::ostream& os, const std::vector<TraceEvent>& trace)
    {
        for (const auto& ev : trace)
            os << "t=" << format_number(ev.t) << " core=" << ev.core << " event=" << to_string(ev.kind)
               << " entity=" << ev.entity_id << " job=" << ev.job_index << '\n';
    }

    bool schedulable(const TaskSet& ts, int m, SchemeId scheme, const VerdictOptions& opts)
    {
        const Partition p = make_partition(ts, m, scheme);
        SimConfig cfg;
        cfg.horizon = opts.sim_horizon;
        cfg.checker_release = opts.checker_release;
        cfg.stop_at_first_miss = true;

        if (opts.mode == VerdictMode::Analytic)
        {
            if (p.outcome != Outcome::Success) return false;
            if (scheme != SchemeId::HMR) return true;
            return simulate(p, cfg).schedulable();
        }
        // LockStep tasks left without a group cannot run at all.
        if (!p.unplaced.empty()) return false;
        if (opts.skip_proven && scheme != SchemeId::HMR && p.outcome == Outcome::Success) return true;
        return simulate(p, cfg).schedulable();
    }
} // namespace flexstep
