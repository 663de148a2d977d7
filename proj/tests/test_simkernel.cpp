#include "flexstep/analysis.hpp"
#include "flexstep/gen.hpp"
#include "flexstep/partition.hpp"
#include "flexstep/simkernel.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

using namespace flexstep;

namespace
{
    TaskSet make_set(std::vector<Task> tasks)
    {
        TaskSet ts;
        for (std::size_t i = 0; i < tasks.size(); ++i) tasks[i].id = static_cast<int>(i);
        ts.tasks = std::move(tasks);
        ts.target_util = ts.total_utilization();
        return ts;
    }

    struct OracleResult
    {
        std::set<std::pair<int, std::int64_t>> misses;
        std::map<int, std::int64_t> max_response;
    };

    // Unit-slot EDF on each core independently. Valid for integer release
    // offsets, deadlines, periods and execution times with fixed checker
    // releases: all scheduling decisions then fall on integer instants.
    OracleResult unit_slot_edf(const Partition& p, std::int64_t horizon)
    {
        OracleResult out;
        for (const auto& core : p.assignment)
        {
            struct J
            {
                std::int64_t deadline;
                int eid;
                std::int64_t index;
                std::int64_t release;
                std::int64_t left;
            };
            std::vector<J> ready;
            for (std::int64_t t = 0; t < horizon; ++t)
            {
                for (const auto& e : core)
                {
                    const auto period = static_cast<std::int64_t>(e.period);
                    const auto off = static_cast<std::int64_t>(e.release_offset);
                    if (t >= off && (t - off) % period == 0)
                    {
                        const std::int64_t j = (t - off) / period;
                        ready.push_back({j * period + static_cast<std::int64_t>(e.rel_deadline), e.entity_id, j, t,
                                         static_cast<std::int64_t>(e.exec)});
                    }
                }
                for (auto it = ready.begin(); it != ready.end();)
                {
                    if (it->deadline <= t)
                    {
                        out.misses.insert({it->eid, it->index});
                        it = ready.erase(it);
                    }
                    else
                        ++it;
                }
                if (ready.empty()) continue;
                auto best = std::min_element(ready.begin(), ready.end(), [](const J& a, const J& b) {
                    return std::tie(a.deadline, a.eid, a.index) < std::tie(b.deadline, b.eid, b.index);
                });
                if (--best->left == 0)
                {
                    auto& r = out.max_response[best->eid];
                    r = std::max(r, t + 1 - best->release);
                    ready.erase(best);
                }
            }
            // Unfinished jobs whose deadline is exactly the horizon count as misses too.
            for (const auto& j : ready)
                if (j.deadline <= horizon) out.misses.insert({j.eid, j.index});
        }
        return out;
    }

    TaskSet random_integer_set(Rng& rng, int n, int m, double util)
    {
        static const int periods[] = {2, 4, 6, 8, 10, 12, 20, 24, 30, 40};
        std::vector<double> us;
        for (;;)
        {
            us = uunifast(n, util, rng);
            if (std::all_of(us.begin(), us.end(), [](double u) { return u < 1; })) break;
        }
        std::vector<Task> tasks;
        for (int i = 0; i < n; ++i)
        {
            const double period = periods[rng.below(10)];
            const double c = std::clamp(std::round(us[static_cast<std::size_t>(i)] * period), 1.0, period);
            const auto cls = (i % 3 == 0 && m >= 2) ? TaskClass::DoubleCheck : TaskClass::NonVerify;
            tasks.push_back(Task::make(0, cls == TaskClass::DoubleCheck ? std::min(c, period / 2) : c, period, cls));
        }
        return make_set(tasks);
    }
}

TEST_CASE("single core, single NonVerify task")
{
    const Partition p = partition_flexstep(make_set({Task::make(0, 1, 2)}), 1);
    SimConfig cfg;
    cfg.horizon = 10;
    cfg.record_trace = true;
    const SimResult r = simulate(p, cfg);
    CHECK(r.schedulable());
    CHECK(r.max_response.at(0) == doctest::Approx(1.0));
    CHECK(std::count_if(r.trace.begin(), r.trace.end(), [](const TraceEvent& e) { return e.kind == TraceKind::Complete; }) == 5);
    CHECK(r.preemptions == 0);
    CHECK(r.busiest_core_util == doctest::Approx(0.5));
}

TEST_CASE("flexstep trace for one V2 task on two cores")
{
    const Partition p = partition_flexstep(make_set({Task::make(0, 1, 2, TaskClass::DoubleCheck)}), 2);
    SimConfig cfg;
    cfg.horizon = 2;
    cfg.record_trace = true;
    const SimResult r = simulate(p, cfg);
    CHECK(r.schedulable());
    std::ostringstream os;
    write_trace(os, r.trace);
    CHECK(os.str() == "t=0 core=0 event=release entity=0 job=0\n"
                      "t=0 core=0 event=dispatch entity=0 job=0\n"
                      "t=1 core=0 event=complete entity=0 job=0\n"
                      "t=1 core=1 event=release entity=1 job=0\n"
                      "t=1 core=1 event=dispatch entity=1 job=0\n"
                      "t=2 core=1 event=complete entity=1 job=0\n");
}

TEST_CASE("hmr stalls and the resulting miss")
{
    SUBCASE("two V2 tasks sharing cores meet their deadlines")
    {
        const auto ts = make_set({Task::make(0, 1, 2, TaskClass::DoubleCheck), Task::make(0, 1, 2, TaskClass::DoubleCheck)});
        const Partition p = partition_hmr(ts, 2);
        SimConfig cfg;
        cfg.horizon = 20;
        const SimResult r = simulate(p, cfg);
        CHECK(r.schedulable());
    }
    SUBCASE("a shorter second period overloads the checker")
    {
        const auto ts = make_set({Task::make(0, 1, 2, TaskClass::DoubleCheck), Task::make(0, 1, 1.5, TaskClass::DoubleCheck)});
        const Partition p = partition_hmr(ts, 2);
        SimConfig cfg;
        cfg.horizon = 20;
        CHECK_FALSE(simulate(p, cfg).schedulable());
    }
}

TEST_CASE("hyperperiod horizon")
{
    CHECK(hyperperiod_horizon(std::vector<double>{2, 3}, 1e6).value == 6);
    CHECK(hyperperiod_horizon(std::vector<double>{4}, 1e6).value == 4);
    const Horizon h = hyperperiod_horizon(std::vector<double>{7, 11, 13}, 500);
    CHECK(h.value == 500);
    CHECK(h.approximate);
    CHECK(hyperperiod_horizon(std::vector<double>{2.5}, 100).approximate);

    const Partition p = partition_flexstep(make_set({Task::make(0, 1, 2), Task::make(0, 1, 3)}), 1);
    const Horizon d = default_horizon(p);
    CHECK(d.value == 12);
    CHECK_FALSE(d.approximate);
}

TEST_CASE("simulation argument errors")
{
    const Partition p = partition_flexstep(make_set({Task::make(0, 1, 2)}), 1);
    SimConfig cfg;
    cfg.horizon = 0;
    CHECK_THROWS_AS(simulate(p, cfg), InvalidArgument);
    cfg.horizon = -3;
    CHECK_THROWS_AS(simulate(p, cfg), InvalidArgument);

    const Partition q = partition_flexstep(make_set({Task::make(0, 0.5, 2)}), 1);
    SimConfig exact;
    exact.time_mode = TimeMode::ExactInteger;
    exact.horizon = 4;
    CHECK_THROWS_AS(simulate(q, exact), InvalidArgument);
}

TEST_CASE("miss-and-abort on an overloaded core")
{
    const Partition p = partition_flexstep(make_set({Task::make(0, 2, 3), Task::make(0, 2, 3)}), 1);
    SimConfig cfg;
    cfg.horizon = 9;
    const SimResult r = simulate(p, cfg);
    CHECK(r.misses.size() == 3);
    for (const auto& m : r.misses) CHECK(m.entity_id == 1);
}

TEST_CASE("property: per-core EDF matches a unit-slot oracle")
{
    Rng rng(2024);
    int compared = 0;
    for (int it = 0; it < 150; ++it)
    {
        const int m = 1 + static_cast<int>(rng.below(4));
        const int n = 1 + static_cast<int>(rng.below(8));
        const TaskSet ts = random_integer_set(rng, n, m, rng.uniform(0.2, 0.95) * std::min(m, n));
        if (m < static_cast<int>(required_cores(ts))) continue;
        const Partition p = partition_flexstep(ts, m);
        const std::int64_t horizon = 240;
        const OracleResult o = unit_slot_edf(p, horizon);
        for (auto mode : {TimeMode::Float, TimeMode::ExactInteger})
        {
            SimConfig cfg;
            cfg.horizon = static_cast<double>(horizon);
            cfg.time_mode = mode;
            const SimResult r = simulate(p, cfg);
            std::set<std::pair<int, std::int64_t>> misses;
            for (const auto& mr : r.misses) misses.insert({mr.entity_id, mr.job_index});
            CHECK(misses == o.misses);
            for (const auto& [eid, resp] : o.max_response)
                CHECK(r.max_response.at(eid) == doctest::Approx(static_cast<double>(resp)));
        }
        ++compared;
    }
    CHECK(compared > 100);
}

TEST_CASE("property: density-test acceptance implies no misses")
{
    for (std::uint64_t seed = 1; seed <= 60; ++seed)
    {
        GenConfig g;
        g.n = 12;
        g.m = 4;
        g.util = 1.0 + static_cast<double>(seed % 5) * 0.3;
        g.alpha = 0.25;
        g.beta = 0.125;
        g.seed = seed;
        const TaskSet ts = generate_taskset(g);
        const Partition p = partition_flexstep(ts, g.m);
        if (p.outcome != Outcome::Success) continue;
        SimConfig cfg;
        cfg.horizon = 3000;
        CHECK(simulate(p, cfg).schedulable());
    }
}

TEST_CASE("property: coupled checkers never run ahead of their original")
{
    for (std::uint64_t seed = 1; seed <= 40; ++seed)
    {
        GenConfig g;
        g.n = 10;
        g.m = 3;
        g.util = 1.2;
        g.alpha = 0.3;
        g.beta = 0.2;
        g.seed = seed;
        const TaskSet ts = generate_taskset(g);
        const Partition p = partition_flexstep(ts, g.m);
        SimConfig cfg;
        cfg.horizon = 2000;
        cfg.checker_release = CheckerRelease::AtOriginalStart;
        cfg.record_trace = true;
        const SimResult r = simulate(p, cfg);

        std::map<int, const SchedEntity*> by_id;
        std::map<int, int> original_of_task;
        for (const auto& core : p.assignment)
            for (const auto& e : core)
            {
                by_id[e.entity_id] = &e;
                if (e.role == Role::Original) original_of_task[e.task_id] = e.entity_id;
            }
        std::map<std::pair<int, std::int64_t>, double> first_dispatch, completion;
        for (const auto& ev : r.trace)
        {
            const auto key = std::make_pair(ev.entity_id, ev.job_index);
            if (ev.kind == TraceKind::Dispatch && !first_dispatch.count(key)) first_dispatch[key] = ev.t;
            if (ev.kind == TraceKind::Complete) completion[key] = ev.t;
        }
        for (const auto& [key, t] : first_dispatch)
        {
            const auto* e = by_id.at(key.first);
            if (e->role == Role::Original) continue;
            const auto okey = std::make_pair(original_of_task.at(e->task_id), key.second);
            REQUIRE(first_dispatch.count(okey));
            CHECK(t >= first_dispatch.at(okey) - 1e-9);
            if (completion.count(key) && completion.count(okey)) CHECK(completion.at(key) >= completion.at(okey) - 1e-9);
        }
    }
}

TEST_CASE("simulation is deterministic")
{
    GenConfig g;
    g.n = 30;
    g.m = 4;
    g.util = 3.0;
    g.alpha = 0.2;
    g.beta = 0.1;
    g.seed = 99;
    const TaskSet ts = generate_taskset(g);
    for (auto scheme : {SchemeId::FlexStep, SchemeId::LockStep, SchemeId::HMR})
    {
        const Partition p = make_partition(ts, g.m, scheme);
        SimConfig cfg;
        cfg.horizon = 5000;
        cfg.record_trace = true;
        const SimResult a = simulate(p, cfg);
        const SimResult b = simulate(p, cfg);
        CHECK(a.trace == b.trace);
        CHECK(a.misses == b.misses);
    }
}

TEST_CASE("schedulability verdicts")
{
    const auto ts = make_set({Task::make(0, 6, 10, TaskClass::DoubleCheck)});
    CHECK_FALSE(schedulable(ts, 2, SchemeId::FlexStep));
    CHECK(schedulable(ts, 2, SchemeId::LockStep));
    VerdictOptions sim;
    sim.mode = VerdictMode::Sim;
    sim.sim_horizon = 100;
    CHECK(schedulable(ts, 2, SchemeId::LockStep, sim));
    // The original cannot fit 6 units before its virtual deadline at 5.
    CHECK_FALSE(schedulable(ts, 2, SchemeId::FlexStep, sim));
    CHECK(schedulable(ts, 2, SchemeId::HMR, sim));
}
