// Acceptance checks. One PASS/FAIL line per criterion; exit status is nonzero
// if any selected criterion fails.

#include "flexstep/analysis.hpp"
#include "flexstep/checkerflow.hpp"
#include "flexstep/gen.hpp"
#include "flexstep/partition.hpp"
#include "flexstep/simkernel.hpp"
#include "flexstep/sweep.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <string>

using namespace flexstep;

namespace
{
    struct Verdict
    {
        bool pass = false;
        std::string detail;
    };

    std::string fmt(const char* f, auto... args)
    {
        char buf[512];
        std::snprintf(buf, sizeof buf, f, args...);
        return buf;
    }

    // 1. Grid-search oracle agrees with the closed-form virtual deadlines.
    Verdict virtual_deadline_optimality()
    {
        Rng rng(101);
        double worst = 0;
        bool ok = true;
        for (int i = 0; i < 100; ++i)
        {
            const double d = rng.uniform(1, 1000);
            const double c = rng.uniform(0.001, 1) * d;
            const double v2 = optimal_virtual_deadline_oracle(TaskClass::DoubleCheck, c, d, 100000);
            const double v3 = optimal_virtual_deadline_oracle(TaskClass::TripleCheck, c, d, 100000);
            const double e2 = std::abs(v2 - d / 2) / d;
            const double e3 = std::abs(v3 - (std::sqrt(2.0) - 1) * d) / d;
            worst = std::max({worst, e2, e3});
            ok = ok && e2 <= 1e-4 && e3 <= 1e-4;
        }
        return {ok, fmt("100 pairs, worst |D'-D'*|/D = %.2e (limit 1e-4)", worst)};
    }

    // 2. Sets accepted by the density test never miss in exact simulation.
    Verdict density_test_soundness()
    {
        static const double periods[] = {10,  12,  15,  16,  18,  20,  24,  25,  30,  36,  40,  45,
                                         48,  50,  60,  72,  75,  80,  90,  100, 120, 144, 150, 180,
                                         200, 225, 240, 300, 360, 400, 450, 600, 720, 900};
        constexpr std::size_t kPeriods = sizeof periods / sizeof periods[0];
        static const int cores[] = {2, 4, 8};
        Rng rng(202);
        int accepted = 0, drawn = 0, missed = 0, approx = 0;
        while (accepted < 1000)
        {
            ++drawn;
            const int m = cores[rng.below(3)];
            const int n = 2 + static_cast<int>(rng.below(19));
            const double util = rng.uniform(0.2, 1.0) * std::min(m, n) * 0.8;
            std::vector<double> us;
            try
            {
                us = uunifast_discard(n, util, rng);
            }
            catch (const GenerationFailure&)
            {
                continue;
            }
            TaskSet ts;
            for (int i = 0; i < n; ++i)
            {
                const double t = periods[rng.below(kPeriods)];
                const double c = std::clamp(std::round(us[static_cast<std::size_t>(i)] * t), 1.0, t);
                const double x = rng.uniform_open();
                TaskClass cls = TaskClass::NonVerify;
                if (x < 0.2)
                    cls = TaskClass::DoubleCheck;
                else if (x < 0.35 && m >= 3)
                    cls = TaskClass::TripleCheck;
                ts.tasks.push_back(Task::make(i, c, t, cls));
            }
            ts.target_util = ts.total_utilization();
            const Partition p = partition_flexstep(ts, m);
            if (p.outcome != Outcome::Success) continue;
            ++accepted;
            SimConfig cfg;
            cfg.time_mode = TimeMode::ExactInteger;
            cfg.checker_release = CheckerRelease::AtVirtualDeadline;
            const SimResult r = simulate(p, cfg);
            approx += r.horizon_approximate;
            missed += !r.schedulable();
        }
        return {missed == 0 && approx == 0,
                fmt("%d accepted sets (of %d drawn), %d with misses, %d capped horizons", accepted, drawn, missed, approx)};
    }

    SweepConfig curve_sweep(double alpha)
    {
        SweepConfig c;
        c.m = 8;
        c.n = 160;
        c.alpha = alpha;
        c.beta = alpha;
        c.util_start = 1.0;
        c.util_end = 8.0;
        c.util_step = 0.5;
        c.sets_per_point = 500;
        c.seed = 1;
        c.verdict = SweepVerdict::Sim;
        c.sim_horizon = 1e4;
        c.checker_release = CheckerRelease::AtVirtualDeadline;
        c.skip_proven = true;
        return c;
    }

    std::map<SchemeId, std::vector<double>> curves(const SweepConfig& c, const SweepResult& r, VerdictMode mode)
    {
        std::map<SchemeId, std::vector<double>> out;
        for (const auto& row : r.rows)
            if (row.mode == mode) out[row.scheme].push_back(row.ratio());
        (void)c;
        return out;
    }

    std::string render(const std::vector<double>& v)
    {
        std::string s;
        for (double x : v) s += fmt("%s%.3f", s.empty() ? "" : " ", x);
        return s;
    }

    // 3. Ordering, monotonicity and zero-crossing of the acceptance curves.
    Verdict curve_ordering()
    {
        constexpr double slack = 0.02;
        SweepConfig c = curve_sweep(0.125);
        const auto pts = c.utilization_points();
        const auto sim = curves(c, run_sweep(c), VerdictMode::Sim);
        const auto& fs = sim.at(SchemeId::FlexStep);
        const auto& hm = sim.at(SchemeId::HMR);
        const auto& ls = sim.at(SchemeId::LockStep);

        SweepConfig a = c;
        a.verdict = SweepVerdict::Analytic;
        a.schemes = {SchemeId::LockStep, SchemeId::FlexStep};
        const auto ana = curves(a, run_sweep(a), VerdictMode::Analytic);
        std::printf("  U        : %s\n", render(pts).c_str());
        std::printf("  sim      lockstep %s\n", render(ls).c_str());
        std::printf("  sim      hmr      %s\n", render(hm).c_str());
        std::printf("  sim      flexstep %s\n", render(fs).c_str());
        std::printf("  analytic lockstep %s\n", render(ana.at(SchemeId::LockStep)).c_str());
        std::printf("  analytic flexstep %s\n", render(ana.at(SchemeId::FlexStep)).c_str());

        bool ordered = true, fs_hm = true, hm_ls = true, mono = true;
        std::string where;
        for (std::size_t i = 0; i < pts.size(); ++i)
        {
            if (fs[i] + slack < hm[i])
            {
                fs_hm = false;
                where += fmt(" flexstep<hmr@%.1f", pts[i]);
            }
            if (hm[i] + slack < ls[i])
            {
                hm_ls = false;
                where += fmt(" hmr<lockstep@%.1f", pts[i]);
            }
        }
        ordered = fs_hm && hm_ls;
        for (const auto* v : {&fs, &hm, &ls})
            for (std::size_t i = 1; i < v->size(); ++i)
                if ((*v)[i] > (*v)[i - 1] + slack) mono = false;
        auto first_zero = [&](const std::vector<double>& v) {
            for (std::size_t i = 0; i < v.size(); ++i)
                if (v[i] == 0.0) return pts[i];
            return std::numeric_limits<double>::infinity();
        };
        const double z_ls = first_zero(ls), z_fs = first_zero(fs);
        const bool crossing = z_ls < z_fs;
        return {ordered && mono && crossing,
                fmt("(a) ordering %s%s; (b) monotone %s; (c) lockstep zero at U=%.1f, flexstep at U=%.1f %s",
                    ordered ? "ok" : "violated:", where.c_str(), mono ? "ok" : "violated", z_ls, z_fs,
                    crossing ? "ok" : "violated")};
    }

    // 4. The FlexStep advantage grows as verification tasks become fewer.
    Verdict fewer_verification_gap()
    {
        auto gap = [](double alpha) {
            SweepConfig c = curve_sweep(alpha);
            c.util_start = 3.0;
            c.util_end = 6.0;
            c.schemes = {SchemeId::LockStep, SchemeId::FlexStep};
            const auto k = curves(c, run_sweep(c), VerdictMode::Sim);
            double g = 0;
            const auto& fs = k.at(SchemeId::FlexStep);
            const auto& ls = k.at(SchemeId::LockStep);
            for (std::size_t i = 0; i < fs.size(); ++i) g += fs[i] - ls[i];
            std::printf("  alpha=beta=%.4f flexstep %s\n", alpha, render(fs).c_str());
            std::printf("  alpha=beta=%.4f lockstep %s\n", alpha, render(ls).c_str());
            return g / static_cast<double>(fs.size());
        };
        const double low = gap(0.0625);
        const double high = gap(0.25);
        return {low > high, fmt("mean gap over U in [3, 6]: %.4f at 6.25%%, %.4f at 25%%", low, high)};
    }

    // 5. UUnifast output is positive and sums to the target.
    Verdict uunifast_correctness()
    {
        Rng rng(505);
        double worst = 0;
        bool ok = true;
        for (int i = 0; i < 10000; ++i)
        {
            const int n = 1 + static_cast<int>(rng.below(200));
            const double u = rng.uniform(0.01, 1.0) * n;
            const auto v = uunifast(n, u, rng);
            double s = 0;
            for (double x : v)
            {
                ok = ok && x > 0;
                s += x;
            }
            ok = ok && v.size() == static_cast<std::size_t>(n);
            worst = std::max(worst, std::abs(s - u));
        }
        ok = ok && worst <= 1e-9;
        return {ok, fmt("10000 draws, worst |sum-U| = %.2e", worst)};
    }

    // 6. No false alarms without faults; every fault detected within the bound.
    Verdict checker_flow()
    {
        std::uint64_t false_alarms = 0;
        for (std::uint64_t s = 0; s < 10000; ++s)
        {
            Rng rng(600000 + s);
            const auto prog = random_program(rng, 1000);
            FlowSim sim(prog, FlowConfig{});
            sim.run();
            false_alarms += sim.checker(0).mismatches().size();
            false_alarms += !sim.done();
        }
        CampaignConfig c;
        c.programs = 100;
        c.program_length = 2000;
        c.faults = 100000;
        c.seed = 606;
        const CampaignResult r = run_fault_campaign(c);
        std::uint64_t max_latency = 0;
        for (const auto& d : r.records) max_latency = std::max(max_latency, d.latency);
        const bool ok = false_alarms == 0 && r.detected == r.records.size() && r.bound_violations == 0;
        return {ok, fmt("10000 clean programs, %llu mismatches; %zu faults, %llu detected, %llu over bound, max latency %llu",
                        static_cast<unsigned long long>(false_alarms), r.records.size(),
                        static_cast<unsigned long long>(r.detected), static_cast<unsigned long long>(r.bound_violations),
                        static_cast<unsigned long long>(max_latency))};
    }

    // 7. Segments tile the user instruction stream.
    Verdict segment_tiling()
    {
        int bad = 0, limit_cuts = 0, priv_cuts = 0;
        for (std::uint64_t s = 0; s < 1000; ++s)
        {
            Rng rng(700000 + s);
            ProgramMix mix;
            mix.priv = (s % 2) ? 0.04 : 0.00005;
            const auto prog = random_program(rng, (s % 2) ? 2000 : 12000, mix);
            const auto segs = segment_program(prog, kDefaultSegLimit);

            // Expected cut points from a plain execution trace.
            std::vector<std::pair<std::uint64_t, EndCause>> expected;
            Machine m(prog);
            std::uint64_t run = 0, user_total = 0;
            while (!m.done())
            {
                if (m.next_instruction().kind == OpKind::PrivSwitch)
                {
                    if (run) expected.push_back({run, EndCause::PrivSwitch});
                    run = 0;
                }
                else
                {
                    ++user_total;
                    if (++run == kDefaultSegLimit)
                    {
                        expected.push_back({run, EndCause::CountLimit});
                        run = 0;
                    }
                }
                m.step();
            }
            if (run) expected.push_back({run, EndCause::ProgramEnd});

            std::uint64_t total = 0;
            bool same = segs.size() == expected.size();
            for (std::size_t i = 0; same && i < segs.size(); ++i)
            {
                total += segs[i].ic;
                same = segs[i].ic == expected[i].first && segs[i].end_cause == expected[i].second;
                limit_cuts += segs[i].end_cause == EndCause::CountLimit;
                priv_cuts += segs[i].end_cause == EndCause::PrivSwitch;
            }
            if (!same || total != user_total) ++bad;
        }
        return {bad == 0 && limit_cuts > 0 && priv_cuts > 0,
                fmt("1000 programs, %d mismatched; %d limit cuts, %d privilege cuts", bad, limit_cuts, priv_cuts)};
    }

    // 8. Channel contract under random producer/consumer schedules.
    Verdict fifo_contract()
    {
        std::uint64_t cycles = 0, stalls = 0, violations = 0;
        for (std::uint64_t s = 0; s < 200; ++s)
        {
            Rng rng(800000 + s);
            const auto prog = random_program(rng, 800);
            FifoChannel ch(1 + rng.below(128));
            FifoChannel* const chans[] = {&ch};
            MainCore main(prog, 50 + rng.below(500));
            std::deque<std::uint64_t> order; // (segment, kind, index) packed, as dequeued
            const double consume_p = rng.uniform(0.05, 1.0);
            auto pack = [](const ChannelWord& w) {
                return (static_cast<std::uint64_t>(w.segment) << 34) | (static_cast<std::uint64_t>(w.kind) << 32) | w.index;
            };
            for (std::uint64_t c = 0; !main.finished() || !ch.empty(); ++c)
            {
                const bool pending = main.pending_words() > 0;
                const bool full = ch.full();
                const bool stalled = main.step(c, chans);
                if (stalled != (pending && full)) ++violations;
                stalls += stalled;
                if (ch.occupancy() > ch.capacity()) ++violations;
                if (rng.uniform_open() < consume_p)
                    if (auto w = ch.pop()) order.push_back(pack(*w));
                ++cycles;
            }
            // Dequeue order equals the enqueue order of the forwarded segments.
            std::deque<std::uint64_t> expected;
            for (const auto& seg : main.segments())
            {
                for (int i = 0; i < RegCheckpoint::kWords; ++i)
                    expected.push_back((static_cast<std::uint64_t>(seg.index) << 34) |
                                       (static_cast<std::uint64_t>(WordKind::Scp) << 32) | static_cast<std::uint64_t>(i));
                for (std::size_t i = 0; i < seg.entries.size(); ++i)
                    expected.push_back((static_cast<std::uint64_t>(seg.index) << 34) |
                                       (static_cast<std::uint64_t>(WordKind::Entry) << 32) | i);
                expected.push_back((static_cast<std::uint64_t>(seg.index) << 34) |
                                   (static_cast<std::uint64_t>(WordKind::Ic) << 32));
                for (int i = 0; i < RegCheckpoint::kWords; ++i)
                    expected.push_back((static_cast<std::uint64_t>(seg.index) << 34) |
                                       (static_cast<std::uint64_t>(WordKind::Ecp) << 32) | static_cast<std::uint64_t>(i));
            }
            if (order != expected) ++violations;
            if (ch.rejected() != 0) ++violations;
        }
        return {violations == 0 && stalls > 0,
                fmt("200 schedules, %llu cycles, %llu stalls, %llu violations", static_cast<unsigned long long>(cycles),
                    static_cast<unsigned long long>(stalls), static_cast<unsigned long long>(violations))};
    }
}

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance checks"};
    int only = 0;
    app.add_option("--criterion,-c", only, "Run a single criterion (1-8); 0 runs all")->check(CLI::Range(0, 8));
    CLI11_PARSE(app, argc, argv);

    using Check = Verdict (*)();
    const std::pair<const char*, Check> checks[] = {
        {"virtual-deadline optimality", virtual_deadline_optimality},
        {"density-test soundness", density_test_soundness},
        {"acceptance-curve ordering", curve_ordering},
        {"fewer-verification-task gap", fewer_verification_gap},
        {"uunifast correctness", uunifast_correctness},
        {"checker-flow detection", checker_flow},
        {"segment tiling", segment_tiling},
        {"fifo contract", fifo_contract},
    };
    bool all = true;
    for (int i = 1; i <= 8; ++i)
    {
        if (only && i != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        const Verdict v = checks[i - 1].second();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d (%s): %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", i, checks[i - 1].first,
                    v.detail.c_str(), secs);
        std::fflush(stdout);
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
