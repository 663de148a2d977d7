// flexstep: task-set generation, partitioning, simulation, acceptance sweeps
// and checker-flow fault campaigns.

#include "flexstep/analysis.hpp"
#include "flexstep/checkerflow.hpp"
#include "flexstep/gen.hpp"
#include "flexstep/partition.hpp"
#include "flexstep/simkernel.hpp"
#include "flexstep/sweep.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

using namespace flexstep;

namespace
{
    // Opens --out, or returns stdout when empty or "-".
    struct Output
    {
        std::unique_ptr<std::ofstream> file;
        std::ostream* os = &std::cout;

        explicit Output(const std::string& path)
        {
            if (path.empty() || path == "-") return;
            file = std::make_unique<std::ofstream>(path);
            if (!*file) throw InvalidArgument("cannot open output file '" + path + "'");
            os = file.get();
        }
        std::ostream& operator*() { return *os; }
    };

    // key=value files; keys without a section apply to the subcommand being run.
    class SubcommandConfig : public CLI::ConfigINI
    {
    public:
        explicit SubcommandConfig(std::string sub) : sub_(std::move(sub)) {}

        std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
        {
            auto items = CLI::ConfigINI::from_config(input);
            for (auto& item : items)
                if (item.parents.empty() && !sub_.empty()) item.parents = {sub_};
            return items;
        }

    private:
        std::string sub_;
    };

    struct TaskSource
    {
        std::string input;
        GenConfig gen;
    };

    void add_gen_options(CLI::App* app, GenConfig& g)
    {
        app->add_option("--tasks,-n", g.n, "Number of tasks")->capture_default_str();
        app->add_option("--cores,-m", g.m, "Number of cores")->capture_default_str();
        app->add_option("--util,-u", g.util, "Total utilization")->capture_default_str();
        app->add_option("--alpha", g.alpha, "Fraction of double-check tasks")->capture_default_str();
        app->add_option("--beta", g.beta, "Fraction of triple-check tasks")->capture_default_str();
        app->add_option("--period-min", g.period_min, "Smallest period")->capture_default_str();
        app->add_option("--period-max", g.period_max, "Largest period")->capture_default_str();
        app->add_option("--seed", g.seed, "Generator seed")->capture_default_str();
    }

    TaskSet load_tasks(const TaskSource& src)
    {
        if (src.input.empty()) return generate_taskset(src.gen);
        std::ifstream in(src.input);
        if (!in) throw InvalidArgument("cannot open task set '" + src.input + "'");
        return read_taskset(in);
    }

    CheckerRelease parse_release(const std::string& s)
    {
        if (s == "virtual-deadline") return CheckerRelease::AtVirtualDeadline;
        if (s == "original-start") return CheckerRelease::AtOriginalStart;
        throw InvalidArgument("unknown checker release '" + s + "'");
    }

    std::ostream& err() { return std::cerr; }

    ProgressFn progress_reporter(const char* what)
    {
        return [what, last = std::uint64_t{0}](std::uint64_t done, std::uint64_t total) mutable {
            const std::uint64_t pct = done * 100 / total;
            if (pct != last || done == total)
            {
                last = pct;
                err() << '\r' << what << ": " << done << '/' << total << " (" << pct << "%)" << std::flush;
                if (done == total) err() << '\n';
            }
        };
    }
} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"FlexStep schedulability and checker-flow simulator"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
    app.config_formatter(std::make_shared<SubcommandConfig>(argc > 1 ? argv[1] : ""));

    // gen ------------------------------------------------------------------
    GenConfig gen_cfg;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "Generate a random task set");
    gen->fallthrough();
    add_gen_options(gen, gen_cfg);
    gen->add_option("--out,-o", gen_out, "Output file (default stdout)");

    // partition ---------------------------------------------------------------
    TaskSource part_src;
    std::string part_scheme = "flexstep", part_out;
    auto* part = app.add_subcommand("partition", "Partition a task set and print the allocation trace");
    part->fallthrough();
    part->add_option("--input,-i", part_src.input, "Task-set file (otherwise generated from the options below)");
    add_gen_options(part, part_src.gen);
    part->add_option("--scheme", part_scheme, "lockstep, hmr or flexstep")->capture_default_str();
    part->add_option("--out,-o", part_out, "Output file (default stdout)");

    // simulate ----------------------------------------------------------------
    TaskSource sim_src;
    std::string sim_scheme = "flexstep", sim_out, sim_release = "virtual-deadline", sim_time = "float";
    double sim_horizon = 0.0;
    bool sim_no_trace = false;
    auto* sim = app.add_subcommand("simulate", "Simulate one task set and print its event trace");
    sim->fallthrough();
    sim->add_option("--input,-i", sim_src.input, "Task-set file (otherwise generated from the options below)");
    add_gen_options(sim, sim_src.gen);
    sim->add_option("--scheme", sim_scheme, "lockstep, hmr or flexstep")->capture_default_str();
    sim->add_option("--horizon", sim_horizon, "Simulated time (0 = min(2 x hyperperiod, 1e6))")->capture_default_str();
    sim->add_option("--checker-release", sim_release, "virtual-deadline or original-start")->capture_default_str();
    sim->add_option("--time-mode", sim_time, "float or exact")->capture_default_str();
    sim->add_flag("--no-trace", sim_no_trace, "Print only the summary");
    sim->add_option("--out,-o", sim_out, "Output file (default stdout)");

    // sweep -------------------------------------------------------------------
    SweepConfig sw;
    std::vector<std::string> sw_schemes{"lockstep", "hmr", "flexstep"};
    std::string sw_verdict = "analytic", sw_out, sw_release = "virtual-deadline";
    double sw_horizon = kDefaultSweepHorizon;
    auto* sweep = app.add_subcommand("sweep", "Acceptance ratio versus total utilization");
    sweep->fallthrough();
    sweep->add_option("--cores,-m", sw.m, "Number of cores")->capture_default_str();
    sweep->add_option("--tasks,-n", sw.n, "Tasks per set")->capture_default_str();
    sweep->add_option("--alpha", sw.alpha, "Fraction of double-check tasks")->capture_default_str();
    sweep->add_option("--beta", sw.beta, "Fraction of triple-check tasks")->capture_default_str();
    sweep->add_option("--util-start", sw.util_start)->capture_default_str();
    sweep->add_option("--util-end", sw.util_end)->capture_default_str();
    sweep->add_option("--util-step", sw.util_step)->capture_default_str();
    sweep->add_option("--sets-per-point", sw.sets_per_point)->capture_default_str();
    sweep->add_option("--scheme", sw_schemes, "Schemes to evaluate (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    sweep->add_option("--seed", sw.seed)->capture_default_str();
    sweep->add_option("--verdict", sw_verdict, "analytic, sim or both")->capture_default_str();
    sweep->add_option("--sim-horizon", sw_horizon, "Horizon for simulated verdicts (0 = min(2 x hyperperiod, 1e6))")
        ->capture_default_str();
    sweep->add_option("--checker-release", sw_release, "virtual-deadline or original-start")->capture_default_str();
    bool sw_sim_all = false;
    sweep->add_flag("--simulate-proven", sw_sim_all, "Simulate sets that already pass the density test");
    sweep->add_option("--period-min", sw.period_min)->capture_default_str();
    sweep->add_option("--period-max", sw.period_max)->capture_default_str();
    sweep->add_option("--threads", sw.threads, "Worker threads (0 = all cores)")->capture_default_str();
    sweep->add_option("--out,-o", sw_out, "CSV file (default stdout); parameters go to <out>.meta");

    // faults ------------------------------------------------------------------
    CampaignConfig fc;
    std::string fc_out, fc_hist;
    auto* faults = app.add_subcommand("faults", "Fault-injection campaign on the checker flow");
    faults->fallthrough();
    faults->add_option("--programs", fc.programs, "Random programs to spread faults over")->capture_default_str();
    faults->add_option("--length", fc.program_length, "Instructions per program")->capture_default_str();
    faults->add_option("--faults", fc.faults, "Single-bit faults to inject")->capture_default_str();
    faults->add_option("--seg-limit", fc.seg_limit, "User instructions per checking segment")->capture_default_str();
    faults->add_option("--capacity", fc.capacity, "Channel capacity in words")->capture_default_str();
    faults->add_option("--lag", fc.checker_lag, "Checker start delay in cycles")->capture_default_str();
    faults->add_option("--checkers", fc.checkers, "1 (dual) or 2 (triple)")->capture_default_str();
    faults->add_option("--seed", fc.seed)->capture_default_str();
    faults->add_option("--bucket-width", fc.bucket_width, "Latency histogram bucket width")->capture_default_str();
    faults->add_option("--threads", fc.threads, "Worker threads (0 = all cores)")->capture_default_str();
    faults->add_option("--out,-o", fc_out, "Detection CSV (default stdout)");
    faults->add_option("--histogram", fc_hist, "Latency histogram CSV (default <out>.hist)");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (gen->parsed())
        {
            Output out(gen_out);
            write_taskset(*out, generate_taskset(gen_cfg));
        }
        else if (part->parsed())
        {
            const TaskSet ts = load_tasks(part_src);
            const Partition p = make_partition(ts, part_src.gen.m, parse_scheme(part_scheme));
            Output out(part_out);
            for (const auto& step : p.trace)
            {
                *out << "assign entity " << step.entity_id << " -> core " << step.core << " excluded [";
                for (std::size_t i = 0; i < step.excluded.size(); ++i) *out << (i ? " " : "") << step.excluded[i];
                *out << "]\n";
            }
            write_partition(*out, p);
        }
        else if (sim->parsed())
        {
            const TaskSet ts = load_tasks(sim_src);
            const Partition p = make_partition(ts, sim_src.gen.m, parse_scheme(sim_scheme));
            SimConfig sc;
            if (sim_horizon > 0) sc.horizon = sim_horizon;
            sc.checker_release = parse_release(sim_release);
            if (sim_time == "exact")
                sc.time_mode = TimeMode::ExactInteger;
            else if (sim_time != "float")
                throw InvalidArgument("unknown time mode '" + sim_time + "'");
            sc.record_trace = !sim_no_trace;
            const SimResult r = simulate(p, sc);
            Output out(sim_out);
            write_trace(*out, r.trace);
            for (const auto& mr : r.misses)
                *out << "miss entity=" << mr.entity_id << " job=" << mr.job_index
                     << " deadline=" << format_number(mr.abs_deadline) << '\n';
            *out << "summary scheme=" << to_string(p.scheme) << " partition="
                 << (p.outcome == Outcome::Success ? "success" : "fail") << " unplaced=" << p.unplaced.size()
                 << " misses=" << r.misses.size() << " preemptions=" << r.preemptions
                 << " horizon=" << format_number(r.horizon) << (r.horizon_approximate ? " (capped)" : "")
                 << " busiest-core-util=" << format_number(r.busiest_core_util) << '\n';
        }
        else if (sweep->parsed())
        {
            sw.schemes.clear();
            for (const auto& s : sw_schemes) sw.schemes.push_back(parse_scheme(s));
            sw.verdict = parse_sweep_verdict(sw_verdict);
            if (sw_horizon > 0)
                sw.sim_horizon = sw_horizon;
            else
                sw.sim_horizon.reset();
            sw.checker_release = parse_release(sw_release);
            sw.skip_proven = !sw_sim_all;
            sw.validate();
            const SweepResult r = run_sweep(sw, progress_reporter("sweep"));
            Output out(sw_out);
            write_sweep_csv(*out, sw, r);
            if (out.file)
            {
                std::ofstream meta(sw_out + ".meta");
                write_sweep_metadata(meta, sw, r);
            }
            else
                write_sweep_metadata(err(), sw, r);
        }
        else if (faults->parsed())
        {
            const CampaignResult r = run_fault_campaign(fc, progress_reporter("faults"));
            Output out(fc_out);
            write_campaign_csv(*out, r);
            std::string hist_path = fc_hist;
            if (hist_path.empty() && out.file) hist_path = fc_out + ".hist";
            const auto hist = latency_histogram(r.records, fc.bucket_width);
            if (!hist_path.empty())
            {
                std::ofstream h(hist_path);
                if (!h) throw InvalidArgument("cannot open histogram file '" + hist_path + "'");
                write_histogram_csv(h, hist);
            }
            err() << "faults=" << r.records.size() << " detected=" << r.detected
                  << " rate=" << format_number(r.detection_rate()) << " bound-violations=" << r.bound_violations
                  << " capacity=" << fc.capacity << " seg-limit=" << fc.seg_limit << " lag=" << fc.checker_lag
                  << '\n';
        }
    }
    catch (const std::exception& e)
    {
        err() << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
