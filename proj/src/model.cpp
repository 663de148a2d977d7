#include "flexstep/model.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace flexstep
{
    std::string_view to_string(TaskClass c) noexcept
    {
        switch (c)
        {
        case TaskClass::NonVerify: return "N";
        case TaskClass::DoubleCheck: return "V2";
        case TaskClass::TripleCheck: return "V3";
        }
        return "?";
    }

    TaskClass parse_task_class(std::string_view s)
    {
        if (s == "N") return TaskClass::NonVerify;
        if (s == "V2") return TaskClass::DoubleCheck;
        if (s == "V3") return TaskClass::TripleCheck;
        throw InvalidArgument("unknown task class '" + std::string(s) + "'");
    }

    std::string_view to_string(Role r) noexcept
    {
        switch (r)
        {
        case Role::Original: return "orig";
        case Role::Check1: return "chk1";
        case Role::Check2: return "chk2";
        }
        return "?";
    }

    std::string_view to_string(SchemeId s) noexcept
    {
        switch (s)
        {
        case SchemeId::LockStep: return "lockstep";
        case SchemeId::HMR: return "hmr";
        case SchemeId::FlexStep: return "flexstep";
        }
        return "?";
    }

    SchemeId parse_scheme(std::string_view s)
    {
        if (s == "lockstep" || s == "LockStep") return SchemeId::LockStep;
        if (s == "hmr" || s == "HMR") return SchemeId::HMR;
        if (s == "flexstep" || s == "FlexStep") return SchemeId::FlexStep;
        throw InvalidArgument("unknown scheme '" + std::string(s) + "'");
    }

    Task Task::make(int id, double wcet, double period, TaskClass cls)
    {
        Task t{id, wcet, period, period, cls};
        t.validate();
        return t;
    }

    void Task::validate() const
    {
        if (!(wcet > 0.0)) throw InvalidArgument("task " + std::to_string(id) + ": wcet must be > 0");
        if (!(period > 0.0)) throw InvalidArgument("task " + std::to_string(id) + ": period must be > 0");
        if (deadline != period) throw InvalidArgument("task " + std::to_string(id) + ": deadline must equal period");
        if (wcet > deadline + kEps) throw InvalidArgument("task " + std::to_string(id) + ": wcet exceeds deadline");
    }

    double task_utilization(const Task& task) { return task.wcet / task.period; }

    void GenConfig::validate() const
    {
        if (n < 1) throw InvalidArgument("gen: n must be >= 1");
        if (m < 1) throw InvalidArgument("gen: m must be >= 1");
        if (!(util > 0.0)) throw InvalidArgument("gen: util must be > 0");
        if (alpha < 0.0 || beta < 0.0 || alpha + beta > 1.0 + kEps)
            throw InvalidArgument("gen: need 0 <= alpha, 0 <= beta, alpha + beta <= 1");
        if (!(period_min > 0.0) || period_min > period_max)
            throw InvalidArgument("gen: need 0 < period_min <= period_max");
    }

    double TaskSet::total_utilization() const
    {
        double sum = 0.0;
        for (const auto& t : tasks) sum += task_utilization(t);
        return sum;
    }

    std::size_t TaskSet::count(TaskClass c) const
    {
        std::size_t k = 0;
        for (const auto& t : tasks) k += (t.cls == c);
        return k;
    }

    std::vector<double> Partition::recompute_density() const
    {
        std::vector<double> out(assignment.size(), 0.0);
        for (std::size_t k = 0; k < assignment.size(); ++k)
            for (const auto& e : assignment[k]) out[k] += e.density;
        return out;
    }

    std::string format_number(double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return buf;
    }

    void write_taskset(std::ostream& os, const TaskSet& ts)
    {
        os << ts.tasks.size() << ' ' << format_number(ts.target_util) << ' ' << ts.meta.seed << '\n';
        for (const auto& t : ts.tasks)
            os << t.id << ' ' << format_number(t.wcet) << ' ' << format_number(t.period) << ' ' << to_string(t.cls)
               << '\n';
    }

    std::string serialize_taskset(const TaskSet& ts)
    {
        std::ostringstream os;
        write_taskset(os, ts);
        return os.str();
    }

    TaskSet read_taskset(std::istream& is)
    {
        TaskSet ts;
        std::size_t n = 0;
        if (!(is >> n >> ts.target_util >> ts.meta.seed)) throw InvalidArgument("taskset: malformed header");
        ts.meta.n = static_cast<int>(n);
        ts.meta.util = ts.target_util;
        ts.tasks.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            Task t;
            std::string cls;
            if (!(is >> t.id >> t.wcet >> t.period >> cls))
                throw InvalidArgument("taskset: malformed line for task " + std::to_string(i));
            t.deadline = t.period;
            t.cls = parse_task_class(cls);
            t.validate();
            ts.tasks.push_back(t);
        }
        return ts;
    }

    TaskSet parse_taskset(std::string_view text)
    {
        std::istringstream is{std::string(text)};
        return read_taskset(is);
    }

    void write_partition(std::ostream& os, const Partition& p)
    {
        os << "scheme " << to_string(p.scheme) << ", cores " << p.core_count << ", outcome "
           << (p.outcome == Outcome::Success ? "success" : "fail") << '\n';
        for (const auto& g : p.groups)
        {
            os << "group " << g.logical_index << " (" << to_string(g.cls) << "): cores [";
            for (std::size_t i = 0; i < g.member_cores.size(); ++i)
                os << (i ? " " : "") << g.member_cores[i];
            os << "]\n";
        }
        for (const auto& b : p.bindings)
        {
            os << "binding task " << b.task_id << ": main " << b.main_core << " checkers [";
            for (std::size_t i = 0; i < b.checker_cores.size(); ++i)
                os << (i ? " " : "") << b.checker_cores[i];
            os << "]\n";
        }
        for (std::size_t k = 0; k < p.assignment.size(); ++k)
        {
            os << "core " << k << ": density " << format_number(p.core_density[k]) << ", entities [";
            bool first = true;
            for (const auto& e : p.assignment[k])
            {
                os << (first ? "" : " ") << e.entity_id << ':' << e.task_id << '/' << to_string(e.role);
                first = false;
            }
            os << "]\n";
        }
        for (const auto& e : p.unplaced)
            os << "unplaced: " << e.entity_id << ':' << e.task_id << '/' << to_string(e.role) << '\n';
    }
} // namespace flexstep
