#include "flexstep/partition.hpp"

#include "flexstep/analysis.hpp"

#include <algorithm>
#include <numeric>

namespace flexstep
{
    namespace
    {
        int argmin_density(const std::vector<double>& density, const std::vector<int>& excluded)
        {
            int best = -1;
            for (int k = 0; k < static_cast<int>(density.size()); ++k)
            {
                if (std::find(excluded.begin(), excluded.end(), k) != excluded.end()) continue;
                if (best < 0 || density[static_cast<std::size_t>(k)] < density[static_cast<std::size_t>(best)])
                    best = k;
            }
            return best;
        }

        void place(Partition& p, const SchedEntity& e, int core, std::vector<int> excluded)
        {
            const auto k = static_cast<std::size_t>(core);
            p.assignment[k].push_back(e);
            p.core_density[k] += e.density;
            p.trace.push_back({e.entity_id, core, std::move(excluded)});
        }

        Partition empty_partition(SchemeId scheme, int m, std::size_t cores)
        {
            Partition p;
            p.scheme = scheme;
            p.core_count = m;
            p.assignment.assign(cores, {});
            p.core_density.assign(cores, 0.0);
            return p;
        }

        // First entity id of every task, in task order then role order.
        std::vector<int> first_ids(const TaskSet& ts, SchemeId scheme)
        {
            std::vector<int> ids(ts.tasks.size());
            int next = 0;
            for (std::size_t i = 0; i < ts.tasks.size(); ++i)
            {
                ids[i] = next;
                next += scheme == SchemeId::LockStep ? 1 : 1 + check_count(ts.tasks[i].cls);
            }
            return ids;
        }

        void check_core_count(const TaskSet& ts, int m, const char* who)
        {
            if (m < 1) throw InfeasibleConfiguration(std::string(who) + ": need at least one core");
            if (m < required_cores(ts))
                throw InfeasibleConfiguration(std::string(who) + ": " + std::to_string(required_cores(ts)) +
                                              " distinct cores required, only " + std::to_string(m) + " available");
        }
    } // namespace

    int required_cores(const TaskSet& ts)
    {
        int need = 1;
        for (const auto& t : ts.tasks) need = std::max(need, 1 + check_count(t.cls));
        return need;
    }

    std::vector<SchedEntity> scheme_entities(const Task& task, SchemeId scheme, int first_entity_id)
    {
        if (scheme == SchemeId::FlexStep) return split_task(task, first_entity_id);
        const double u = task.wcet / task.deadline;
        std::vector<SchedEntity> out;
        out.push_back({first_entity_id, task.id, Role::Original, 0.0, task.deadline, task.wcet, u, task.period});
        if (scheme == SchemeId::HMR)
        {
            for (int c = 0; c < check_count(task.cls); ++c)
                out.push_back({first_entity_id + 1 + c, task.id, c == 0 ? Role::Check1 : Role::Check2, 0.0,
                               task.deadline, task.wcet, u, task.period});
        }
        return out;
    }

    std::vector<std::size_t> by_descending_utilization(const TaskSet& ts, TaskClass cls)
    {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ts.tasks.size(); ++i)
            if (ts.tasks[i].cls == cls) idx.push_back(i);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return task_utilization(ts.tasks[a]) > task_utilization(ts.tasks[b]);
        });
        return idx;
    }

    Partition partition_flexstep(const TaskSet& ts, int m)
    {
        check_core_count(ts, m, "partition_flexstep");
        Partition p = empty_partition(SchemeId::FlexStep, m, static_cast<std::size_t>(m));
        const auto ids = first_ids(ts, SchemeId::FlexStep);

        for (TaskClass cls : {TaskClass::TripleCheck, TaskClass::DoubleCheck})
        {
            for (std::size_t i : by_descending_utilization(ts, cls))
            {
                const auto ents = split_task(ts.tasks[i], ids[i]);
                std::vector<int> used;
                for (const auto& e : ents)
                {
                    const int k = argmin_density(p.core_density, used);
                    place(p, e, k, used);
                    used.push_back(k);
                }
            }
        }
        for (std::size_t i : by_descending_utilization(ts, TaskClass::NonVerify))
        {
            const auto ents = split_task(ts.tasks[i], ids[i]);
            place(p, ents.front(), argmin_density(p.core_density, {}), {});
        }
        p.outcome = density_test(p) ? Outcome::Success : Outcome::Fail;
        return p;
    }

    Partition partition_lockstep(const TaskSet& ts, int m)
    {
        if (m < 2) throw InfeasibleConfiguration("partition_lockstep: need at least two cores");
        Partition p = empty_partition(SchemeId::LockStep, m, 0);
        const auto ids = first_ids(ts, SchemeId::LockStep);
        int free_cores = m;
        int next_physical = 0;
        bool exhausted = false;

        for (TaskClass cls : {TaskClass::TripleCheck, TaskClass::DoubleCheck})
        {
            const int size = 1 + check_count(cls);
            for (std::size_t i : by_descending_utilization(ts, cls))
            {
                const SchedEntity e = scheme_entities(ts.tasks[i], SchemeId::LockStep, ids[i]).front();
                // First-fit over the existing groups of this class.
                int target = -1;
                for (const auto& g : p.groups)
                {
                    const auto k = static_cast<std::size_t>(g.logical_index);
                    if (g.cls == cls && p.core_density[k] + e.density <= 1.0 + kEps)
                    {
                        target = g.logical_index;
                        break;
                    }
                }
                if (target < 0 && free_cores >= size)
                {
                    CoreGroup g;
                    g.cls = cls;
                    g.logical_index = static_cast<int>(p.assignment.size());
                    for (int c = 0; c < size; ++c) g.member_cores.push_back(next_physical++);
                    free_cores -= size;
                    p.groups.push_back(g);
                    p.assignment.emplace_back();
                    p.core_density.push_back(0.0);
                    target = g.logical_index;
                }
                if (target < 0)
                {
                    exhausted = true;
                    // Keep the assignment complete for diagnostics: overload the
                    // least-loaded group of this class if there is one.
                    std::vector<int> excluded;
                    for (const auto& g : p.groups)
                        if (g.cls != cls) excluded.push_back(g.logical_index);
                    if (excluded.size() == p.groups.size())
                    {
                        p.unplaced.push_back(e);
                        continue;
                    }
                    target = argmin_density(p.core_density, excluded);
                }
                place(p, e, target, {});
            }
        }

        // Remaining physical cores become single logical cores.
        for (int c = 0; c < free_cores; ++c)
        {
            p.assignment.emplace_back();
            p.core_density.push_back(0.0);
        }
        for (std::size_t i : by_descending_utilization(ts, TaskClass::NonVerify))
        {
            const SchedEntity e = scheme_entities(ts.tasks[i], SchemeId::LockStep, ids[i]).front();
            if (p.assignment.empty())
            {
                p.unplaced.push_back(e);
                continue;
            }
            place(p, e, argmin_density(p.core_density, {}), {});
        }
        p.outcome = (!exhausted && p.unplaced.empty() && density_test(p)) ? Outcome::Success : Outcome::Fail;
        return p;
    }

    Partition partition_hmr(const TaskSet& ts, int m)
    {
        check_core_count(ts, m, "partition_hmr");
        if (m < 2) throw InfeasibleConfiguration("partition_hmr: need at least two cores");
        Partition p = empty_partition(SchemeId::HMR, m, static_cast<std::size_t>(m));
        const auto ids = first_ids(ts, SchemeId::HMR);
        std::vector<bool> verification_load(static_cast<std::size_t>(m), false);

        for (TaskClass cls : {TaskClass::TripleCheck, TaskClass::DoubleCheck})
        {
            for (std::size_t i : by_descending_utilization(ts, cls))
            {
                const auto ents = scheme_entities(ts.tasks[i], SchemeId::HMR, ids[i]);
                HmrBinding b;
                b.task_id = ts.tasks[i].id;
                std::vector<int> used;
                for (const auto& e : ents)
                {
                    const int k = argmin_density(p.core_density, used);
                    place(p, e, k, used);
                    used.push_back(k);
                    verification_load[static_cast<std::size_t>(k)] = true;
                    if (e.role == Role::Original)
                        b.main_core = k;
                    else
                        b.checker_cores.push_back(k);
                }
                p.bindings.push_back(std::move(b));
            }
        }

        std::vector<int> loaded;
        for (int k = 0; k < m; ++k)
            if (verification_load[static_cast<std::size_t>(k)]) loaded.push_back(k);
        const bool any_unloaded = static_cast<int>(loaded.size()) < m;

        for (std::size_t i : by_descending_utilization(ts, TaskClass::NonVerify))
        {
            const SchedEntity e = scheme_entities(ts.tasks[i], SchemeId::HMR, ids[i]).front();
            // Prefer cores without verification load while the task still fits there.
            if (any_unloaded)
            {
                const int k = argmin_density(p.core_density, loaded);
                if (p.core_density[static_cast<std::size_t>(k)] + e.density <= 1.0 + kEps)
                {
                    place(p, e, k, loaded);
                    continue;
                }
            }
            place(p, e, argmin_density(p.core_density, {}), {});
        }
        p.outcome = density_test(p) ? Outcome::Success : Outcome::Fail;
        return p;
    }

    Partition make_partition(const TaskSet& ts, int m, SchemeId scheme)
    {
        switch (scheme)
        {
        case SchemeId::FlexStep: return partition_flexstep(ts, m);
        case SchemeId::LockStep: return partition_lockstep(ts, m);
        case SchemeId::HMR: return partition_hmr(ts, m);
        }
        throw InvalidArgument("make_partition: unknown scheme");
    }
} // namespace flexstep
