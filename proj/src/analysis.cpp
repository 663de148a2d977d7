#include "flexstep/analysis.hpp"

#include <cmath>
#include <limits>

namespace flexstep
{
    double virtual_deadline(const Task& task)
    {
        switch (task.cls)
        {
        case TaskClass::DoubleCheck: return task.deadline / 2.0;
        case TaskClass::TripleCheck: return kTripleVirtualFraction * task.deadline;
        case TaskClass::NonVerify: break;
        }
        throw InvalidArgument("virtual_deadline: task " + std::to_string(task.id) + " is not a verification task");
    }

    Densities densities(const Task& task)
    {
        const double vd = virtual_deadline(task);
        return {task.wcet / vd, task.wcet / (task.deadline - vd)};
    }

    double optimal_virtual_deadline_oracle(TaskClass cls, double wcet, double deadline, int grid_steps)
    {
        if (grid_steps < 2) throw InvalidArgument("oracle: grid_steps must be >= 2");
        const double k = static_cast<double>(check_count(cls));
        double best = std::numeric_limits<double>::infinity();
        double best_vd = 0.0;
        for (int j = 1; j < grid_steps; ++j)
        {
            const double vd = deadline * static_cast<double>(j) / static_cast<double>(grid_steps);
            const double objective = wcet / vd + k * wcet / (deadline - vd);
            if (objective < best)
            {
                best = objective;
                best_vd = vd;
            }
        }
        return best_vd;
    }

    std::vector<SchedEntity> split_task(const Task& task, int first_entity_id)
    {
        std::vector<SchedEntity> out;
        if (task.cls == TaskClass::NonVerify)
        {
            out.push_back({first_entity_id, task.id, Role::Original, 0.0, task.deadline, task.wcet,
                           task.wcet / task.deadline, task.period});
            return out;
        }
        const double vd = virtual_deadline(task);
        const auto d = densities(task);
        out.push_back({first_entity_id, task.id, Role::Original, 0.0, vd, task.wcet, d.original, task.period});
        out.push_back({first_entity_id + 1, task.id, Role::Check1, vd, task.deadline, task.wcet, d.check, task.period});
        if (task.cls == TaskClass::TripleCheck)
            out.push_back(
                {first_entity_id + 2, task.id, Role::Check2, vd, task.deadline, task.wcet, d.check, task.period});
        return out;
    }

    std::vector<SchedEntity> split_taskset(const TaskSet& ts)
    {
        std::vector<SchedEntity> out;
        int next_id = 0;
        for (const auto& t : ts.tasks)
        {
            auto ents = split_task(t, next_id);
            next_id += static_cast<int>(ents.size());
            out.insert(out.end(), ents.begin(), ents.end());
        }
        return out;
    }

    bool density_test(const std::vector<double>& core_density)
    {
        for (double d : core_density)
            if (d > 1.0 + kEps) return false;
        return true;
    }

    bool density_test(const Partition& partition) { return density_test(partition.core_density); }
} // namespace flexstep
