#pragma once

#include "flexstep/model.hpp"

#include <stdexcept>
#include <vector>

namespace flexstep
{
    // Raised when a task set cannot even be laid out (e.g. a TripleCheck task
    // with fewer than three cores). Schedulability failures are reported through
    // Partition::outcome instead.
    struct InfeasibleConfiguration : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };

    // Minimum core count implied by the task classes present (1, 2 or 3).
    int required_cores(const TaskSet& ts);

    // Entities a task contributes under a given scheme. FlexStep: split_task.
    // LockStep: one entity with density C/D (checking mirrors it implicitly).
    // HMR: original plus checker occupancies, all with window D and density C/D.
    std::vector<SchedEntity> scheme_entities(const Task& task, SchemeId scheme, int first_entity_id);

    // Task indices of one class, ordered by descending utilization (ties: task order).
    std::vector<std::size_t> by_descending_utilization(const TaskSet& ts, TaskClass cls);

    // Worst-fit partitioning with virtual deadlines and asynchronous checkers:
    // V3 tasks, then V2 tasks, then NonVerify tasks, each on the minimum-density
    // eligible core (ties: lowest index). Checker copies avoid the cores already
    // holding the same task's other entities.
    Partition partition_flexstep(const TaskSet& ts, int m);

    // Lockstep baseline: class-homogeneous DCLS/TCLS groups opened on demand,
    // each one logical core of capacity 1; NonVerify tasks worst-fit over all
    // logical cores.
    Partition partition_lockstep(const TaskSet& ts, int m);

    // Split-lock/HMR baseline: per-task (main, checker...) bindings on the
    // minimum-density cores; NonVerify tasks prefer cores free of verification load.
    // outcome reflects the density test only; the HMR verdict needs simulation.
    Partition partition_hmr(const TaskSet& ts, int m);

    Partition make_partition(const TaskSet& ts, int m, SchemeId scheme);
} // namespace flexstep
