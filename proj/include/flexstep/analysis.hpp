#pragma once

#include "flexstep/model.hpp"

#include <vector>

namespace flexstep
{
    // (sqrt(2) - 1): the density-minimizing virtual-deadline fraction for triple checking.
    inline constexpr double kTripleVirtualFraction = 0.41421356237309504880;

    struct Densities
    {
        double original = 0.0; // C / D'
        double check = 0.0;    // C / (D - D')
    };

    // D/2 for DoubleCheck, (sqrt(2)-1)*D for TripleCheck. NonVerify is rejected.
    double virtual_deadline(const Task& task);

    // Densities of the original computation (scheduled against D') and of each
    // checker copy (scheduled in the window D - D'). Values above 1 are legal.
    Densities densities(const Task& task);

    // Brute-force argmin over D' in {D*j/grid_steps : 1 <= j < grid_steps} of
    // C/D' + k*C/(D-D'), with k = number of checker copies. Independent of the
    // closed form above; used to confirm it.
    double optimal_virtual_deadline_oracle(TaskClass cls, double wcet, double deadline, int grid_steps);

    // Splits a task into its original entity and checker entities. Entity ids
    // are first_entity_id, first_entity_id+1, ... in role order.
    std::vector<SchedEntity> split_task(const Task& task, int first_entity_id = 0);

    // All entities of a task set, ids assigned in task order then role order.
    std::vector<SchedEntity> split_taskset(const TaskSet& ts);

    // True iff every scheduling core's density is at most 1 (closed inequality, kEps slack).
    bool density_test(const Partition& partition);
    bool density_test(const std::vector<double>& core_density);
} // namespace flexstep
