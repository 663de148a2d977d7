#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flexstep
{
    // Absolute tolerance used for every time/density comparison in float mode.
    inline constexpr double kEps = 1e-9;

    struct InvalidArgument : std::invalid_argument
    {
        using std::invalid_argument::invalid_argument;
    };

    enum class TaskClass : std::uint8_t
    {
        NonVerify,
        DoubleCheck,
        TripleCheck,
    };

    std::string_view to_string(TaskClass c) noexcept;
    TaskClass parse_task_class(std::string_view s);

    // Number of checker copies a task's class requires (0, 1 or 2).
    constexpr int check_count(TaskClass c) noexcept
    {
        switch (c)
        {
        case TaskClass::DoubleCheck: return 1;
        case TaskClass::TripleCheck: return 2;
        default: return 0;
        }
    }

    constexpr bool is_verification(TaskClass c) noexcept { return c != TaskClass::NonVerify; }

    struct Task
    {
        int id = 0;
        double wcet = 0.0;
        double period = 0.0;
        double deadline = 0.0; // implicit: always equal to period
        TaskClass cls = TaskClass::NonVerify;

        static Task make(int id, double wcet, double period, TaskClass cls = TaskClass::NonVerify);

        // Throws InvalidArgument if wcet/period/deadline violate the implicit-deadline model.
        void validate() const;
    };

    double task_utilization(const Task& task);

    struct GenConfig
    {
        int n = 10;
        int m = 4;
        double util = 1.0;
        double alpha = 0.0;
        double beta = 0.0;
        double period_min = 10.0;
        double period_max = 1000.0;
        std::uint64_t seed = 1;

        void validate() const;
    };

    struct TaskSet
    {
        std::vector<Task> tasks;
        double target_util = 0.0;
        GenConfig meta;

        double total_utilization() const;
        std::size_t count(TaskClass c) const;
    };

    enum class Role : std::uint8_t
    {
        Original,
        Check1,
        Check2,
    };

    std::string_view to_string(Role r) noexcept;

    struct SchedEntity
    {
        int entity_id = 0;
        int task_id = 0;
        Role role = Role::Original;
        double release_offset = 0.0;
        double rel_deadline = 0.0;
        double exec = 0.0;
        double density = 0.0;
        double period = 0.0; // copied from the origin task, needed for job release
    };

    enum class SchemeId : std::uint8_t
    {
        LockStep,
        HMR,
        FlexStep,
    };

    std::string_view to_string(SchemeId s) noexcept;
    SchemeId parse_scheme(std::string_view s);

    enum class Outcome : std::uint8_t
    {
        Success,
        Fail,
    };

    // A DCLS (2 cores) or TCLS (3 cores) binding used by the LockStep allocator.
    struct CoreGroup
    {
        std::vector<int> member_cores;
        int logical_index = 0;
        TaskClass cls = TaskClass::DoubleCheck;
    };

    // HMR per-task binding of a main core to its checker core(s).
    struct HmrBinding
    {
        int task_id = 0;
        int main_core = 0;
        std::vector<int> checker_cores;
    };

    // One worst-fit decision, kept so allocations can be replayed and audited.
    struct AssignmentStep
    {
        int entity_id = 0;
        int core = 0;
        std::vector<int> excluded; // cores that were ineligible for this entity
    };

    struct Partition
    {
        SchemeId scheme = SchemeId::FlexStep;
        int core_count = 0;
        // Indexed by scheduling core. For LockStep this is the logical core index:
        // groups first (in opening order), then the remaining single cores.
        std::vector<std::vector<SchedEntity>> assignment;
        std::vector<double> core_density;
        std::vector<CoreGroup> groups;
        std::vector<HmrBinding> bindings;
        std::vector<AssignmentStep> trace;
        // LockStep only: entities that could not be placed because no group of
        // their class existed and no cores were left to open one.
        std::vector<SchedEntity> unplaced;
        Outcome outcome = Outcome::Success;

        std::size_t scheduling_cores() const noexcept { return assignment.size(); }
        // Recomputes per-core density sums from the assignment.
        std::vector<double> recompute_density() const;
    };

    // Line-oriented task-set text format: "n U seed" then "id wcet period class".
    std::string format_number(double v);
    void write_taskset(std::ostream& os, const TaskSet& ts);
    std::string serialize_taskset(const TaskSet& ts);
    TaskSet read_taskset(std::istream& is);
    TaskSet parse_taskset(std::string_view text);

    // Diagnostic rendering: "core k: density D, entities [...]".
    void write_partition(std::ostream& os, const Partition& p);
} // namespace flexstep
