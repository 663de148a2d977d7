#include "flexstep/analysis.hpp"
#include "flexstep/gen.hpp"

#include <doctest.h>

#include <cmath>

using namespace flexstep;

namespace
{
    const double kRoot2m1 = std::sqrt(2.0) - 1.0;

    double objective(TaskClass cls, double c, double d, double vd)
    {
        return c / vd + check_count(cls) * c / (d - vd);
    }
}

TEST_CASE("virtual deadlines")
{
    CHECK(virtual_deadline(Task::make(0, 1, 10, TaskClass::DoubleCheck)) == doctest::Approx(5.0));
    CHECK(virtual_deadline(Task::make(0, 1, 10, TaskClass::TripleCheck)) == doctest::Approx(4.14213562373));
    CHECK(virtual_deadline(Task::make(0, 0.1, 1, TaskClass::DoubleCheck)) == doctest::Approx(0.5));
    CHECK(kTripleVirtualFraction == doctest::Approx(kRoot2m1).epsilon(1e-15));
    CHECK_THROWS_AS(virtual_deadline(Task::make(0, 1, 10)), InvalidArgument);
}

TEST_CASE("densities")
{
    auto d = densities(Task::make(0, 2, 10, TaskClass::DoubleCheck));
    CHECK(d.original == doctest::Approx(0.4));
    CHECK(d.check == doctest::Approx(0.4));

    d = densities(Task::make(0, 1, 10, TaskClass::TripleCheck));
    CHECK(d.original == doctest::Approx(1.0 / (10 * kRoot2m1)));
    CHECK(d.original == doctest::Approx(0.24142).epsilon(1e-4));
    CHECK(d.check == doctest::Approx(1.0 / (10 - 10 * kRoot2m1)));
    CHECK(d.check == doctest::Approx(0.17071).epsilon(1e-4));

    d = densities(Task::make(0, 5, 10, TaskClass::DoubleCheck));
    CHECK(d.original == 1.0);
    CHECK(d.check == 1.0);

    // Infeasible densities are legal outputs.
    d = densities(Task::make(0, 8, 10, TaskClass::DoubleCheck));
    CHECK(d.original == doctest::Approx(1.6));
    CHECK_THROWS_AS(densities(Task::make(0, 1, 10)), InvalidArgument);
}

TEST_CASE("virtual-deadline oracle")
{
    CHECK(std::abs(optimal_virtual_deadline_oracle(TaskClass::DoubleCheck, 1, 10, 100000) - 5.0) <= 10.0 / 1e5);
    CHECK(std::abs(optimal_virtual_deadline_oracle(TaskClass::TripleCheck, 1, 10, 100000) - 4.1421356) <= 10.0 / 1e5);
    // C factors out of the objective.
    CHECK(optimal_virtual_deadline_oracle(TaskClass::DoubleCheck, 0.3, 10, 1000) ==
          optimal_virtual_deadline_oracle(TaskClass::DoubleCheck, 7, 10, 1000));
    CHECK_THROWS_AS(optimal_virtual_deadline_oracle(TaskClass::DoubleCheck, 1, 10, 1), InvalidArgument);
}

TEST_CASE("property: the closed-form virtual deadline minimizes total density on a grid")
{
    Rng rng(11);
    for (int i = 0; i < 200; ++i)
    {
        const double d = rng.uniform(1, 1000);
        const double c = rng.uniform(0.01, 1) * d;
        for (auto cls : {TaskClass::DoubleCheck, TaskClass::TripleCheck})
        {
            const Task t{0, c, d, d, cls};
            const double best = objective(cls, c, d, virtual_deadline(t));
            for (int j = 1; j < 200; ++j)
                REQUIRE(best <= objective(cls, c, d, d * j / 200.0) * (1 + 1e-12));
        }
    }
}

TEST_CASE("split_task")
{
    auto e = split_task(Task::make(3, 1, 4));
    REQUIRE(e.size() == 1);
    CHECK(e[0].role == Role::Original);
    CHECK(e[0].task_id == 3);
    CHECK(e[0].density == doctest::Approx(0.25));
    CHECK(e[0].rel_deadline == 4);
    CHECK(e[0].release_offset == 0);

    e = split_task(Task::make(0, 1, 4, TaskClass::DoubleCheck), 10);
    REQUIRE(e.size() == 2);
    CHECK(e[0].entity_id == 10);
    CHECK(e[1].entity_id == 11);
    CHECK(e[0].density == doctest::Approx(0.5));
    CHECK(e[1].density == doctest::Approx(0.5));
    CHECK(e[0].rel_deadline == 2);
    CHECK(e[1].release_offset == 2);
    CHECK(e[1].rel_deadline == 4);
    CHECK(e[1].role == Role::Check1);

    e = split_task(Task::make(0, 1, 10, TaskClass::TripleCheck));
    REQUIRE(e.size() == 3);
    CHECK(e[1].release_offset == doctest::Approx(10 * kRoot2m1));
    CHECK(e[2].release_offset == doctest::Approx(10 * kRoot2m1));
    CHECK(e[2].role == Role::Check2);
    CHECK(e[2].density == e[1].density);
}

TEST_CASE("property: split_task conserves work and honours entity invariants")
{
    GenConfig g;
    g.n = 200;
    g.util = 20;
    g.alpha = 0.3;
    g.beta = 0.3;
    g.seed = 5;
    const TaskSet ts = generate_taskset(g);
    const auto all = split_taskset(ts);
    int expected_id = 0;
    std::size_t pos = 0;
    for (const auto& t : ts.tasks)
    {
        const auto ents = split_task(t);
        double work = 0;
        for (const auto& e : ents)
        {
            work += e.exec;
            CHECK(all[pos].entity_id == expected_id++);
            CHECK(all[pos].task_id == t.id);
            ++pos;
            if (e.role == Role::Original)
            {
                CHECK(e.release_offset == 0);
                CHECK(e.density == doctest::Approx(e.exec / (e.rel_deadline - e.release_offset)));
            }
            else
                CHECK(e.density == doctest::Approx(e.exec / (t.deadline - virtual_deadline(t))));
            if (e.role == Role::Check2) CHECK(t.cls == TaskClass::TripleCheck);
        }
        CHECK(work == doctest::Approx(t.wcet * (1 + check_count(t.cls))));
    }
    CHECK(pos == all.size());
}

TEST_CASE("density test")
{
    CHECK(density_test(std::vector<double>{0, 0, 0}));
    CHECK(density_test(std::vector<double>{1.0}));
    CHECK(density_test(std::vector<double>{1.0 + 1e-10}));
    CHECK_FALSE(density_test(std::vector<double>{0.9, 1.2}));
    CHECK_FALSE(density_test(std::vector<double>{1.0 + 1e-8}));
}
