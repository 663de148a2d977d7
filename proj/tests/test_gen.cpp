#include "flexstep/gen.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace flexstep;

namespace
{
    double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }
}

TEST_CASE("rng is xorshift64* seeded through splitmix64")
{
    // Reference values computed by hand from the published recurrences.
    std::uint64_t s = 0;
    const std::uint64_t seeded = splitmix64(s);
    CHECK(seeded == 0xE220A8397B1DCDAFULL);
    std::uint64_t x = seeded;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    Rng rng(0);
    CHECK(rng.next() == x * 0x2545F4914F6CDD1DULL);

    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng u(5);
    for (int i = 0; i < 10000; ++i)
    {
        const double v = u.uniform_open();
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
        REQUIRE(u.below(7) < 7);
    }
}

TEST_CASE("uunifast examples")
{
    Rng rng(1);
    const auto one = uunifast(1, 0.7, rng);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == 0.7);

    const auto four = uunifast(4, 2.0, rng);
    REQUIRE(four.size() == 4);
    CHECK(std::all_of(four.begin(), four.end(), [](double u) { return u > 0; }));
    CHECK(std::abs(sum(four) - 2.0) <= 1e-9);

    Rng r42(42);
    const auto big = uunifast_discard(160, 4.0, r42);
    REQUIRE(big.size() == 160);
    CHECK(std::all_of(big.begin(), big.end(), [](double u) { return u > 0 && u < 1; }));
    CHECK(std::abs(sum(big) - 4.0) <= 1e-9);
}

TEST_CASE("uunifast errors")
{
    Rng rng(1);
    CHECK_THROWS_AS(uunifast(0, 1.0, rng), InvalidArgument);
    CHECK_THROWS_AS(uunifast(3, 0.0, rng), InvalidArgument);
    // Two tasks cannot share a utilization of 2 with both below 1.
    CHECK_THROWS_AS(uunifast_discard(2, 2.0, rng), GenerationFailure);
}

TEST_CASE("uunifast marginal matches the uniform-simplex distribution")
{
    // For n=2, u_1 is uniform on (0, U): its mean is U/2 and variance U^2/12.
    Rng rng(77);
    const int draws = 20000;
    double m1 = 0, m2 = 0;
    for (int i = 0; i < draws; ++i)
    {
        const double u = uunifast(2, 1.0, rng)[0];
        m1 += u;
        m2 += u * u;
    }
    m1 /= draws;
    m2 = m2 / draws - m1 * m1;
    CHECK(m1 == doctest::Approx(0.5).epsilon(0.02));
    CHECK(m2 == doctest::Approx(1.0 / 12).epsilon(0.05));
}

TEST_CASE("generate_taskset class counts")
{
    GenConfig g;
    g.n = 160;
    g.m = 8;
    g.util = 4.0;
    g.alpha = 0.0625;
    g.beta = 0.0625;
    const TaskSet a = generate_taskset(g);
    CHECK(a.count(TaskClass::DoubleCheck) == 10);
    CHECK(a.count(TaskClass::TripleCheck) == 10);
    CHECK(a.count(TaskClass::NonVerify) == 140);

    g.alpha = 0.25;
    g.beta = 0.0;
    const TaskSet b = generate_taskset(g);
    CHECK(b.count(TaskClass::DoubleCheck) == 40);
    CHECK(b.count(TaskClass::TripleCheck) == 0);
}

TEST_CASE("generate_taskset is deterministic")
{
    GenConfig g;
    g.n = 2;
    g.util = 1.0;
    g.seed = 7;
    CHECK(serialize_taskset(generate_taskset(g)) == serialize_taskset(generate_taskset(g)));
    GenConfig h = g;
    h.seed = 8;
    CHECK(serialize_taskset(generate_taskset(g)) != serialize_taskset(generate_taskset(h)));
}

TEST_CASE("generate_taskset rejects invalid configurations")
{
    GenConfig g;
    g.alpha = 0.7;
    g.beta = 0.5;
    CHECK_THROWS_AS(generate_taskset(g), InvalidArgument);
    g = {};
    g.period_min = 100;
    g.period_max = 10;
    CHECK_THROWS_AS(generate_taskset(g), InvalidArgument);
    g = {};
    g.n = 0;
    CHECK_THROWS_AS(generate_taskset(g), InvalidArgument);
    g = {};
    g.n = 3;
    g.util = 3.5;
    CHECK_THROWS_AS(generate_taskset(g), GenerationFailure);
}

TEST_CASE("property: generated sets meet the generator contract")
{
    for (std::uint64_t seed = 1; seed <= 300; ++seed)
    {
        GenConfig g;
        g.n = 1 + static_cast<int>(seed % 50);
        g.util = std::min(0.1 + static_cast<double>(seed % 17) * 0.4, 0.5 * g.n);
        g.alpha = static_cast<double>(seed % 5) * 0.1;
        g.beta = static_cast<double>(seed % 3) * 0.1;
        g.seed = seed;
        const TaskSet ts = generate_taskset(g);
        REQUIRE(ts.tasks.size() == static_cast<std::size_t>(g.n));
        CHECK(std::abs(ts.total_utilization() - g.util) <= 1e-9);
        CHECK(ts.count(TaskClass::DoubleCheck) == static_cast<std::size_t>(std::floor(g.alpha * g.n + 1e-9)));
        CHECK(ts.count(TaskClass::TripleCheck) == static_cast<std::size_t>(std::floor(g.beta * g.n + 1e-9)));
        for (std::size_t i = 0; i < ts.tasks.size(); ++i)
        {
            const Task& t = ts.tasks[i];
            CHECK(t.id == static_cast<int>(i));
            CHECK(t.period >= g.period_min);
            CHECK(t.period <= g.period_max);
            CHECK(t.deadline == t.period);
            CHECK(task_utilization(t) < 1.0);
            CHECK(t.wcet > 0);
        }
    }
}

TEST_CASE("periods are log-uniform")
{
    // A log-uniform law on [10, 1000] puts half its mass below 100.
    GenConfig g;
    g.n = 1000;
    g.util = 10;
    g.seed = 3;
    const TaskSet ts = generate_taskset(g);
    int below_100 = 0;
    for (const auto& t : ts.tasks) below_100 += t.period < 100;
    CHECK(below_100 == doctest::Approx(500).epsilon(0.1));
}
