#include "permafuse/common.hpp"
#include "permafuse/diffevo.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace permafuse;
using namespace permafuse::domain;
using namespace permafuse::optimize;

namespace {

double sphere(const std::vector<double>& x, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += (x[i] - c[i]) * (x[i] - c[i]);
    return s;
}

DEConfig quick(int pop, int gens, std::uint64_t seed = 1) {
    DEConfig cfg;
    cfg.population = pop;
    cfg.generations = gens;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("a shifted sphere is minimized to high precision") {
    const std::vector<double> c{0.3, -1.2, 2.5};
    const std::vector<double> lower(3, -5.0), upper(3, 5.0);
    const auto obj = [&](const std::vector<double>& x) { return sphere(x, c); };
    const DEResult r = differential_evolution(obj, lower, upper, quick(25, 150));
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(r.best[i] == doctest::Approx(c[i]).epsilon(1e-4));
    CHECK(r.best_f < 1e-6);
    CHECK(r.failed_evals == 0);
}

TEST_CASE("Rosenbrock's valley is followed to its minimum") {
    const auto obj = [](const std::vector<double>& x) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
    };
    const DEResult r = differential_evolution(obj, {-2.0, -2.0}, {2.0, 2.0},
                                              quick(30, 300));
    CHECK(r.best[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.best[1] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("history starts after initialization and never increases") {
    const std::vector<double> c{0.0, 0.0};
    const auto obj = [&](const std::vector<double>& x) { return sphere(x, c); };
    const DEResult r = differential_evolution(obj, {-1, -1}, {1, 1}, quick(10, 40));
    REQUIRE(r.history.size() == 41);
    for (std::size_t i = 1; i < r.history.size(); ++i)
        CHECK(r.history[i] <= r.history[i - 1]);
    CHECK(r.history.back() == r.best_f);
}

TEST_CASE("every evaluated candidate respects the bounds") {
    const std::vector<double> lower{0.0, 10.0}, upper{1.0, 12.0};
    const auto obj = [&](const std::vector<double>& x) {
        REQUIRE(x.size() == 2);
        CHECK(x[0] >= 0.0);
        CHECK(x[0] <= 1.0);
        CHECK(x[1] >= 10.0);
        CHECK(x[1] <= 12.0);
        return sphere(x, {-3.0, 0.0}); // optimum outside the box
    };
    const DEResult r = differential_evolution(obj, lower, upper, quick(12, 60));
    // pressed against the boundary nearest the outside optimum
    CHECK(r.best[0] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(r.best[1] == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("the same seed reproduces the run bit for bit") {
    const auto obj = [](const std::vector<double>& x) {
        return sphere(x, {0.5, 0.5, 0.5, 0.5});
    };
    const std::vector<double> lower(4, 0.0), upper(4, 1.0);
    const DEResult a = differential_evolution(obj, lower, upper, quick(8, 30, 9));
    const DEResult b = differential_evolution(obj, lower, upper, quick(8, 30, 9));
    REQUIRE(a.best.size() == b.best.size());
    for (std::size_t i = 0; i < a.best.size(); ++i) CHECK(a.best[i] == b.best[i]);
    CHECK(a.history == b.history);

    const DEResult other = differential_evolution(obj, lower, upper, quick(8, 30, 10));
    CHECK(a.best_f != other.best_f);
}

TEST_CASE("throwing evaluations are counted and skipped") {
    const auto obj = [](const std::vector<double>& x) {
        if (x[0] < 0.5) throw NumericError("left half is poison");
        return (x[0] - 0.75) * (x[0] - 0.75);
    };
    const DEResult r = differential_evolution(obj, {0.0}, {1.0}, quick(16, 60));
    CHECK(r.failed_evals > 0);
    CHECK(r.best[0] == doctest::Approx(0.75).epsilon(1e-5));
}

TEST_CASE("a fully failing initial population rethrows the first error") {
    const auto obj = [](const std::vector<double>&) -> double {
        throw NumericError("nothing is feasible");
    };
    CHECK_THROWS_WITH_AS(
        differential_evolution(obj, {0.0}, {1.0}, quick(6, 10)),
        "nothing is feasible", NumericError);
}

TEST_CASE("a warm start at the optimum is kept from generation zero") {
    const std::vector<double> c{0.25, -0.5, 0.75};
    const auto obj = [&](const std::vector<double>& x) { return sphere(x, c); };
    DEConfig cfg = quick(10, 5);
    cfg.x0 = c;
    const DEResult r = differential_evolution(obj, {-1, -1, -1}, {1, 1, 1}, cfg);
    CHECK(r.history[0] == 0.0);
    CHECK(r.best_f == 0.0);
}

TEST_CASE("a warm start outside the bounds is clamped in") {
    const auto obj = [](const std::vector<double>& x) {
        return sphere(x, {0.0, 0.0});
    };
    DEConfig cfg = quick(10, 2);
    cfg.x0 = {5.0, -5.0};
    const DEResult r = differential_evolution(obj, {-1, -1}, {1, 1}, cfg);
    CHECK(r.history[0] <= 2.0 + 1e-12);

    cfg.x0 = {1.0, 2.0, 3.0};
    CHECK_THROWS_WITH_AS(differential_evolution(obj, {-1, -1}, {1, 1}, cfg),
                         doctest::Contains("warm start has wrong dimension"),
                         InputError);
}

TEST_CASE("configuration and bounds are validated") {
    const auto obj = [](const std::vector<double>& x) { return x[0] * x[0]; };
    DEConfig bad = quick(3, 10);
    CHECK_THROWS_AS(differential_evolution(obj, {0.0}, {1.0}, bad), InputError);

    bad = quick(10, 10);
    bad.crossover = 1.5;
    CHECK_THROWS_AS(differential_evolution(obj, {0.0}, {1.0}, bad), InputError);

    CHECK_THROWS_AS(
        differential_evolution(obj, {1.0}, {0.0}, quick(10, 10)), InputError);
    CHECK_THROWS_AS(
        differential_evolution(obj, {0.0, 0.0}, {1.0}, quick(10, 10)), InputError);
}

TEST_CASE("kernel parameters pack and unpack consistently") {
    KernelParams p;
    p.r_d = 150.0;
    p.r_g = 30.0;
    p.alpha = 0.8;
    p.beta = 1.7;
    p.gamma = 0.9;
    p.delta = 0.3;
    p.w_s = 0.45;

    const auto full = pack_params(p, true);
    REQUIRE(full.size() == 7);
    const KernelParams q = unpack_params(full, true);
    CHECK(q.r_d == p.r_d);
    CHECK(q.w_s == p.w_s);

    const auto six = pack_params(p, false);
    REQUIRE(six.size() == 6);
    const KernelParams q6 = unpack_params(six, false, 0.123);
    CHECK(q6.delta == p.delta);
    CHECK(q6.w_s == 0.123);

    CHECK_THROWS_AS(unpack_params({1.0, 2.0}, false), InputError);
}

TEST_CASE("default bounds carry the documented ranges") {
    const Bounds b;
    CHECK(b.r_d.lo == 100.0);
    CHECK(b.r_d.hi == 300.0);
    CHECK(b.w_s.lo == 0.1);
    CHECK(b.w_s.hi == 0.5);
    CHECK(b.lower(true).size() == 7);
    CHECK(b.lower(false).size() == 6);
    CHECK(b.upper(true)[6] == 0.5);

    Bounds bad;
    bad.alpha = {2.0, 0.5};
    CHECK_THROWS_AS(bad.validate(), InputError);
}
