#include "permafuse/common.hpp"
#include "permafuse/geometry.hpp"

#include <doctest.h>

#include "test_util.hpp"

#include <cmath>

using namespace permafuse;
using namespace permafuse::domain;

TEST_CASE("lattice is row-major with the stated spacing") {
    const GridPtr g = build_grid(Rect{0.0, 100.0, 0.0, 100.0}, 50.0);
    REQUIRE(g->size() == 9);
    CHECK(g->point(0).x == 0.0);
    CHECK(g->point(0).y == 0.0);
    CHECK(g->point(1).x == 50.0);
    CHECK(g->point(1).y == 0.0);
    CHECK(g->point(3).x == 0.0);
    CHECK(g->point(3).y == 50.0);
    CHECK(g->point(8).x == 100.0);
    CHECK(g->point(8).y == 100.0);
    CHECK(g->spacing() == 50.0);
    CHECK(g->bounds().xmax == 100.0);
}

TEST_CASE("non-divisible extent keeps points inside the bounds") {
    const GridPtr g = build_grid(Rect{0.0, 110.0, 0.0, 40.0}, 50.0);
    for (const Point2& p : g->points()) {
        CHECK(p.x <= 110.0);
        CHECK(p.y <= 40.0);
    }
    REQUIRE(g->size() == 3 * 1);
}

TEST_CASE("degenerate bounds raise an error") {
    CHECK_THROWS_WITH_AS(build_grid(Rect{0.0, -1.0, 0.0, 10.0}, 5.0),
                         "empty grid", InputError);
    CHECK_THROWS_AS(build_grid(Rect{0.0, 10.0, 0.0, 10.0}, 0.0), InputError);
}

TEST_CASE("polygon membership uses the even-odd rule") {
    const Polygon square{{{0, 0}, {10, 0}, {10, 10}, {0, 10}}};
    CHECK(square.contains({5, 5}));
    CHECK_FALSE(square.contains({15, 5}));
    CHECK_FALSE(square.contains({-1, -1}));

    // concave: a notch cut out of the right side
    const Polygon notched{{{0, 0}, {10, 0}, {10, 4}, {5, 5}, {10, 6}, {0, 10}}};
    CHECK(notched.contains({2, 5}));
    CHECK_FALSE(notched.contains({9, 5}));
}

TEST_CASE("boundary clipping removes outside points") {
    const Polygon tri{{{0, 0}, {100, 0}, {0, 100}}};
    const GridPtr clipped = build_grid(Rect{0, 100, 0, 100}, 25.0, tri);
    const GridPtr full = build_grid(Rect{0, 100, 0, 100}, 25.0);
    CHECK(clipped->size() < full->size());
    for (const Point2& p : clipped->points()) CHECK(tri.contains(p));

    const Polygon far_away{{{500, 500}, {510, 500}, {505, 510}}};
    CHECK_THROWS_WITH_AS(build_grid(Rect{0, 100, 0, 100}, 25.0, far_away),
                         "empty grid", InputError);
}

TEST_CASE("grid serialization round-trips and is byte-stable") {
    testutil::TempDir tmp("geometry");
    const Polygon tri{{{0, 0}, {100, 0}, {0, 100}}};
    const GridPtr g = build_grid(Rect{0, 100.5, 0, 99.25}, 24.75, tri);

    const std::string p1 = tmp.file("grid.json");
    save_grid(*g, p1);
    const GridPtr back = load_grid(p1);

    REQUIRE(back->size() == g->size());
    for (std::size_t i = 0; i < g->size(); ++i) {
        CHECK(back->point(i).x == g->point(i).x);
        CHECK(back->point(i).y == g->point(i).y);
    }
    CHECK(back->spacing() == g->spacing());
    CHECK(back->bounds().xmin == g->bounds().xmin);
    CHECK(back->bounds().ymax == g->bounds().ymax);
    REQUIRE(back->boundary().has_value());
    CHECK(back->boundary()->vertices.size() == 3);

    const std::string p2 = tmp.file("grid2.json");
    save_grid(*back, p2);
    CHECK(testutil::slurp(p1) == testutil::slurp(p2));
}

TEST_CASE("map serialization preserves values exactly") {
    testutil::TempDir tmp("maps");
    const GridPtr g = build_grid(Rect{0, 100, 0, 100}, 50.0);
    std::vector<double> vals;
    for (std::size_t i = 0; i < g->size(); ++i)
        vals.push_back(0.1 * static_cast<double>(i) - 1.23456789012345e-3);
    const GridMap m(g, vals, MapKind::Permeability);

    const std::string p1 = tmp.file("map.csv");
    save_map(m, p1);
    const GridMap back = load_map(p1, g, MapKind::Permeability);
    REQUIRE(back.size() == m.size());
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(back.value(i) == m.value(i));
    CHECK(back.kind() == MapKind::Permeability);

    const std::string p2 = tmp.file("map2.csv");
    save_map(back, p2);
    CHECK(testutil::slurp(p1) == testutil::slurp(p2));
}

TEST_CASE("loading a map against the wrong grid fails") {
    testutil::TempDir tmp("mapgrid");
    const GridPtr g = build_grid(Rect{0, 100, 0, 100}, 50.0);
    const GridPtr other = build_grid(Rect{0, 100, 0, 100}, 25.0);
    const GridMap m(g, std::vector<double>(g->size(), 1.0), MapKind::Confidence);
    save_map(m, tmp.file("m.csv"));
    CHECK_THROWS_AS(load_map(tmp.file("m.csv"), other, MapKind::Confidence),
                    InputError);

    const GridPtr shifted = build_grid(Rect{1, 101, 0, 100}, 50.0);
    CHECK_THROWS_AS(load_map(tmp.file("m.csv"), shifted, MapKind::Confidence),
                    InputError);
}

TEST_CASE("map construction checks the value count") {
    const GridPtr g = build_grid(Rect{0, 100, 0, 100}, 50.0);
    CHECK_THROWS_AS(GridMap(g, std::vector<double>(3, 0.0), MapKind::Confidence),
                    InputError);
}

TEST_CASE("distance is Euclidean") {
    CHECK(distance({0, 0}, {3, 4}) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(distance({1, 1}, {1, 1}) == 0.0);
}
