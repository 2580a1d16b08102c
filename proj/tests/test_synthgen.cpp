#include "permafuse/synthgen.hpp"

#include "permafuse/common.hpp"
#include "permafuse/cubes.hpp"
#include "permafuse/fusion.hpp"

#include <doctest.h>

#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

using namespace permafuse;
using namespace permafuse::synthgen;

namespace {

SynthConfig small_config() {
    SynthConfig c;
    c.nx = 24;
    c.ny = 24;
    c.well_count = 10;
    c.seed = 7;
    return c;
}

double mean_of(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return m / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    return std::sqrt(var / static_cast<double>(v.size()));
}

std::size_t grid_index_of(const domain::Grid& grid, const domain::Point2& p) {
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.point(i).x == p.x && grid.point(i).y == p.y) return i;
    FAIL("well location is not a grid point");
    return 0;
}

} // namespace

TEST_CASE("config validation rejects unusable settings") {
    CHECK_NOTHROW(SynthConfig{}.validate());

    SynthConfig c;
    c.nx = 1;
    CHECK_THROWS_WITH_AS(c.validate(), "grid must be at least 2x2", InputError);

    c = SynthConfig{};
    c.spacing = 0.0;
    CHECK_THROWS_WITH_AS(c.validate(), "spacing must be positive", InputError);

    c = SynthConfig{};
    c.well_count = 2;
    CHECK_THROWS_WITH_AS(c.validate(), "well count must be at least 3",
                         InputError);

    c = SynthConfig{};
    c.well_margin_frac = 0.5;
    CHECK_THROWS_WITH_AS(c.validate(),
                         "well margin fraction must be in [0, 0.5)", InputError);

    c = SynthConfig{};
    c.wl_bias = 0.0;
    CHECK_THROWS_WITH_AS(c.validate(), "wl_bias must be positive", InputError);

    c = SynthConfig{};
    c.wt_radius = 0.0;
    CHECK_THROWS_WITH_AS(c.validate(), "wt_radius must be positive", InputError);

    c = SynthConfig{};
    c.seismic_noise = -0.1;
    CHECK_THROWS_WITH_AS(c.validate(), "noise levels must be non-negative",
                         InputError);
}

TEST_CASE("the synthetic grid is a full lattice from the origin") {
    const SynthConfig c = small_config();
    const domain::GridPtr grid = make_grid(c);
    CHECK(grid->size() == c.nx * c.ny);
    CHECK(grid->spacing() == c.spacing);
    CHECK(grid->bounds().xmax == 23 * 50.0);
    CHECK(grid->point(0).x == 0.0);
    CHECK(grid->point(0).y == 0.0);
    CHECK(grid->point(1).x == 50.0);
    CHECK(grid->point(c.nx).y == 50.0);
}

TEST_CASE("the truth field hits the requested moments exactly") {
    const SynthConfig c = small_config();
    const domain::GridMap truth = generate_field(c);
    REQUIRE(truth.size() == c.nx * c.ny);
    CHECK(truth.kind() == domain::MapKind::Permeability);
    CHECK(mean_of(truth.values()) == doctest::Approx(c.log_mean).epsilon(1e-9));
    CHECK(sd_of(truth.values()) == doctest::Approx(c.log_sd).epsilon(1e-9));
}

TEST_CASE("the truth field is seed-deterministic") {
    const SynthConfig c = small_config();
    CHECK(generate_field(c).values() == generate_field(c).values());

    SynthConfig c2 = c;
    c2.seed = 8;
    CHECK(generate_field(c).values() != generate_field(c2).values());
}

TEST_CASE("the truth field is spatially correlated") {
    SynthConfig c = small_config();
    c.nx = 40;
    c.ny = 40;
    const domain::GridMap truth = generate_field(c);

    double near = 0.0, far = 0.0;
    std::size_t nn = 0, nf = 0;
    for (std::size_t j = 0; j < c.ny; ++j)
        for (std::size_t i = 0; i + 1 < c.nx; ++i) {
            near += std::fabs(truth.value(j * c.nx + i + 1) -
                              truth.value(j * c.nx + i));
            ++nn;
        }
    for (std::size_t j = 0; j < c.ny; ++j)
        for (std::size_t i = 0; i + 20 < c.nx; ++i) {
            far += std::fabs(truth.value(j * c.nx + i + 20) -
                             truth.value(j * c.nx + i));
            ++nf;
        }
    CHECK(near / static_cast<double>(nn) < 0.5 * far / static_cast<double>(nf));
}

TEST_CASE("a zero-sd config produces a flat field") {
    SynthConfig c = small_config();
    c.log_sd = 0.0;
    const domain::GridMap truth = generate_field(c);
    for (double v : truth.values()) CHECK(v == c.log_mean);
}

TEST_CASE("wells sit on distinct grid points inside the margin box") {
    const SynthConfig c = small_config();
    const domain::GridMap truth = generate_field(c);
    const std::vector<ingest::WellRecord> wells = sample_wells(truth, c);
    REQUIRE(wells.size() == c.well_count);

    const domain::Rect& b = truth.grid().bounds();
    const double mx = c.well_margin_frac * (b.xmax - b.xmin);
    const double my = c.well_margin_frac * (b.ymax - b.ymin);

    std::set<std::pair<double, double>> seen;
    std::set<std::string> ids;
    for (const auto& w : wells) {
        ids.insert(w.id);
        seen.insert({w.location.x, w.location.y});
        grid_index_of(truth.grid(), w.location);
        CHECK(w.location.x >= b.xmin + mx);
        CHECK(w.location.x <= b.xmax - mx);
        CHECK(w.location.y >= b.ymin + my);
        CHECK(w.location.y <= b.ymax - my);
        REQUIRE(w.s_w.has_value());
        CHECK(*w.s_w >= 0.2);
        CHECK(*w.s_w <= 0.8);
        CHECK(w.k_wl.has_value());
        CHECK(w.k_wt_effective.has_value());
        CHECK(w.k_wt_absolute.has_value());
        CHECK_FALSE(w.k_wl_qq.has_value());
    }
    CHECK(seen.size() == wells.size());
    CHECK(ids.size() == wells.size());
    CHECK(wells.front().id == "W01");
    CHECK(std::is_sorted(wells.begin(), wells.end(),
                         [](const auto& a, const auto& b2) {
                             return a.id < b2.id;
                         }));
}

TEST_CASE("the effective value is the absolute value times total mobility") {
    const SynthConfig c = small_config();
    const domain::GridMap truth = generate_field(c);
    const ingest::RelPermTable table = relperm_table();
    const ingest::FluidProps fluids = fluid_props();

    for (const auto& w : sample_wells(truth, c)) {
        const ingest::KrPair kr = ingest::interp_relperm(table, *w.s_w);
        const double mobility = kr.kr_o / fluids.mu_o + kr.kr_w / fluids.mu_w;
        CHECK(*w.k_wt_effective == *w.k_wt_absolute * fluids.mu_liq * mobility);
        CHECK(ingest::effective_to_absolute(*w.k_wt_effective, *w.s_w, fluids,
                                            table) ==
              doctest::Approx(*w.k_wt_absolute).epsilon(1e-12));
    }
}

TEST_CASE("without scatter the well values reduce to closed forms") {
    SynthConfig c = small_config();
    c.wl_scatter = 0.0;
    c.wt_scatter = 0.0;
    const domain::GridMap truth = generate_field(c);

    for (const auto& w : sample_wells(truth, c)) {
        const double stw =
            fusion::synthetic_well_test(truth, w.location, c.wt_radius);
        CHECK(*w.k_wt_absolute == std::pow(10.0, stw));

        const double t = truth.value(grid_index_of(truth.grid(), w.location));
        const double wl_log = c.wl_log_gain * (t - c.log_mean) + c.log_mean +
                              std::log10(c.wl_bias);
        CHECK(*w.k_wl == std::pow(10.0, wl_log));
    }
}

TEST_CASE("a tiny drainage radius collapses the well test to the truth") {
    SynthConfig c = small_config();
    c.wt_scatter = 0.0;
    c.wt_radius = 0.5;
    const domain::GridMap truth = generate_field(c);
    for (const auto& w : sample_wells(truth, c)) {
        const double t = truth.value(grid_index_of(truth.grid(), w.location));
        CHECK(std::log10(*w.k_wt_absolute) == doctest::Approx(t).epsilon(1e-9));
    }
}

TEST_CASE("an overfilled margin box is reported") {
    SynthConfig c;
    c.nx = 6;
    c.ny = 6;
    c.well_count = 50;
    const domain::GridMap truth = generate_field(c);
    CHECK_THROWS_WITH_AS(sample_wells(truth, c),
                         "margin box holds fewer grid points than wells",
                         InputError);
}

TEST_CASE("the synthetic volume covers the grid with room for cubes") {
    const SynthConfig c = small_config();
    const domain::GridMap truth = generate_field(c);
    const ingest::SeismicVolume vol = synthesize_seismic(truth, c);

    CHECK(vol.ni == 2 * (c.nx - 1) + 1 + 8);
    CHECK(vol.nx == 2 * (c.ny - 1) + 1 + 8);
    CHECK(vol.nz == 46);
    CHECK(vol.dx == c.spacing / 2.0);
    CHECK(vol.origin_x == -4.0 * vol.dx);
    CHECK(vol.horizon_at(333.3, 512.7) == 22.5);

    for (std::size_t i = 0; i < truth.grid().size(); ++i) {
        const seismic::RmsCube cube =
            seismic::extract_cube(vol, truth.grid().point(i));
        CHECK(cube.cz == 22.5);
    }
}

TEST_CASE("noise-free amplitudes are a monotone image of the truth") {
    SynthConfig c = small_config();
    c.seismic_noise = 0.0;
    const domain::GridMap truth = generate_field(c);
    const ingest::SeismicVolume vol = synthesize_seismic(truth, c);

    for (std::size_t gi = 0; gi < truth.grid().size(); ++gi) {
        const std::size_t ix = gi % c.nx, iy = gi / c.nx;
        const std::size_t ti = 4 + 2 * ix, tj = 4 + 2 * iy;
        const double t = truth.value(gi);
        const float want = static_cast<float>(
            1.0 / (1.0 + std::exp(-(t - c.log_mean) / c.log_sd)));
        CHECK(vol.at(ti, tj, 0) == want);
        CHECK(vol.at(ti, tj, 23) == want); // constant down the trace
        CHECK(vol.at(ti, tj, 45) == want);
    }
}

TEST_CASE("amplitude noise perturbs the traces but stays bounded") {
    const SynthConfig c = small_config(); // noise 0.02
    SynthConfig clean = c;
    clean.seismic_noise = 0.0;
    const domain::GridMap truth = generate_field(c);
    const ingest::SeismicVolume noisy = synthesize_seismic(truth, c);
    const ingest::SeismicVolume flat = synthesize_seismic(truth, clean);

    REQUIRE(noisy.data.size() == flat.data.size());
    CHECK(noisy.data != flat.data);
    double worst = 0.0;
    for (std::size_t i = 0; i < noisy.data.size(); ++i)
        worst = std::max(worst, std::fabs(static_cast<double>(noisy.data[i]) -
                                          static_cast<double>(flat.data[i])));
    CHECK(worst > 0.0);
    CHECK(worst < 0.5);
}

TEST_CASE("emit_dataset writes a loadable, reproducible bundle") {
    testutil::TempDir tmp("synth");
    const SynthConfig c = small_config();
    emit_dataset(c, tmp.path());

    for (const char* name :
         {"grid.json", "truth_map.csv", "wells.csv", "relperm.csv",
          "fluids.json", "seismic.bin", "horizon.csv", "synth.json"})
        CHECK(std::filesystem::exists(tmp.file(name)));

    const domain::GridPtr grid = domain::load_grid(tmp.file("grid.json"));
    CHECK(grid->size() == c.nx * c.ny);
    const domain::GridMap truth = domain::load_map(
        tmp.file("truth_map.csv"), grid, domain::MapKind::Permeability);
    CHECK(truth.values() == generate_field(c).values());

    const auto wells = ingest::parse_wells(tmp.file("wells.csv"));
    REQUIRE(wells.size() == c.well_count);
    for (const auto& w : wells) {
        CHECK(w.k_wl.has_value());
        CHECK(w.k_wt_effective.has_value());
        CHECK_FALSE(w.k_wt_absolute.has_value()); // derived downstream
        CHECK_FALSE(w.k_wl_qq.has_value());
        CHECK(w.s_w.has_value());
    }

    const ingest::RelPermTable table =
        ingest::load_relperm(tmp.file("relperm.csv"), "default");
    CHECK(table.rows.size() == 21);
    const ingest::FluidProps fluids = ingest::load_fluids(tmp.file("fluids.json"));
    CHECK(fluids.mu_o == 5.0);
    CHECK(fluids.mu_w == 0.5);

    const ingest::SeismicVolume vol =
        ingest::load_seismic(tmp.file("seismic.bin"), tmp.file("horizon.csv"));
    const ingest::SeismicVolume direct =
        synthesize_seismic(generate_field(c), c);
    CHECK(vol.ni == direct.ni);
    CHECK(vol.data == direct.data);
    CHECK(vol.horizon == direct.horizon);

    const SynthConfig back = load_synth_config(tmp.file("synth.json"));
    CHECK(back.nx == c.nx);
    CHECK(back.ny == c.ny);
    CHECK(back.spacing == c.spacing);
    CHECK(back.well_count == c.well_count);
    CHECK(back.seed == c.seed);
    CHECK(back.wl_bias == c.wl_bias);
    CHECK(back.seismic_noise == c.seismic_noise);
}
