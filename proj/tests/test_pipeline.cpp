#include "permafuse/pipeline.hpp"

#include "permafuse/common.hpp"
#include "permafuse/synthgen.hpp"

#include <doctest.h>
#include <json.hpp>

#include "test_util.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace permafuse;
using namespace permafuse::pipeline;

namespace {

ingest::WellRecord mk(std::string id, double x, double y) {
    ingest::WellRecord w;
    w.id = std::move(id);
    w.location = {x, y};
    return w;
}

synthgen::SynthConfig small_synth() {
    synthgen::SynthConfig c;
    c.nx = 20;
    c.ny = 20;
    c.corr_len_cells = 6.0;
    c.well_count = 12;
    c.seed = 3;
    return c;
}

RunConfig small_run_config(const testutil::TempDir& tmp,
                           const std::string& data, const std::string& out) {
    RunConfig cfg;
    cfg.paths.wells = tmp.file(data + "/wells.csv");
    cfg.paths.grid = tmp.file(data + "/grid.json");
    cfg.paths.relperm = tmp.file(data + "/relperm.csv");
    cfg.paths.fluids = tmp.file(data + "/fluids.json");
    cfg.paths.seismic = tmp.file(data + "/seismic.bin");
    cfg.paths.horizon = tmp.file(data + "/horizon.csv");
    cfg.paths.out_dir = tmp.file(out);
    cfg.de.population = 8;
    cfg.de.generations = 4;
    cfg.de.seed = 5;
    cfg.net.c1 = 2;
    cfg.net.c2 = 2;
    cfg.net.c3 = 2;
    cfg.net.d1 = 4;
    cfg.net.d2 = 3;
    cfg.train.epochs = 3;
    cfg.train.batch = 32;
    cfg.train.seed = 2;
    cfg.net_seed = 9;
    cfg.train_percentile = 0.5;
    return cfg;
}

} // namespace

TEST_CASE("run configs round-trip through their JSON form") {
    testutil::TempDir tmp("runcfg");
    RunConfig cfg;
    cfg.paths.wells = "w.csv";
    cfg.paths.grid = "g.json";
    cfg.paths.relperm = "r.csv";
    cfg.paths.fluids = "f.json";
    cfg.paths.seismic = "s.bin";
    cfg.paths.horizon = "h.csv";
    cfg.paths.out_dir = "run1";
    cfg.bounds.r_d = {120.0, 280.0};
    cfg.bounds.w_s = {0.15, 0.45};
    cfg.de.population = 9;
    cfg.de.mutation = 0.6;
    cfg.de.crossover = 0.8;
    cfg.de.generations = 7;
    cfg.de.seed = 11;
    cfg.de.c1 = 0.2;
    cfg.de.c2 = 0.05;
    cfg.de.bins = 10;
    cfg.net.c1 = 4;
    cfg.net.d2 = 8;
    cfg.train.epochs = 12;
    cfg.train.batch = 16;
    cfg.train.lr = 5e-4;
    cfg.train.val_fraction = 0.3;
    cfg.train.block_holdout = true;
    cfg.train.seed = 6;
    cfg.net_seed = 4;
    cfg.train_percentile = 0.25;
    cfg.qq_mode = QqMode::LogNormalize;
    cfg.default_s_w = 0.45;
    cfg.ablation.enabled = true;
    cfg.ablation.exclude_ids = {"W1", "W2"};
    cfg.ablation.q_lo = 0.05;
    cfg.ablation.q_hi = 0.95;
    cfg.warm_start = true;

    save_run_config(cfg, tmp.file("cfg.json"));
    const RunConfig back = load_run_config(tmp.file("cfg.json"));

    CHECK(back.paths.wells == cfg.paths.wells);
    CHECK(back.paths.out_dir == cfg.paths.out_dir);
    CHECK(back.bounds.r_d.lo == 120.0);
    CHECK(back.bounds.r_d.hi == 280.0);
    CHECK(back.bounds.w_s.lo == 0.15);
    CHECK(back.de.population == 9);
    CHECK(back.de.bins == 10);
    CHECK(back.de.c2 == 0.05);
    CHECK(back.net.c1 == 4);
    CHECK(back.net.d2 == 8);
    CHECK(back.train.epochs == 12);
    CHECK(back.train.block_holdout);
    CHECK(back.train.lr == 5e-4);
    CHECK(back.net_seed == 4);
    CHECK(back.train_percentile == 0.25);
    CHECK(back.qq_mode == QqMode::LogNormalize);
    REQUIRE(back.default_s_w.has_value());
    CHECK(*back.default_s_w == 0.45);
    CHECK(back.ablation.exclude_ids == cfg.ablation.exclude_ids);
    CHECK(back.ablation.q_lo == 0.05);
    CHECK(back.warm_start);

    CHECK(config_hash(back) == config_hash(cfg));
    RunConfig changed = cfg;
    changed.train_percentile = 0.3;
    CHECK(config_hash(changed) != config_hash(cfg));
}

TEST_CASE("a minimal config file falls back to the defaults") {
    testutil::TempDir tmp("mincfg");
    testutil::spit(tmp.file("cfg.json"), "{}\n");
    const RunConfig cfg = load_run_config(tmp.file("cfg.json"));
    CHECK(cfg.qq_mode == QqMode::MatchWellTest);
    CHECK(cfg.de.population == 30);
    CHECK(cfg.train_percentile == 0.5);
    CHECK_FALSE(cfg.default_s_w.has_value());
    CHECK_FALSE(cfg.warm_start);
    CHECK(cfg.ablation.enabled);
    CHECK(cfg.ablation.q_lo == 0.1);
}

TEST_CASE("bad config values are named in the error") {
    testutil::TempDir tmp("badcfg");
    testutil::spit(tmp.file("a.json"), "{\"qq_mode\": \"zscore\"}\n");
    CHECK_THROWS_WITH_AS(load_run_config(tmp.file("a.json")),
                         doctest::Contains("unknown qq_mode"), InputError);

    testutil::spit(tmp.file("b.json"), "{\"train_percentile\": 1.0}\n");
    CHECK_THROWS_WITH_AS(load_run_config(tmp.file("b.json")),
                         "train_percentile must be in [0, 1)", InputError);

    testutil::spit(tmp.file("c.json"), "{not json");
    CHECK_THROWS_AS(load_run_config(tmp.file("c.json")), InputError);

    CHECK_THROWS_WITH_AS(load_run_config(tmp.file("absent.json")),
                         doctest::Contains("cannot open"), InputError);
}

TEST_CASE("kernel parameter files load partially and validate") {
    testutil::TempDir tmp("kp");
    domain::KernelParams p;
    p.r_d = 222.0;
    p.gamma = 0.7;
    p.w_s = 0.2;
    save_kernel_params(p, tmp.file("p.json"));
    const domain::KernelParams back = load_kernel_params(tmp.file("p.json"));
    CHECK(back.r_d == 222.0);
    CHECK(back.gamma == 0.7);
    CHECK(back.w_s == 0.2);

    testutil::spit(tmp.file("partial.json"), "{\"r_d\": 150.0}\n");
    const domain::KernelParams part = load_kernel_params(tmp.file("partial.json"));
    CHECK(part.r_d == 150.0);
    CHECK(part.gamma == domain::KernelParams{}.gamma);

    testutil::spit(tmp.file("bad.json"), "{\"alpha\": -1.0}\n");
    CHECK_THROWS_AS(load_kernel_params(tmp.file("bad.json")), InputError);
}

TEST_CASE("bounds and DE files parse their documented shapes") {
    testutil::TempDir tmp("odf");
    testutil::spit(tmp.file("b.json"),
                   "{\"r_d\": [120, 250], \"w_s\": [0.2, 0.4]}\n");
    const optimize::Bounds b = load_bounds(tmp.file("b.json"));
    CHECK(b.r_d.lo == 120.0);
    CHECK(b.r_d.hi == 250.0);
    CHECK(b.w_s.lo == 0.2);
    CHECK(b.alpha.lo == 0.5); // untouched default

    testutil::spit(tmp.file("bad.json"), "{\"r_d\": 5}\n");
    CHECK_THROWS_WITH_AS(load_bounds(tmp.file("bad.json")),
                         doctest::Contains("must be a [lo, hi] array"),
                         InputError);

    testutil::spit(tmp.file("de.json"),
                   "{\"population\": 12, \"generations\": 7, \"seed\": 3}\n");
    const optimize::DEConfig de = load_de_config(tmp.file("de.json"));
    CHECK(de.population == 12);
    CHECK(de.generations == 7);
    CHECK(de.seed == 3);
    CHECK(de.mutation == 0.7);

    testutil::spit(tmp.file("debad.json"), "{\"population\": 2}\n");
    CHECK_THROWS_AS(load_de_config(tmp.file("debad.json")), InputError);
}

TEST_CASE("the mobility conversion fills in missing absolute values") {
    const ingest::RelPermTable table = synthgen::relperm_table();
    const ingest::FluidProps fluids = synthgen::fluid_props();

    std::vector<ingest::WellRecord> wells;
    wells.push_back(mk("W0", 0, 0));
    wells.back().k_wl = 50.0;
    wells.push_back(mk("W1", 1, 0));
    wells.back().k_wt_effective = 110.0;
    wells.back().s_w = 0.5;
    wells.push_back(mk("W2", 2, 0));
    wells.back().k_wt_effective = 110.0;
    wells.back().k_wt_absolute = 77.0;
    wells.push_back(mk("W3", 3, 0));
    wells.back().k_wt_effective = 110.0;
    wells.push_back(mk("W4", 4, 0));
    wells.back().k_wt_effective = 110.0;

    SUBCASE("with a default saturation") {
        convert_effective(wells, table, fluids, 0.5);
        CHECK_FALSE(wells[0].k_wt_absolute.has_value());
        // total mobility at s_w = 0.5 is 0.25/5 + 0.25/0.5 = 0.55
        CHECK(*wells[1].k_wt_absolute == doctest::Approx(200.0).epsilon(1e-12));
        CHECK(*wells[2].k_wt_absolute == 77.0);
        CHECK(*wells[3].k_wt_absolute == doctest::Approx(200.0).epsilon(1e-12));
        CHECK(*wells[4].k_wt_absolute == doctest::Approx(200.0).epsilon(1e-12));
    }
    SUBCASE("without one, saturation-less wells stay effective-only") {
        convert_effective(wells, table, fluids, std::nullopt);
        CHECK(*wells[1].k_wt_absolute == doctest::Approx(200.0).epsilon(1e-12));
        CHECK_FALSE(wells[3].k_wt_absolute.has_value());
        CHECK_FALSE(wells[4].k_wt_absolute.has_value());
    }
    SUBCASE("an unknown rock type is fatal") {
        wells[3].rock_type = "shale";
        CHECK_THROWS_WITH_AS(convert_effective(wells, table, fluids, 0.5),
                             "no rel-perm table for rock type \"shale\" (well "
                             "W3)",
                             InputError);
    }
}

TEST_CASE("quantile matching sends sample quantiles onto the target") {
    std::vector<ingest::WellRecord> wells;
    const double wl[] = {10.0, 100.0, 1000.0, 10000.0};
    const double wt[] = {20.0, 200.0, 2000.0, 20000.0};
    for (int i = 0; i < 4; ++i) {
        wells.push_back(mk("W" + std::to_string(i), i, 0));
        wells.back().k_wl = wl[i];
        wells.back().k_wt_absolute = wt[i];
    }
    wells.push_back(mk("W4", 4, 0)); // well-test only, no log to map
    wells.back().k_wt_absolute = 500.0;

    apply_qq(wells, QqMode::MatchWellTest);
    for (int i = 0; i < 4; ++i) {
        REQUIRE(wells[i].k_wl_qq.has_value());
        CHECK(*wells[i].k_wl_qq != *wells[i].k_wl);
    }
    CHECK_FALSE(wells[4].k_wl_qq.has_value());
    // equal sample sizes pin each source quantile to its target twin,
    // except that the extra well-test value shifts the upper quantiles
    CHECK(std::is_sorted(wells.begin(), wells.begin() + 4,
                         [](const auto& a, const auto& b) {
                             return *a.k_wl_qq < *b.k_wl_qq;
                         }));
    CHECK(*wells[0].k_wl_qq >= 20.0 * (1.0 - 1e-9));
    CHECK(*wells[3].k_wl_qq <= 20000.0 * (1.0 + 1e-9));
}

TEST_CASE("log-normalizing keeps order and spreads to the fitted moments") {
    std::vector<ingest::WellRecord> wells;
    const double wl[] = {10.0, 30.0, 100.0, 400.0, 3000.0};
    for (int i = 0; i < 5; ++i) {
        wells.push_back(mk("W" + std::to_string(i), i, 0));
        wells.back().k_wl = wl[i];
    }
    apply_qq(wells, QqMode::LogNormalize);
    for (int i = 1; i < 5; ++i)
        CHECK(*wells[i].k_wl_qq > *wells[i - 1].k_wl_qq);
}

TEST_CASE("the qq stage names what it is missing") {
    std::vector<ingest::WellRecord> wells;
    wells.push_back(mk("W1", 0, 0));
    wells.back().k_wt_absolute = 100.0;
    CHECK_THROWS_WITH_AS(apply_qq(wells, QqMode::MatchWellTest),
                         "no well-log values to transform", InputError);

    wells[0].k_wt_absolute.reset();
    wells[0].k_wl = 50.0;
    wells.push_back(mk("W2", 1, 0));
    wells.back().k_wl = 80.0;
    CHECK_THROWS_WITH_AS(apply_qq(wells, QqMode::MatchWellTest),
                         "no well-test values to match", InputError);
}

TEST_CASE("the percentage difference map is a pointwise linear-mD ratio") {
    const domain::GridPtr grid =
        domain::build_grid(domain::Rect{0, 100, 0, 100}, 50.0);
    std::vector<double> a(grid->size(), 2.0), b(grid->size(), 2.0);
    a[4] = std::log10(110.0);

    const domain::GridMap ma(grid, a, domain::MapKind::Permeability);
    const domain::GridMap mb(grid, b, domain::MapKind::Permeability);
    const domain::GridMap diff = percentage_diff_map(ma, mb);
    CHECK(diff.kind() == domain::MapKind::Difference);
    CHECK(diff.value(0) == 0.0);
    CHECK(diff.value(4) == doctest::Approx(10.0).epsilon(1e-9));

    SUBCASE("grids must match") {
        const domain::GridPtr other =
            domain::build_grid(domain::Rect{0, 100, 0, 150}, 50.0);
        const domain::GridMap mo(other,
                                 std::vector<double>(other->size(), 2.0),
                                 domain::MapKind::Permeability);
        CHECK_THROWS_WITH_AS(percentage_diff_map(ma, mo),
                             "maps are on different grids", InputError);
    }
    SUBCASE("an underflowing denominator is reported with its indices") {
        b[2] = -400.0; // 10^-400 underflows to zero
        b[5] = -400.0;
        const domain::GridMap mz(grid, b, domain::MapKind::Permeability);
        CHECK_THROWS_WITH_AS(
            percentage_diff_map(ma, mz),
            doctest::Contains("zero denominator at grid indices 2, 5"),
            NumericError);
    }
}

TEST_CASE("quantile ablation drops the extreme wells only") {
    std::vector<ingest::WellRecord> wells;
    for (int i = 0; i < 10; ++i) {
        wells.push_back(mk("W" + std::to_string(i), i, 0));
        wells.back().k_wt_absolute = std::pow(10.0, 1.0 + 0.1 * i);
    }
    CHECK(ablation_exclusions(wells, 0.1, 0.9) ==
          std::vector<std::string>{"W0", "W9"});
    CHECK(ablation_exclusions(wells, 0.0, 1.0).empty());

    SUBCASE("wells with both measurements use their mean log value") {
        std::vector<ingest::WellRecord> three;
        three.push_back(mk("W1", 0, 0));
        three.back().k_wt_absolute = 10.0; // stat 1
        three.push_back(mk("W2", 1, 0));
        three.back().k_wt_absolute = 100.0;
        three.back().k_wl = 10000.0; // stat (2 + 4) / 2 = 3
        three.push_back(mk("W3", 2, 0));
        three.back().k_wl = 100.0; // stat 2
        CHECK(ablation_exclusions(three, 0.5, 0.5) ==
              std::vector<std::string>{"W1", "W2"});
    }
    SUBCASE("bad quantiles and empty wells are rejected") {
        CHECK_THROWS_WITH_AS(ablation_exclusions(wells, 0.6, 0.4),
                             "quantiles must satisfy 0 <= q_lo <= q_hi <= 1",
                             InputError);
        wells.push_back(mk("W10", 10, 0));
        CHECK_THROWS_WITH_AS(ablation_exclusions(wells, 0.1, 0.9),
                             "well W10 has no permeability value", InputError);
        CHECK(ablation_exclusions({}, 0.1, 0.9).empty());
    }
}

TEST_CASE("stages build on each other's artifacts") {
    testutil::TempDir tmp("stages");
    synthgen::emit_dataset(small_synth(), tmp.file("data"));
    const RunConfig cfg = small_run_config(tmp, "data", "artifacts");
    const auto art = [&](const char* name) {
        return cfg.paths.out_dir + "/" + std::string(name);
    };

    SUBCASE("a stage run out of order names its producer") {
        CHECK_THROWS_WITH_AS(stage_qq(cfg), doctest::Contains("run `ingest`"),
                             InputError);
    }

    stage_ingest(cfg);
    const auto ingested = ingest::parse_wells(art("wells_ingested.csv"));
    REQUIRE(ingested.size() == 12);
    for (const auto& w : ingested) {
        CHECK(w.k_wt_absolute.has_value()); // converted on the way in
        CHECK(w.k_wl.has_value());
    }

    stage_qq(cfg);
    const auto qq = ingest::parse_wells(art("wells_qq.csv"));
    for (const auto& w : qq) CHECK(w.k_wl_qq.has_value());

    stage_optimize(cfg);
    const domain::KernelParams fitted = load_kernel_params(art("pure_params.json"));
    CHECK(fitted.r_d >= cfg.bounds.r_d.lo);
    CHECK(fitted.r_d <= cfg.bounds.r_d.hi);
    CHECK(fitted.gamma >= cfg.bounds.gamma.lo);
    const std::string hist = testutil::slurp(art("pure_history.csv"));
    CHECK(static_cast<long>(std::count(hist.begin(), hist.end(), '\n')) ==
          cfg.de.generations + 2); // header + initial + per-generation rows
    const auto metrics =
        nlohmann::json::parse(testutil::slurp(art("pure_metrics.json")));
    CHECK(metrics.at("well_count").get<int>() == 12);
    CHECK(metrics.at("f").get<double>() ==
          doctest::Approx(1.0 - metrics.at("r2").get<double>() +
                          0.1 * metrics.at("l1").get<double>() +
                          0.1 * metrics.at("l2").get<double>())
              .epsilon(1e-12));

    stage_fuse(cfg);
    const domain::GridPtr grid = domain::load_grid(cfg.paths.grid);
    const domain::GridMap pure_map = domain::load_map(
        art("pure_map.csv"), grid, domain::MapKind::Permeability);
    CHECK(pure_map.size() == grid->size());
    const std::string first_bytes = testutil::slurp(art("pure_map.csv"));
    stage_fuse(cfg); // a rerun reproduces the artifact byte for byte
    CHECK(testutil::slurp(art("pure_map.csv")) == first_bytes);

    stage_train_seismic(cfg);
    CHECK(std::filesystem::exists(art("seismic_net.ckpt")));
    const auto train_info =
        nlohmann::json::parse(testutil::slurp(art("seismic_train.json")));
    CHECK(train_info.at("sample_count").get<int>() > 0);

    stage_predict_seismic(cfg);
    const domain::GridMap seis = domain::load_map(
        art("seismic_map.csv"), grid, domain::MapKind::Permeability);
    CHECK(seis.size() == grid->size());

    stage_complete_fusion(cfg);
    const domain::KernelParams cparams =
        load_kernel_params(art("complete_params.json"));
    CHECK(cparams.w_s >= cfg.bounds.w_s.lo);
    CHECK(cparams.w_s <= cfg.bounds.w_s.hi);
    CHECK(std::filesystem::exists(art("complete_map.csv")));
    CHECK(std::filesystem::exists(art("diff_complete_vs_pure.csv")));

    SUBCASE("ablation rejects unknown ids and over-exclusion") {
        RunConfig bad = cfg;
        bad.ablation.exclude_ids = {"NOPE"};
        CHECK_THROWS_WITH_AS(stage_ablate(bad),
                             "unknown well id in exclusion list: NOPE",
                             InputError);
        bad.ablation.exclude_ids.clear();
        for (std::size_t i = 0; i + 2 < ingested.size(); ++i)
            bad.ablation.exclude_ids.push_back(ingested[i].id);
        CHECK_THROWS_WITH_AS(stage_ablate(bad),
                             "ablation leaves fewer than 3 wells (2 remain)",
                             InputError);
    }

    stage_ablate(cfg);
    const auto excluded = nlohmann::json::parse(
        testutil::slurp(art("ablation/excluded_ids.json")));
    CHECK(excluded.at("excluded").size() == 2); // quantile rule at 0.1/0.9
    for (const char* name :
         {"ablation/wells_qq.csv", "ablation/pure_params.json",
          "ablation/pure_map.csv", "ablation/diff_pure.csv",
          "ablation/seismic_map.csv", "ablation/complete_map.csv",
          "ablation/diff_complete.csv", "ablation/metrics.csv"})
        CHECK(std::filesystem::exists(art(name)));
    const std::string abl_metrics = testutil::slurp(art("ablation/metrics.csv"));
    CHECK(abl_metrics.rfind("mode,mse_all_wells,r2_all_wells,mse_ablated,"
                            "r2_ablated\n",
                            0) == 0);
    CHECK(std::count(abl_metrics.begin(), abl_metrics.end(), '\n') == 3);

    stage_report(cfg);
    for (const char* name :
         {"report/metrics.csv", "report/params.json", "report/summary.txt",
          "report/pure_map.csv", "report/complete_map.csv",
          "report/ablation_pure_map.csv"})
        CHECK(std::filesystem::exists(art(name)));
    const std::string summary = testutil::slurp(art("report/summary.txt"));
    CHECK(summary.find("permafuse run summary") != std::string::npos);
    CHECK(summary.find("wells_qq.csv") != std::string::npos);
}

TEST_CASE("report with no artifacts has nothing to say") {
    testutil::TempDir tmp("emptyrep");
    RunConfig cfg;
    cfg.paths.out_dir = tmp.file("artifacts");
    std::filesystem::create_directories(cfg.paths.out_dir);
    CHECK_THROWS_WITH_AS(stage_report(cfg), "no completed stages to report",
                         InputError);
}

TEST_CASE("run_all without seismic inputs is deterministic") {
    testutil::TempDir tmp("runall");
    synthgen::emit_dataset(small_synth(), tmp.file("data"));
    RunConfig cfg = small_run_config(tmp, "data", "artifacts");
    cfg.paths.seismic.clear();
    cfg.paths.horizon.clear();
    cfg.ablation.enabled = false;

    run_all(cfg);
    const auto art = [&](const char* name) {
        return cfg.paths.out_dir + "/" + std::string(name);
    };
    CHECK(std::filesystem::exists(art("pure_map.csv")));
    CHECK_FALSE(std::filesystem::exists(art("seismic_map.csv")));
    CHECK_FALSE(std::filesystem::exists(art("ablation")));
    const std::string summary = testutil::slurp(art("report/summary.txt"));
    const std::string map_bytes = testutil::slurp(art("pure_map.csv"));

    run_all(cfg);
    CHECK(testutil::slurp(art("report/summary.txt")) == summary);
    CHECK(testutil::slurp(art("pure_map.csv")) == map_bytes);
}
