#include "permafuse/common.hpp"
#include "permafuse/fusion.hpp"
#include "permafuse/geometry.hpp"
#include "permafuse/pipeline.hpp"
#include "permafuse/synthgen.hpp"
#include "permafuse/wells.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace permafuse;

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
};

void add_common(CLI::App* sub, CommonOpts& c) {
    sub->add_option("--config", c.config, "run configuration JSON");
    sub->add_option("--out", c.out, "artifact directory (overrides config)");
}

pipeline::RunConfig load_cfg(const CommonOpts& c) {
    pipeline::RunConfig cfg;
    if (!c.config.empty()) cfg = pipeline::load_run_config(c.config);
    if (!c.out.empty()) cfg.paths.out_dir = c.out;
    return cfg;
}

void write_history(const std::vector<double>& history, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    out << "generation,best_f\n";
    for (std::size_t g = 0; g < history.size(); ++g)
        out << g << ',' << fmt_double(history[g]) << '\n';
}

int report_error(const char* type, const char* message, int code) {
    const nlohmann::json j{
        {"error", {{"type", type}, {"message", message}}}};
    std::cerr << j.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"permeability-map data fusion toolkit"};
    app.require_subcommand(1);

    // ingest
    CommonOpts ing;
    std::string ing_wells, ing_relperm, ing_fluids;
    double ing_sw = 0.0;
    auto* c_ingest = app.add_subcommand(
        "ingest", "parse wells and convert effective to absolute permeability");
    add_common(c_ingest, ing);
    c_ingest->add_option("--wells", ing_wells, "wells CSV");
    c_ingest->add_option("--relperm", ing_relperm, "relative permeability CSV");
    c_ingest->add_option("--fluids", ing_fluids, "fluid properties JSON");
    auto* ing_sw_opt = c_ingest->add_option(
        "--default-sw", ing_sw, "water saturation for wells that lack one");
    c_ingest->callback([&] {
        pipeline::RunConfig cfg = load_cfg(ing);
        if (!ing_wells.empty()) cfg.paths.wells = ing_wells;
        if (!ing_relperm.empty()) cfg.paths.relperm = ing_relperm;
        if (!ing_fluids.empty()) cfg.paths.fluids = ing_fluids;
        if (ing_sw_opt->count()) cfg.default_s_w = ing_sw;
        pipeline::stage_ingest(cfg);
    });

    // qq-transform
    CommonOpts qq;
    std::string qq_mode, qq_wells;
    auto* c_qq = app.add_subcommand(
        "qq-transform", "quantile-map well-log permeabilities");
    add_common(c_qq, qq);
    c_qq->add_option("--mode", qq_mode, "match-welltest or log-normalize")
        ->check(CLI::IsMember({"match-welltest", "log-normalize"}));
    c_qq->add_option("--wells", qq_wells,
                     "transform this wells CSV instead of the ingest artifact");
    c_qq->callback([&] {
        pipeline::RunConfig cfg = load_cfg(qq);
        if (qq_mode == "match-welltest") cfg.qq_mode = pipeline::QqMode::MatchWellTest;
        if (qq_mode == "log-normalize") cfg.qq_mode = pipeline::QqMode::LogNormalize;
        if (qq_wells.empty()) {
            pipeline::stage_qq(cfg);
            return;
        }
        auto wells = ingest::parse_wells(qq_wells);
        pipeline::apply_qq(wells, cfg.qq_mode);
        fs::create_directories(cfg.paths.out_dir);
        ingest::save_wells(wells,
                           (fs::path(cfg.paths.out_dir) / "wells_qq.csv").string());
    });

    // optimize
    CommonOpts opt;
    std::string opt_wells, opt_grid, opt_seismic, opt_bounds, opt_de;
    std::uint64_t opt_seed = 0;
    int opt_gens = 0, opt_pop = 0;
    auto* c_opt = app.add_subcommand(
        "optimize", "fit kernel parameters by leave-one-out cross-validation");
    add_common(c_opt, opt);
    c_opt->add_option("--wells", opt_wells,
                      "run directly on this wells CSV instead of the staged "
                      "artifacts; writes params.json and history.csv");
    c_opt->add_option("--grid", opt_grid, "grid JSON");
    c_opt->add_option("--seismic", opt_seismic,
                      "seismic permeability map CSV (enables the w_s weight)");
    c_opt->add_option("--bounds", opt_bounds, "parameter bounds JSON");
    c_opt->add_option("--de", opt_de, "differential evolution settings JSON");
    auto* opt_seed_opt = c_opt->add_option("--seed", opt_seed, "DE seed");
    auto* opt_gens_opt = c_opt->add_option("--generations", opt_gens, "DE generations");
    auto* opt_pop_opt = c_opt->add_option("--population", opt_pop, "DE population");
    c_opt->callback([&] {
        pipeline::RunConfig cfg = load_cfg(opt);
        if (!opt_grid.empty()) cfg.paths.grid = opt_grid;
        if (!opt_bounds.empty()) cfg.bounds = pipeline::load_bounds(opt_bounds);
        if (!opt_de.empty()) cfg.de = pipeline::load_de_config(opt_de);
        if (opt_seed_opt->count()) cfg.de.seed = opt_seed;
        if (opt_gens_opt->count()) cfg.de.generations = opt_gens;
        if (opt_pop_opt->count()) cfg.de.population = opt_pop;
        if (opt_wells.empty()) {
            pipeline::stage_optimize(cfg);
            return;
        }
        const auto wells = ingest::parse_wells(opt_wells);
        const auto grid = domain::load_grid(cfg.paths.grid);
        fs::create_directories(cfg.paths.out_dir);
        const fs::path out(cfg.paths.out_dir);
        pipeline::FusionRun run =
            opt_seismic.empty()
                ? pipeline::run_pure_fusion(wells, grid, cfg.bounds, cfg.de)
                : pipeline::run_complete_fusion(
                      wells, grid,
                      domain::load_map(opt_seismic, grid,
                                       domain::MapKind::Permeability),
                      cfg.bounds, cfg.de, std::nullopt);
        pipeline::save_kernel_params(run.params, (out / "params.json").string());
        write_history(run.history, out / "history.csv");
    });

    // fuse
    CommonOpts fus;
    std::string fus_params, fus_wells, fus_seismic, fus_grid;
    auto* c_fuse = app.add_subcommand(
        "fuse", "build permeability and confidence maps from fitted parameters");
    add_common(c_fuse, fus);
    c_fuse->add_option("--params", fus_params,
                       "kernel parameters JSON; runs directly on --wells and "
                       "writes perm_map.csv and confidence_map.csv");
    c_fuse->add_option("--wells", fus_wells, "wells CSV for direct mode");
    c_fuse->add_option("--seismic", fus_seismic, "seismic permeability map CSV");
    c_fuse->add_option("--grid", fus_grid, "grid JSON");
    c_fuse->callback([&] {
        pipeline::RunConfig cfg = load_cfg(fus);
        if (!fus_grid.empty()) cfg.paths.grid = fus_grid;
        if (fus_params.empty()) {
            pipeline::stage_fuse(cfg);
            return;
        }
        if (fus_wells.empty())
            throw InputError("direct fuse mode needs --wells");
        const auto wells = ingest::parse_wells(fus_wells);
        const auto grid = domain::load_grid(cfg.paths.grid);
        const auto params = pipeline::load_kernel_params(fus_params);
        std::optional<domain::GridMap> seismic_map;
        if (!fus_seismic.empty())
            seismic_map = domain::load_map(fus_seismic, grid,
                                           domain::MapKind::Permeability);
        const auto fused = fusion::fuse_map(wells, seismic_map, params, grid);
        fs::create_directories(cfg.paths.out_dir);
        const fs::path out(cfg.paths.out_dir);
        domain::save_map(fused.perm_map, (out / "perm_map.csv").string());
        domain::save_map(fused.confidence_map,
                         (out / "confidence_map.csv").string());
    });

    // train-seismic
    CommonOpts trn;
    std::string trn_seismic, trn_horizon;
    int trn_epochs = 0;
    double trn_pct = 0.0;
    std::uint64_t trn_net_seed = 0, trn_seed = 0;
    auto* c_train = app.add_subcommand(
        "train-seismic", "train the seismic-to-permeability network");
    add_common(c_train, trn);
    c_train->add_option("--seismic", trn_seismic, "seismic volume file");
    c_train->add_option("--horizon", trn_horizon, "horizon CSV");
    auto* trn_ep_opt = c_train->add_option("--epochs", trn_epochs, "training epochs");
    auto* trn_pct_opt = c_train->add_option(
        "--percentile", trn_pct, "confidence percentile for training points");
    auto* trn_ns_opt = c_train->add_option("--net-seed", trn_net_seed,
                                           "weight initialization seed");
    auto* trn_ts_opt = c_train->add_option("--train-seed", trn_seed,
                                           "shuffle and split seed");
    c_train->callback([&] {
        pipeline::RunConfig cfg = load_cfg(trn);
        if (!trn_seismic.empty()) cfg.paths.seismic = trn_seismic;
        if (!trn_horizon.empty()) cfg.paths.horizon = trn_horizon;
        if (trn_ep_opt->count()) cfg.train.epochs = trn_epochs;
        if (trn_pct_opt->count()) cfg.train_percentile = trn_pct;
        if (trn_ns_opt->count()) cfg.net_seed = trn_net_seed;
        if (trn_ts_opt->count()) cfg.train.seed = trn_seed;
        pipeline::stage_train_seismic(cfg);
    });

    // predict-seismic
    CommonOpts prd;
    std::string prd_seismic, prd_horizon, prd_grid;
    auto* c_pred = app.add_subcommand(
        "predict-seismic", "predict a permeability map from the seismic volume");
    add_common(c_pred, prd);
    c_pred->add_option("--seismic", prd_seismic, "seismic volume file");
    c_pred->add_option("--horizon", prd_horizon, "horizon CSV");
    c_pred->add_option("--grid", prd_grid, "grid JSON");
    c_pred->callback([&] {
        pipeline::RunConfig cfg = load_cfg(prd);
        if (!prd_seismic.empty()) cfg.paths.seismic = prd_seismic;
        if (!prd_horizon.empty()) cfg.paths.horizon = prd_horizon;
        if (!prd_grid.empty()) cfg.paths.grid = prd_grid;
        pipeline::stage_predict_seismic(cfg);
    });

    // complete-fuse
    CommonOpts cmp;
    auto* c_complete = app.add_subcommand(
        "complete-fuse", "refit with the seismic map as an extra source");
    add_common(c_complete, cmp);
    bool cmp_warm = false;
    c_complete->add_flag("--warm-start", cmp_warm,
                         "seed the search with the pure-fusion parameters");
    c_complete->callback([&] {
        pipeline::RunConfig cfg = load_cfg(cmp);
        if (cmp_warm) cfg.warm_start = true;
        pipeline::stage_complete_fusion(cfg);
    });

    // ablate
    CommonOpts abl;
    std::vector<std::string> abl_ids;
    double abl_qlo = 0.0, abl_qhi = 0.0;
    auto* c_ablate = app.add_subcommand(
        "ablate", "rerun the workflow with extreme wells excluded");
    add_common(c_ablate, abl);
    c_ablate->add_option("--exclude", abl_ids, "well ids to exclude");
    auto* abl_lo_opt = c_ablate->add_option("--q-lo", abl_qlo, "lower quantile");
    auto* abl_hi_opt = c_ablate->add_option("--q-hi", abl_qhi, "upper quantile");
    c_ablate->callback([&] {
        pipeline::RunConfig cfg = load_cfg(abl);
        if (!abl_ids.empty()) cfg.ablation.exclude_ids = abl_ids;
        if (abl_lo_opt->count()) cfg.ablation.q_lo = abl_qlo;
        if (abl_hi_opt->count()) cfg.ablation.q_hi = abl_qhi;
        pipeline::stage_ablate(cfg);
    });

    // report
    CommonOpts rep;
    auto* c_report = app.add_subcommand(
        "report", "collect metrics, parameters and maps into report/");
    add_common(c_report, rep);
    c_report->callback([&] { pipeline::stage_report(load_cfg(rep)); });

    // synth
    std::string syn_config, syn_out = "synth_data";
    std::uint64_t syn_seed = 0;
    int syn_wells = 0, syn_nx = 0, syn_ny = 0;
    auto* c_synth = app.add_subcommand(
        "synth", "generate a synthetic dataset with known ground truth");
    c_synth->add_option("--config", syn_config, "generator settings JSON");
    c_synth->add_option("--out", syn_out, "output directory");
    auto* syn_seed_opt = c_synth->add_option("--seed", syn_seed, "generator seed");
    auto* syn_w_opt = c_synth->add_option("--wells", syn_wells, "well count");
    auto* syn_nx_opt = c_synth->add_option("--nx", syn_nx, "grid columns");
    auto* syn_ny_opt = c_synth->add_option("--ny", syn_ny, "grid rows");
    c_synth->callback([&] {
        synthgen::SynthConfig cfg;
        if (!syn_config.empty()) cfg = synthgen::load_synth_config(syn_config);
        if (syn_seed_opt->count()) cfg.seed = syn_seed;
        if (syn_w_opt->count()) cfg.well_count = syn_wells;
        if (syn_nx_opt->count()) cfg.nx = syn_nx;
        if (syn_ny_opt->count()) cfg.ny = syn_ny;
        synthgen::emit_dataset(cfg, syn_out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const InputError& e) {
        return report_error("input", e.what(), 1);
    } catch (const NumericError& e) {
        return report_error("numeric", e.what(), 2);
    } catch (const std::exception& e) {
        return report_error("internal", e.what(), 3);
    }
    return 0;
}
