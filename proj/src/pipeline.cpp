#include "permafuse/pipeline.hpp"
#include "permafuse/common.hpp"
#include "permafuse/cubes.hpp"
#include "permafuse/seismic_volume.hpp"
#include "permafuse/transform.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace permafuse::pipeline {

namespace fs = std::filesystem;
using domain::GridMap;
using domain::GridPtr;
using domain::KernelParams;
using domain::MapKind;
using ingest::WellRecord;
using nlohmann::json;

namespace {

fs::path art(const RunConfig& cfg, const char* name) {
    return fs::path(cfg.paths.out_dir) / name;
}

std::string need(const std::string& path, const char* what) {
    if (path.empty())
        throw InputError(std::string("run config does not set the ") + what +
                         " path");
    return path;
}

std::string require_artifact(const fs::path& p, const char* producer) {
    if (!fs::exists(p))
        throw InputError("missing artifact " + p.string() + " (run `" +
                         producer + "` first)");
    return p.string();
}

json read_json_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw InputError(std::string("bad ") + what + " JSON in " + path +
                         ": " + e.what());
    }
}

void write_json_file(const json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw InputError("write failed: " + path.string());
}

json params_to_json(const KernelParams& p) {
    return json{{"r_d", p.r_d},     {"r_g", p.r_g},   {"alpha", p.alpha},
                {"beta", p.beta},   {"gamma", p.gamma}, {"delta", p.delta},
                {"w_s", p.w_s}};
}

void write_history_csv(const std::vector<double>& history,
                       const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    out << "generation,best_f\n";
    for (std::size_t g = 0; g < history.size(); ++g)
        out << g << ',' << fmt_double(history[g]) << '\n';
    if (!out) throw InputError("write failed: " + path.string());
}

json metrics_to_json(const optimize::LoocvObjective::Detail& d) {
    return json{{"r2", d.r2},   {"mse", d.mse}, {"l1", d.l1},
                {"l2", d.l2},   {"f", d.f},     {"well_count", d.k.size()},
                {"k", d.k},     {"k_hat", d.k_hat}};
}

void persist_fusion_run(const FusionRun& run, const RunConfig& cfg,
                        const char* prefix) {
    const std::string p(prefix);
    write_json_file(params_to_json(run.params),
                    art(cfg, (p + "_params.json").c_str()));
    write_history_csv(run.history, art(cfg, (p + "_history.csv").c_str()));
    json m = metrics_to_json(run.metrics);
    m["failed_evals"] = run.failed_evals;
    write_json_file(m, art(cfg, (p + "_metrics.json").c_str()));
}

/// Linear interpolation quantile with plotting position h = p*n - 0.5,
/// clamped to the sample extremes (the convention used throughout).
double quantile(std::vector<double> sorted_values, double p) {
    std::sort(sorted_values.begin(), sorted_values.end());
    const auto n = static_cast<double>(sorted_values.size());
    const double h = p * n - 0.5;
    if (h <= 0.0) return sorted_values.front();
    if (h >= n - 1.0) return sorted_values.back();
    const auto i = static_cast<std::size_t>(h);
    const double f = h - static_cast<double>(i);
    return sorted_values[i] + f * (sorted_values[i + 1] - sorted_values[i]);
}

std::vector<WellRecord> drop_wells(const std::vector<WellRecord>& wells,
                                   const std::vector<std::string>& excluded) {
    std::vector<WellRecord> rest;
    for (const auto& w : wells)
        if (std::find(excluded.begin(), excluded.end(), w.id) == excluded.end())
            rest.push_back(w);
    return rest;
}

GridPtr load_run_grid(const RunConfig& cfg) {
    return domain::load_grid(need(cfg.paths.grid, "grid"));
}

ingest::SeismicVolume load_run_volume(const RunConfig& cfg) {
    return ingest::load_seismic(need(cfg.paths.seismic, "seismic volume"),
                                need(cfg.paths.horizon, "horizon"));
}

/// Trains the network on high-confidence points of a fused map and predicts
/// a seismic permeability map on the grid. Shared by the main run and the
/// ablation rerun.
struct SeismicLeg {
    seismic::SeismicNet net;
    seismic::TrainResult training;
    std::size_t sample_count = 0;
};

SeismicLeg train_seismic_leg(const RunConfig& cfg, const GridMap& confidence,
                             const GridMap& fused,
                             const ingest::SeismicVolume& volume) {
    const std::vector<seismic::TrainSample> samples = seismic::build_training_set(
        confidence, fused, volume, cfg.train_percentile);
    seismic::SeismicNet net(cfg.net, cfg.net_seed);
    seismic::TrainResult tr = seismic::train(net, samples, cfg.train);
    return SeismicLeg{std::move(net), std::move(tr), samples.size()};
}

json train_result_json(const SeismicLeg& leg) {
    return json{{"sample_count", leg.sample_count},
                {"best_epoch", leg.training.best_epoch},
                {"best_loss", leg.training.best_loss},
                {"train_loss", leg.training.train_loss},
                {"val_loss", leg.training.val_loss}};
}

} // namespace

// --- config ------------------------------------------------------------------

namespace {

void get_if(const json& j, const char* key, std::string& slot) {
    if (j.contains(key) && !j.at(key).is_null())
        slot = j.at(key).get<std::string>();
}

template <typename T>
void get_if(const json& j, const char* key, T& slot) {
    if (j.contains(key) && !j.at(key).is_null())
        slot = j.at(key).get<T>();
}

void get_range(const json& j, const char* key, optimize::ParamRange& slot) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2)
        throw InputError(std::string("bound ") + key +
                         " must be a [lo, hi] array");
    slot.lo = a[0].get<double>();
    slot.hi = a[1].get<double>();
}

optimize::Bounds bounds_from_json(const json& j) {
    optimize::Bounds b;
    get_range(j, "r_d", b.r_d);
    get_range(j, "r_g", b.r_g);
    get_range(j, "alpha", b.alpha);
    get_range(j, "beta", b.beta);
    get_range(j, "gamma", b.gamma);
    get_range(j, "delta", b.delta);
    get_range(j, "w_s", b.w_s);
    b.validate();
    return b;
}

optimize::DEConfig de_from_json(const json& j) {
    optimize::DEConfig de;
    get_if(j, "population", de.population);
    get_if(j, "mutation", de.mutation);
    get_if(j, "crossover", de.crossover);
    get_if(j, "generations", de.generations);
    get_if(j, "seed", de.seed);
    get_if(j, "c1", de.c1);
    get_if(j, "c2", de.c2);
    get_if(j, "bins", de.bins);
    de.validate();
    return de;
}

json bounds_to_json(const optimize::Bounds& b) {
    const auto arr = [](const optimize::ParamRange& r) {
        return json::array({r.lo, r.hi});
    };
    return json{{"r_d", arr(b.r_d)},   {"r_g", arr(b.r_g)},
                {"alpha", arr(b.alpha)}, {"beta", arr(b.beta)},
                {"gamma", arr(b.gamma)}, {"delta", arr(b.delta)},
                {"w_s", arr(b.w_s)}};
}

json run_config_to_json(const RunConfig& c) {
    json j;
    j["paths"] = json{{"wells", c.paths.wells},     {"grid", c.paths.grid},
                      {"relperm", c.paths.relperm}, {"fluids", c.paths.fluids},
                      {"seismic", c.paths.seismic}, {"horizon", c.paths.horizon},
                      {"out_dir", c.paths.out_dir}};
    j["bounds"] = bounds_to_json(c.bounds);
    j["de"] = json{{"population", c.de.population},
                   {"mutation", c.de.mutation},
                   {"crossover", c.de.crossover},
                   {"generations", c.de.generations},
                   {"seed", c.de.seed},
                   {"c1", c.de.c1},
                   {"c2", c.de.c2},
                   {"bins", c.de.bins}};
    j["net"] = json{{"c1", c.net.c1},         {"c2", c.net.c2},
                    {"c3", c.net.c3},         {"d1", c.net.d1},
                    {"d2", c.net.d2},         {"bn_eps", c.net.bn_eps},
                    {"bn_momentum", c.net.bn_momentum}};
    j["train"] = json{{"epochs", c.train.epochs},
                      {"batch", c.train.batch},
                      {"lr", c.train.lr},
                      {"rho", c.train.rho},
                      {"eps", c.train.eps},
                      {"val_fraction", c.train.val_fraction},
                      {"block_holdout", c.train.block_holdout},
                      {"seed", c.train.seed}};
    j["net_seed"] = c.net_seed;
    j["train_percentile"] = c.train_percentile;
    j["qq_mode"] = c.qq_mode == QqMode::LogNormalize ? "log-normalize"
                                                     : "match-welltest";
    j["default_s_w"] = c.default_s_w ? json(*c.default_s_w) : json(nullptr);
    j["ablation"] = json{{"enabled", c.ablation.enabled},
                         {"exclude_ids", c.ablation.exclude_ids},
                         {"q_lo", c.ablation.q_lo},
                         {"q_hi", c.ablation.q_hi}};
    j["warm_start"] = c.warm_start;
    return j;
}

} // namespace

RunConfig load_run_config(const std::string& path) {
    const json j = read_json_file(path, "run config");
    RunConfig c;
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        get_if(p, "wells", c.paths.wells);
        get_if(p, "grid", c.paths.grid);
        get_if(p, "relperm", c.paths.relperm);
        get_if(p, "fluids", c.paths.fluids);
        get_if(p, "seismic", c.paths.seismic);
        get_if(p, "horizon", c.paths.horizon);
        get_if(p, "out_dir", c.paths.out_dir);
    }
    if (j.contains("bounds")) c.bounds = bounds_from_json(j.at("bounds"));
    if (j.contains("de")) c.de = de_from_json(j.at("de"));
    if (j.contains("net")) {
        const auto& n = j.at("net");
        get_if(n, "c1", c.net.c1);
        get_if(n, "c2", c.net.c2);
        get_if(n, "c3", c.net.c3);
        get_if(n, "d1", c.net.d1);
        get_if(n, "d2", c.net.d2);
        get_if(n, "bn_eps", c.net.bn_eps);
        get_if(n, "bn_momentum", c.net.bn_momentum);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        get_if(t, "epochs", c.train.epochs);
        get_if(t, "batch", c.train.batch);
        get_if(t, "lr", c.train.lr);
        get_if(t, "rho", c.train.rho);
        get_if(t, "eps", c.train.eps);
        get_if(t, "val_fraction", c.train.val_fraction);
        get_if(t, "block_holdout", c.train.block_holdout);
        get_if(t, "seed", c.train.seed);
    }
    get_if(j, "net_seed", c.net_seed);
    get_if(j, "train_percentile", c.train_percentile);
    if (j.contains("qq_mode")) {
        const auto mode = j.at("qq_mode").get<std::string>();
        if (mode == "match-welltest")
            c.qq_mode = QqMode::MatchWellTest;
        else if (mode == "log-normalize")
            c.qq_mode = QqMode::LogNormalize;
        else
            throw InputError("unknown qq_mode \"" + mode +
                             "\" (expected match-welltest or log-normalize)");
    }
    if (j.contains("default_s_w") && !j.at("default_s_w").is_null())
        c.default_s_w = j.at("default_s_w").get<double>();
    if (j.contains("ablation")) {
        const auto& a = j.at("ablation");
        get_if(a, "enabled", c.ablation.enabled);
        get_if(a, "exclude_ids", c.ablation.exclude_ids);
        get_if(a, "q_lo", c.ablation.q_lo);
        get_if(a, "q_hi", c.ablation.q_hi);
    }
    get_if(j, "warm_start", c.warm_start);
    if (c.train_percentile < 0.0 || c.train_percentile >= 1.0)
        throw InputError("train_percentile must be in [0, 1)");
    return c;
}

void save_run_config(const RunConfig& config, const std::string& path) {
    write_json_file(run_config_to_json(config), path);
}

std::uint64_t config_hash(const RunConfig& config) {
    return fnv1a(run_config_to_json(config).dump());
}

KernelParams load_kernel_params(const std::string& path) {
    const json j = read_json_file(path, "kernel params");
    KernelParams p;
    get_if(j, "r_d", p.r_d);
    get_if(j, "r_g", p.r_g);
    get_if(j, "alpha", p.alpha);
    get_if(j, "beta", p.beta);
    get_if(j, "gamma", p.gamma);
    get_if(j, "delta", p.delta);
    get_if(j, "w_s", p.w_s);
    p.validate();
    return p;
}

void save_kernel_params(const KernelParams& params, const std::string& path) {
    params.validate();
    write_json_file(params_to_json(params), path);
}

optimize::Bounds load_bounds(const std::string& path) {
    return bounds_from_json(read_json_file(path, "bounds"));
}

optimize::DEConfig load_de_config(const std::string& path) {
    return de_from_json(read_json_file(path, "DE config"));
}

// --- library-level operations ------------------------------------------------

void convert_effective(std::vector<WellRecord>& wells,
                       const ingest::RelPermTable& table,
                       const ingest::FluidProps& fluids,
                       std::optional<double> default_s_w) {
    table.validate();
    fluids.validate();
    for (WellRecord& w : wells) {
        if (!w.k_wt_effective || w.k_wt_absolute) continue;
        if (w.rock_type && *w.rock_type != table.rock_type)
            throw InputError("no rel-perm table for rock type \"" +
                             *w.rock_type + "\" (well " + w.id + ")");
        const std::optional<double> s_w = w.s_w ? w.s_w : default_s_w;
        if (!s_w) continue; // stays effective-only
        w.k_wt_absolute = ingest::effective_to_absolute(*w.k_wt_effective, *s_w,
                                                        fluids, table);
    }
}

void apply_qq(std::vector<WellRecord>& wells, QqMode mode) {
    std::vector<double> source;
    for (const WellRecord& w : wells)
        if (w.k_wl) source.push_back(preprocess::to_log10(*w.k_wl));
    if (source.empty())
        throw InputError("no well-log values to transform");

    std::vector<double> mapped;
    if (mode == QqMode::MatchWellTest) {
        std::vector<double> target;
        for (const WellRecord& w : wells)
            if (w.has_wt()) target.push_back(preprocess::to_log10(w.wt_value()));
        if (target.empty())
            throw InputError("no well-test values to match");
        mapped = preprocess::qq_transform(source, target, source);
    } else {
        mapped = preprocess::qq_log_normalize(source, source);
    }

    std::size_t i = 0;
    for (WellRecord& w : wells)
        if (w.k_wl) w.k_wl_qq = preprocess::from_log10(mapped[i++]);
}

FusionRun run_pure_fusion(const std::vector<WellRecord>& wells, GridPtr grid,
                          const optimize::Bounds& bounds,
                          const optimize::DEConfig& de) {
    bounds.validate();
    const optimize::LoocvObjective objective(wells, grid, std::nullopt, de.c1,
                                             de.c2, de.bins);
    const auto fn = [&objective](const std::vector<double>& x) {
        return objective(optimize::unpack_params(x, false));
    };
    optimize::DEResult r = optimize::differential_evolution(
        fn, bounds.lower(false), bounds.upper(false), de);
    const KernelParams params = optimize::unpack_params(r.best, false);
    return FusionRun{params, fusion::fuse_map(wells, std::nullopt, params, grid),
                     objective.evaluate(params), std::move(r.history),
                     r.failed_evals};
}

FusionRun run_complete_fusion(const std::vector<WellRecord>& wells,
                              GridPtr grid, const GridMap& seismic_map,
                              const optimize::Bounds& bounds,
                              const optimize::DEConfig& de,
                              const std::optional<KernelParams>& warm_start) {
    bounds.validate();
    const optimize::LoocvObjective objective(wells, grid, seismic_map, de.c1,
                                             de.c2, de.bins);
    const auto fn = [&objective](const std::vector<double>& x) {
        return objective(optimize::unpack_params(x, true));
    };
    optimize::DEConfig de2 = de;
    if (warm_start) de2.x0 = optimize::pack_params(*warm_start, true);
    optimize::DEResult r = optimize::differential_evolution(
        fn, bounds.lower(true), bounds.upper(true), de2);
    const KernelParams params = optimize::unpack_params(r.best, true);
    return FusionRun{params, fusion::fuse_map(wells, seismic_map, params, grid),
                     objective.evaluate(params), std::move(r.history),
                     r.failed_evals};
}

GridMap percentage_diff_map(const GridMap& a, const GridMap& b) {
    const bool same_grid =
        a.grid_ptr() == b.grid_ptr() ||
        (a.size() == b.size() &&
         std::equal(a.grid().points().begin(), a.grid().points().end(),
                    b.grid().points().begin(),
                    [](const domain::Point2& p, const domain::Point2& q) {
                        return p.x == q.x && p.y == q.y;
                    }));
    if (!same_grid) throw InputError("maps are on different grids");

    std::vector<double> values(a.size());
    std::vector<std::size_t> zeros;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double pa = preprocess::from_log10(a.value(i));
        const double pb = preprocess::from_log10(b.value(i));
        if (pb == 0.0) {
            zeros.push_back(i);
            continue;
        }
        values[i] = 100.0 * (pa - pb) / pb;
    }
    if (!zeros.empty()) {
        std::string list;
        const std::size_t shown = std::min<std::size_t>(zeros.size(), 32);
        for (std::size_t i = 0; i < shown; ++i) {
            if (i) list += ", ";
            list += std::to_string(zeros[i]);
        }
        if (zeros.size() > shown)
            list += ", ... (" + std::to_string(zeros.size()) + " total)";
        throw NumericError("zero denominator at grid indices " + list);
    }
    return GridMap(a.grid_ptr(), std::move(values), MapKind::Difference);
}

std::vector<std::string>
ablation_exclusions(const std::vector<WellRecord>& wells, double q_lo,
                    double q_hi) {
    if (!(q_lo >= 0.0 && q_lo <= q_hi && q_hi <= 1.0))
        throw InputError("quantiles must satisfy 0 <= q_lo <= q_hi <= 1");
    if (wells.empty()) return {};

    std::vector<double> stats(wells.size());
    for (std::size_t i = 0; i < wells.size(); ++i) {
        const WellRecord& w = wells[i];
        double acc = 0.0;
        int n = 0;
        if (w.has_wt()) {
            acc += preprocess::to_log10(w.wt_value());
            ++n;
        }
        if (w.has_wl()) {
            acc += preprocess::to_log10(w.wl_value());
            ++n;
        }
        if (n == 0)
            throw InputError("well " + w.id + " has no permeability value");
        stats[i] = acc / n;
    }

    const double lo = quantile(stats, q_lo);
    const double hi = quantile(stats, q_hi);
    std::vector<std::string> excluded;
    for (std::size_t i = 0; i < wells.size(); ++i)
        if (stats[i] < lo || stats[i] > hi) excluded.push_back(wells[i].id);
    return excluded;
}

// --- stages -------------------------------------------------------------------

void stage_ingest(const RunConfig& cfg) {
    fs::create_directories(cfg.paths.out_dir);
    std::vector<WellRecord> wells =
        ingest::parse_wells(need(cfg.paths.wells, "wells"));

    const bool has_rp = !cfg.paths.relperm.empty();
    const bool has_fl = !cfg.paths.fluids.empty();
    if (has_rp != has_fl)
        throw InputError("relperm and fluids paths must be provided together");
    if (has_rp) {
        const ingest::RelPermTable table =
            ingest::load_relperm(cfg.paths.relperm, "default");
        const ingest::FluidProps fluids = ingest::load_fluids(cfg.paths.fluids);
        convert_effective(wells, table, fluids, cfg.default_s_w);
    }
    ingest::save_wells(wells, art(cfg, "wells_ingested.csv").string());
}

void stage_qq(const RunConfig& cfg) {
    std::vector<WellRecord> wells = ingest::parse_wells(
        require_artifact(art(cfg, "wells_ingested.csv"), "ingest"));
    apply_qq(wells, cfg.qq_mode);
    ingest::save_wells(wells, art(cfg, "wells_qq.csv").string());
}

void stage_optimize(const RunConfig& cfg) {
    const std::vector<WellRecord> wells = ingest::parse_wells(
        require_artifact(art(cfg, "wells_qq.csv"), "qq-transform"));
    const FusionRun run =
        run_pure_fusion(wells, load_run_grid(cfg), cfg.bounds, cfg.de);
    persist_fusion_run(run, cfg, "pure");
}

void stage_fuse(const RunConfig& cfg) {
    const std::vector<WellRecord> wells = ingest::parse_wells(
        require_artifact(art(cfg, "wells_qq.csv"), "qq-transform"));
    const KernelParams params = load_kernel_params(
        require_artifact(art(cfg, "pure_params.json"), "optimize"));
    const fusion::FusionResult fused =
        fusion::fuse_map(wells, std::nullopt, params, load_run_grid(cfg));
    save_map(fused.perm_map, art(cfg, "pure_map.csv").string());
    save_map(fused.confidence_map, art(cfg, "pure_confidence.csv").string());
}

void stage_train_seismic(const RunConfig& cfg) {
    const GridPtr grid = load_run_grid(cfg);
    const GridMap confidence =
        domain::load_map(require_artifact(art(cfg, "pure_confidence.csv"), "fuse"),
                         grid, MapKind::Confidence);
    const GridMap fused =
        domain::load_map(require_artifact(art(cfg, "pure_map.csv"), "fuse"), grid,
                         MapKind::Permeability);
    const ingest::SeismicVolume volume = load_run_volume(cfg);

    const SeismicLeg leg = train_seismic_leg(cfg, confidence, fused, volume);
    seismic::save_checkpoint(leg.net, art(cfg, "seismic_net.ckpt").string());
    write_json_file(train_result_json(leg), art(cfg, "seismic_train.json"));
}

void stage_predict_seismic(const RunConfig& cfg) {
    const seismic::SeismicNet net = seismic::load_checkpoint(
        require_artifact(art(cfg, "seismic_net.ckpt"), "train-seismic"));
    const seismic::PredictResult pr =
        seismic::predict_map(net, load_run_volume(cfg), load_run_grid(cfg));
    save_map(pr.map, art(cfg, "seismic_map.csv").string());
    write_json_file(json{{"flagged_count", pr.flagged_count}},
                    art(cfg, "seismic_predict.json"));
}

void stage_complete_fusion(const RunConfig& cfg) {
    const std::vector<WellRecord> wells = ingest::parse_wells(
        require_artifact(art(cfg, "wells_qq.csv"), "qq-transform"));
    const GridPtr grid = load_run_grid(cfg);
    const GridMap seismic_map = domain::load_map(
        require_artifact(art(cfg, "seismic_map.csv"), "predict-seismic"), grid,
        MapKind::Permeability);

    std::optional<KernelParams> warm;
    if (cfg.warm_start)
        warm = load_kernel_params(
            require_artifact(art(cfg, "pure_params.json"), "optimize"));

    const FusionRun run = run_complete_fusion(wells, grid, seismic_map,
                                              cfg.bounds, cfg.de, warm);
    persist_fusion_run(run, cfg, "complete");
    save_map(run.fused.perm_map, art(cfg, "complete_map.csv").string());
    save_map(run.fused.confidence_map,
             art(cfg, "complete_confidence.csv").string());

    const GridMap pure_map =
        domain::load_map(require_artifact(art(cfg, "pure_map.csv"), "fuse"), grid,
                         MapKind::Permeability);
    save_map(percentage_diff_map(run.fused.perm_map, pure_map),
             art(cfg, "diff_complete_vs_pure.csv").string());
}

void stage_ablate(const RunConfig& cfg) {
    const std::vector<WellRecord> all_raw = ingest::parse_wells(
        require_artifact(art(cfg, "wells_ingested.csv"), "ingest"));
    const std::vector<WellRecord> all_qq = ingest::parse_wells(
        require_artifact(art(cfg, "wells_qq.csv"), "qq-transform"));

    std::vector<std::string> excluded;
    if (!cfg.ablation.exclude_ids.empty()) {
        for (const std::string& id : cfg.ablation.exclude_ids) {
            const bool known =
                std::any_of(all_raw.begin(), all_raw.end(),
                            [&](const WellRecord& w) { return w.id == id; });
            if (!known)
                throw InputError("unknown well id in exclusion list: " + id);
        }
        excluded = cfg.ablation.exclude_ids;
    } else {
        excluded = ablation_exclusions(all_qq, cfg.ablation.q_lo,
                                       cfg.ablation.q_hi);
    }

    std::vector<WellRecord> remaining = drop_wells(all_raw, excluded);
    if (remaining.size() < 3)
        throw InputError("ablation leaves fewer than 3 wells (" +
                         std::to_string(remaining.size()) + " remain)");

    const fs::path abl = art(cfg, "ablation");
    fs::create_directories(abl);
    write_json_file(json{{"excluded", excluded}}, abl / "excluded_ids.json");

    // the whole workflow repeats on the remaining wells
    apply_qq(remaining, cfg.qq_mode);
    ingest::save_wells(remaining, (abl / "wells_qq.csv").string());

    const GridPtr grid = load_run_grid(cfg);
    const FusionRun pure = run_pure_fusion(remaining, grid, cfg.bounds, cfg.de);
    write_json_file(params_to_json(pure.params), abl / "pure_params.json");
    write_history_csv(pure.history, abl / "pure_history.csv");
    write_json_file(metrics_to_json(pure.metrics), abl / "pure_metrics.json");
    save_map(pure.fused.perm_map, (abl / "pure_map.csv").string());
    save_map(pure.fused.confidence_map, (abl / "pure_confidence.csv").string());

    const GridMap main_pure =
        domain::load_map(require_artifact(art(cfg, "pure_map.csv"), "fuse"), grid,
                         MapKind::Permeability);
    save_map(percentage_diff_map(pure.fused.perm_map, main_pure),
             (abl / "diff_pure.csv").string());

    const bool with_seismic = !cfg.paths.seismic.empty();
    std::optional<optimize::LoocvObjective::Detail> complete_metrics;
    if (with_seismic) {
        const ingest::SeismicVolume volume = load_run_volume(cfg);
        const SeismicLeg leg = train_seismic_leg(
            cfg, pure.fused.confidence_map, pure.fused.perm_map, volume);
        seismic::save_checkpoint(leg.net, (abl / "seismic_net.ckpt").string());
        write_json_file(train_result_json(leg), abl / "seismic_train.json");

        const seismic::PredictResult pr =
            seismic::predict_map(leg.net, volume, grid);
        save_map(pr.map, (abl / "seismic_map.csv").string());

        std::optional<KernelParams> warm;
        if (cfg.warm_start) warm = pure.params;
        const FusionRun complete = run_complete_fusion(remaining, grid, pr.map,
                                                       cfg.bounds, cfg.de, warm);
        write_json_file(params_to_json(complete.params),
                        abl / "complete_params.json");
        write_history_csv(complete.history, abl / "complete_history.csv");
        write_json_file(metrics_to_json(complete.metrics),
                        abl / "complete_metrics.json");
        save_map(complete.fused.perm_map, (abl / "complete_map.csv").string());
        save_map(complete.fused.confidence_map,
                 (abl / "complete_confidence.csv").string());
        complete_metrics = complete.metrics;

        const fs::path main_complete = art(cfg, "complete_map.csv");
        if (fs::exists(main_complete)) {
            const GridMap mc = domain::load_map(main_complete.string(), grid,
                                                MapKind::Permeability);
            save_map(percentage_diff_map(complete.fused.perm_map, mc),
                     (abl / "diff_complete.csv").string());
        }
    }

    // Table-1-shaped metrics: fusion mode x {all wells, after exclusion}
    std::ofstream out(abl / "metrics.csv", std::ios::binary);
    if (!out)
        throw InputError("cannot open for writing: " +
                         (abl / "metrics.csv").string());
    out << "mode,mse_all_wells,r2_all_wells,mse_ablated,r2_ablated\n";
    const auto cell = [](const json& j, const char* key) {
        return fmt_double(j.at(key).get<double>());
    };
    {
        const json m = read_json_file(
            require_artifact(art(cfg, "pure_metrics.json"), "optimize"),
            "metrics");
        out << "pure," << cell(m, "mse") << ',' << cell(m, "r2") << ','
            << fmt_double(pure.metrics.mse) << ','
            << fmt_double(pure.metrics.r2) << '\n';
    }
    const fs::path main_complete_metrics = art(cfg, "complete_metrics.json");
    if (complete_metrics && fs::exists(main_complete_metrics)) {
        const json m =
            read_json_file(main_complete_metrics.string(), "metrics");
        out << "complete," << cell(m, "mse") << ',' << cell(m, "r2") << ','
            << fmt_double(complete_metrics->mse) << ','
            << fmt_double(complete_metrics->r2) << '\n';
    }
    if (!out)
        throw InputError("write failed: " + (abl / "metrics.csv").string());
}

void stage_report(const RunConfig& cfg) {
    const fs::path rep = art(cfg, "report");

    struct MetricsRow {
        const char* mode;
        fs::path all;
        fs::path ablated;
    };
    const MetricsRow rows[2] = {
        {"pure", art(cfg, "pure_metrics.json"),
         art(cfg, "ablation") / "pure_metrics.json"},
        {"complete", art(cfg, "complete_metrics.json"),
         art(cfg, "ablation") / "complete_metrics.json"},
    };
    bool any = false;
    for (const auto& r : rows)
        if (fs::exists(r.all) || fs::exists(r.ablated)) any = true;
    if (!any) throw InputError("no completed stages to report");

    fs::create_directories(rep);

    std::ofstream mt(rep / "metrics.csv", std::ios::binary);
    if (!mt)
        throw InputError("cannot open for writing: " +
                         (rep / "metrics.csv").string());
    mt << "mode,mse_all_wells,r2_all_wells,mse_ablated,r2_ablated\n";
    for (const auto& r : rows) {
        if (!fs::exists(r.all) && !fs::exists(r.ablated)) continue;
        mt << r.mode << ',';
        if (fs::exists(r.all)) {
            const json m = read_json_file(r.all.string(), "metrics");
            mt << fmt_double(m.at("mse").get<double>()) << ','
               << fmt_double(m.at("r2").get<double>());
        } else {
            mt << ',';
        }
        mt << ',';
        if (fs::exists(r.ablated)) {
            const json m = read_json_file(r.ablated.string(), "metrics");
            mt << fmt_double(m.at("mse").get<double>()) << ','
               << fmt_double(m.at("r2").get<double>());
        } else {
            mt << ',';
        }
        mt << '\n';
    }
    if (!mt)
        throw InputError("write failed: " + (rep / "metrics.csv").string());
    mt.close();

    json params = json::object();
    const auto add_params = [&params](const char* key, const fs::path& p) {
        if (fs::exists(p)) params[key] = read_json_file(p.string(), "params");
    };
    add_params("pure", art(cfg, "pure_params.json"));
    add_params("complete", art(cfg, "complete_params.json"));
    add_params("ablation_pure", art(cfg, "ablation") / "pure_params.json");
    add_params("ablation_complete",
               art(cfg, "ablation") / "complete_params.json");
    write_json_file(params, rep / "params.json");

    const char* maps[] = {"pure_map.csv",
                          "pure_confidence.csv",
                          "seismic_map.csv",
                          "complete_map.csv",
                          "complete_confidence.csv",
                          "diff_complete_vs_pure.csv"};
    for (const char* name : maps) {
        const fs::path src = art(cfg, name);
        if (fs::exists(src))
            fs::copy_file(src, rep / name, fs::copy_options::overwrite_existing);
    }
    const char* abl_maps[] = {"pure_map.csv", "complete_map.csv",
                              "diff_pure.csv", "diff_complete.csv"};
    for (const char* name : abl_maps) {
        const fs::path src = art(cfg, "ablation") / name;
        if (fs::exists(src))
            fs::copy_file(src, rep / (std::string("ablation_") + name),
                          fs::copy_options::overwrite_existing);
    }

    std::ofstream sum(rep / "summary.txt", std::ios::binary);
    if (!sum)
        throw InputError("cannot open for writing: " +
                         (rep / "summary.txt").string());
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    sum << "permafuse run summary\n";
    sum << "config hash: " << hash << "\n";
    sum << "de seed: " << cfg.de.seed << "\n";
    sum << "net seed: " << cfg.net_seed << "\n";
    sum << "train seed: " << cfg.train.seed << "\n";
    sum << "train percentile: " << fmt_double(cfg.train_percentile) << "\n";

    const auto well_count = [&](const char* name) -> std::string {
        const fs::path p = art(cfg, name);
        if (!fs::exists(p)) return "absent";
        return std::to_string(ingest::parse_wells(p.string()).size());
    };
    sum << "wells ingested: " << well_count("wells_ingested.csv") << "\n";
    sum << "wells transformed: " << well_count("wells_qq.csv") << "\n";

    const fs::path flags = art(cfg, "seismic_predict.json");
    if (fs::exists(flags))
        sum << "seismic points mean-filled: "
            << read_json_file(flags.string(), "predict summary")
                   .at("flagged_count")
                   .get<std::size_t>()
            << "\n";

    sum << "\nartifacts\n";
    const char* inventory[] = {
        "wells_ingested.csv",  "wells_qq.csv",
        "pure_params.json",    "pure_history.csv",
        "pure_metrics.json",   "pure_map.csv",
        "pure_confidence.csv", "seismic_net.ckpt",
        "seismic_train.json",  "seismic_map.csv",
        "seismic_predict.json", "complete_params.json",
        "complete_history.csv", "complete_metrics.json",
        "complete_map.csv",    "complete_confidence.csv",
        "diff_complete_vs_pure.csv"};
    for (const char* name : inventory) {
        const fs::path p = art(cfg, name);
        if (fs::exists(p))
            sum << "  " << name << ": " << fs::file_size(p) << " bytes\n";
    }
    const char* abl_inventory[] = {"excluded_ids.json", "wells_qq.csv",
                                   "pure_params.json",  "pure_metrics.json",
                                   "pure_map.csv",      "complete_params.json",
                                   "complete_metrics.json", "complete_map.csv",
                                   "diff_pure.csv",     "diff_complete.csv",
                                   "metrics.csv"};
    for (const char* name : abl_inventory) {
        const fs::path p = art(cfg, "ablation") / name;
        if (fs::exists(p))
            sum << "  ablation/" << name << ": " << fs::file_size(p)
                << " bytes\n";
    }

    sum << "\nmetrics\n";
    for (const auto& r : rows) {
        if (fs::exists(r.all)) {
            const json m = read_json_file(r.all.string(), "metrics");
            sum << "  " << r.mode << ": mse "
                << fmt_double(m.at("mse").get<double>()) << ", r2 "
                << fmt_double(m.at("r2").get<double>()) << "\n";
        }
        if (fs::exists(r.ablated)) {
            const json m = read_json_file(r.ablated.string(), "metrics");
            sum << "  " << r.mode << " (ablated): mse "
                << fmt_double(m.at("mse").get<double>()) << ", r2 "
                << fmt_double(m.at("r2").get<double>()) << "\n";
        }
    }
    if (!sum)
        throw InputError("write failed: " + (rep / "summary.txt").string());
}

void run_all(const RunConfig& cfg) {
    stage_ingest(cfg);
    stage_qq(cfg);
    stage_optimize(cfg);
    stage_fuse(cfg);
    if (!cfg.paths.seismic.empty()) {
        stage_train_seismic(cfg);
        stage_predict_seismic(cfg);
        stage_complete_fusion(cfg);
    }
    if (cfg.ablation.enabled) stage_ablate(cfg);
    stage_report(cfg);
}

} // namespace permafuse::pipeline
