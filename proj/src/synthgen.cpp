#include "permafuse/synthgen.hpp"
#include "permafuse/common.hpp"
#include "permafuse/fusion.hpp"
#include "permafuse/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace permafuse::synthgen {

using domain::GridMap;
using domain::GridPtr;
using domain::Point2;
using domain::Rect;
using ingest::SeismicVolume;
using ingest::WellRecord;

namespace {

constexpr std::uint64_t kFieldStream = 1;
constexpr std::uint64_t kWellStream = 2;
constexpr std::uint64_t kSeismicStream = 3;

/// Bilinear interpolation of a full-lattice map, clamped to the grid bounds.
double field_at(const GridMap& map, std::size_t nx, std::size_t ny,
                const Rect& b, double spacing, double x, double y) {
    double u = (x - b.xmin) / spacing;
    double v = (y - b.ymin) / spacing;
    u = std::clamp(u, 0.0, static_cast<double>(nx - 1));
    v = std::clamp(v, 0.0, static_cast<double>(ny - 1));
    const auto i0 = std::min(static_cast<std::size_t>(u), nx >= 2 ? nx - 2 : 0);
    const auto j0 = std::min(static_cast<std::size_t>(v), ny >= 2 ? ny - 2 : 0);
    const double fu = nx >= 2 ? u - static_cast<double>(i0) : 0.0;
    const double fv = ny >= 2 ? v - static_cast<double>(j0) : 0.0;
    const auto at = [&](std::size_t ix, std::size_t iy) {
        return map.value(iy * nx + ix);
    };
    const std::size_t i1 = nx >= 2 ? i0 + 1 : i0;
    const std::size_t j1 = ny >= 2 ? j0 + 1 : j0;
    return (1.0 - fv) * ((1.0 - fu) * at(i0, j0) + fu * at(i1, j0)) +
           fv * ((1.0 - fu) * at(i0, j1) + fu * at(i1, j1));
}

} // namespace

void SynthConfig::validate() const {
    if (nx < 2 || ny < 2) throw InputError("grid must be at least 2x2");
    if (!(spacing > 0.0)) throw InputError("spacing must be positive");
    if (!(corr_len_cells > 0.0))
        throw InputError("correlation length must be positive");
    if (!(log_sd >= 0.0)) throw InputError("log_sd must be non-negative");
    if (well_count < 3) throw InputError("well count must be at least 3");
    if (well_margin_frac < 0.0 || well_margin_frac >= 0.5)
        throw InputError("well margin fraction must be in [0, 0.5)");
    if (!(wl_bias > 0.0)) throw InputError("wl_bias must be positive");
    if (!(wl_log_gain > 0.0)) throw InputError("wl_log_gain must be positive");
    if (wl_scatter < 0.0 || wt_scatter < 0.0 || seismic_noise < 0.0)
        throw InputError("noise levels must be non-negative");
    if (!(wt_radius > 0.0)) throw InputError("wt_radius must be positive");
}

GridPtr make_grid(const SynthConfig& config) {
    config.validate();
    Rect b;
    b.xmin = 0.0;
    b.ymin = 0.0;
    b.xmax = static_cast<double>(config.nx - 1) * config.spacing;
    b.ymax = static_cast<double>(config.ny - 1) * config.spacing;
    return domain::build_grid(b, config.spacing);
}

GridMap generate_field(const SynthConfig& config) {
    config.validate();
    GridPtr grid = make_grid(config);
    const std::size_t n = grid->size();

    std::vector<double> values(n, 0.0);
    if (config.log_sd > 0.0) {
        const double sigma = config.corr_len_cells * config.spacing;
        const double cells = static_cast<double>(config.nx * config.ny);
        const auto bumps = static_cast<std::size_t>(std::max(
            64.0,
            std::ceil(9.0 * cells / (config.corr_len_cells * config.corr_len_cells))));
        const Rect& b = grid->bounds();

        Rng rng = Rng(config.seed).fork(kFieldStream);
        std::vector<double> cx(bumps), cy(bumps), amp(bumps);
        for (std::size_t k = 0; k < bumps; ++k) {
            cx[k] = rng.uniform(b.xmin - 2.0 * sigma, b.xmax + 2.0 * sigma);
            cy[k] = rng.uniform(b.ymin - 2.0 * sigma, b.ymax + 2.0 * sigma);
            amp[k] = rng.normal();
        }
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (std::size_t i = 0; i < n; ++i) {
            const Point2& p = grid->point(i);
            double acc = 0.0;
            for (std::size_t k = 0; k < bumps; ++k) {
                const double dx = p.x - cx[k];
                const double dy = p.y - cy[k];
                acc += amp[k] * std::exp(-(dx * dx + dy * dy) * inv2s2);
            }
            values[i] = acc;
        }

        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        if (var > 0.0) {
            const double scale = config.log_sd / std::sqrt(var);
            for (double& v : values)
                v = config.log_mean + scale * (v - mean);
        } else {
            std::fill(values.begin(), values.end(), config.log_mean);
        }
    } else {
        std::fill(values.begin(), values.end(), config.log_mean);
    }
    return GridMap(std::move(grid), std::move(values),
                   domain::MapKind::Permeability);
}

std::vector<WellRecord> sample_wells(const GridMap& truth,
                                     const SynthConfig& config) {
    config.validate();
    const auto& grid = truth.grid();
    const Rect& b = grid.bounds();
    const double mx = config.well_margin_frac * (b.xmax - b.xmin);
    const double my = config.well_margin_frac * (b.ymax - b.ymin);

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point2& p = grid.point(i);
        if (p.x >= b.xmin + mx && p.x <= b.xmax - mx && p.y >= b.ymin + my &&
            p.y <= b.ymax - my)
            eligible.push_back(i);
    }
    if (eligible.size() < config.well_count)
        throw InputError("margin box holds fewer grid points than wells");

    Rng rng = Rng(config.seed).fork(kWellStream);
    for (std::size_t i = 0; i < config.well_count; ++i) {
        const std::size_t j = i + rng.below(eligible.size() - i);
        std::swap(eligible[i], eligible[j]);
    }
    std::vector<std::size_t> chosen(eligible.begin(),
                                    eligible.begin() +
                                        static_cast<long>(config.well_count));
    std::sort(chosen.begin(), chosen.end());

    const ingest::RelPermTable table = relperm_table();
    const ingest::FluidProps fluids = fluid_props();

    std::size_t width = 1;
    for (std::size_t c = config.well_count; c >= 10; c /= 10) ++width;

    std::vector<WellRecord> wells;
    wells.reserve(config.well_count);
    for (std::size_t w = 0; w < chosen.size(); ++w) {
        const std::size_t gi = chosen[w];
        const double t = truth.value(gi);

        std::string num = std::to_string(w + 1);
        num.insert(0, width - num.size(), '0');

        WellRecord rec;
        rec.id = "W" + num;
        rec.location = grid.point(gi);

        const double s_w = rng.uniform(0.2, 0.8);
        const double wl_log = config.wl_log_gain * (t - config.log_mean) +
                              config.log_mean + std::log10(config.wl_bias) +
                              config.wl_scatter * rng.normal();
        const double wt_log =
            fusion::synthetic_well_test(truth, rec.location, config.wt_radius) +
            config.wt_scatter * rng.normal();

        rec.k_wl = std::pow(10.0, wl_log);
        rec.k_wt_absolute = std::pow(10.0, wt_log);
        rec.s_w = s_w;
        const ingest::KrPair kr = ingest::interp_relperm(table, s_w);
        const double mobility = kr.kr_o / fluids.mu_o + kr.kr_w / fluids.mu_w;
        rec.k_wt_effective = *rec.k_wt_absolute * fluids.mu_liq * mobility;
        wells.push_back(std::move(rec));
    }
    return wells;
}

SeismicVolume synthesize_seismic(const GridMap& truth,
                                 const SynthConfig& config) {
    config.validate();
    const auto& grid = truth.grid();
    const Rect& b = grid.bounds();
    const std::size_t margin = 4; // traces beyond the grid on every side

    SeismicVolume vol;
    vol.dx = config.spacing / 2.0;
    vol.dy = config.spacing / 2.0;
    vol.dz_ms = 2.0;
    vol.nz = 46;
    vol.ni = 2 * (config.nx - 1) + 1 + 2 * margin;
    vol.nx = 2 * (config.ny - 1) + 1 + 2 * margin;
    vol.origin_x = b.xmin - static_cast<double>(margin) * vol.dx;
    vol.origin_y = b.ymin - static_cast<double>(margin) * vol.dy;
    vol.data.assign(vol.ni * vol.nx * vol.nz, 0.0f);
    vol.horizon.assign(vol.ni * vol.nx,
                       (static_cast<double>(vol.nz) - 1.0) / 2.0);

    const double sd = config.log_sd > 0.0 ? config.log_sd : 1.0;
    std::vector<double> amp(vol.ni * vol.nx);
    for (std::size_t i = 0; i < vol.ni; ++i)
        for (std::size_t j = 0; j < vol.nx; ++j) {
            const double x = vol.origin_x + static_cast<double>(i) * vol.dx;
            const double y = vol.origin_y + static_cast<double>(j) * vol.dy;
            const double t =
                field_at(truth, config.nx, config.ny, b, config.spacing, x, y);
            amp[i * vol.nx + j] = 1.0 / (1.0 + std::exp(-(t - config.log_mean) / sd));
        }

    if (config.seismic_noise > 0.0) {
        Rng rng = Rng(config.seed).fork(kSeismicStream);
        const std::size_t nvox = vol.ni * vol.nx * vol.nz;
        std::vector<double> noise(nvox);
        for (double& v : noise) v = rng.normal();

        // separable box smoothing: +-2 traces in i and j, +-3 samples in z
        const auto smooth_axis = [&](std::size_t n0, std::size_t n1,
                                     std::size_t n2, std::size_t axis,
                                     std::size_t radius) {
            const std::size_t dims[3] = {n0, n1, n2};
            const std::size_t strides[3] = {n1 * n2, n2, 1};
            const std::size_t len = dims[axis];
            std::vector<double> line(len);
            std::size_t oa = (axis + 1) % 3, ob = (axis + 2) % 3;
            for (std::size_t a = 0; a < dims[oa]; ++a)
                for (std::size_t c = 0; c < dims[ob]; ++c) {
                    const std::size_t base = a * strides[oa] + c * strides[ob];
                    for (std::size_t k = 0; k < len; ++k)
                        line[k] = noise[base + k * strides[axis]];
                    for (std::size_t k = 0; k < len; ++k) {
                        const std::size_t lo = k >= radius ? k - radius : 0;
                        const std::size_t hi = std::min(len - 1, k + radius);
                        double acc = 0.0;
                        for (std::size_t m = lo; m <= hi; ++m) acc += line[m];
                        noise[base + k * strides[axis]] =
                            acc / static_cast<double>(hi - lo + 1);
                    }
                }
        };
        smooth_axis(vol.ni, vol.nx, vol.nz, 0, 2);
        smooth_axis(vol.ni, vol.nx, vol.nz, 1, 2);
        smooth_axis(vol.ni, vol.nx, vol.nz, 2, 3);

        double mean = 0.0;
        for (double v : noise) mean += v;
        mean /= static_cast<double>(nvox);
        double var = 0.0;
        for (double v : noise) var += (v - mean) * (v - mean);
        var /= static_cast<double>(nvox);
        const double scale = var > 0.0 ? config.seismic_noise / std::sqrt(var) : 0.0;

        std::size_t v = 0;
        for (std::size_t tr = 0; tr < vol.ni * vol.nx; ++tr)
            for (std::size_t k = 0; k < vol.nz; ++k, ++v)
                vol.data[v] =
                    static_cast<float>(amp[tr] + scale * (noise[v] - mean));
    } else {
        std::size_t v = 0;
        for (std::size_t tr = 0; tr < vol.ni * vol.nx; ++tr)
            for (std::size_t k = 0; k < vol.nz; ++k, ++v)
                vol.data[v] = static_cast<float>(amp[tr]);
    }

    vol.validate();
    return vol;
}

ingest::RelPermTable relperm_table() {
    ingest::RelPermTable table;
    table.rock_type = "default";
    for (int i = 0; i <= 20; ++i) {
        const double s = static_cast<double>(i) / 20.0;
        table.rows.push_back({s, (1.0 - s) * (1.0 - s), s * s});
    }
    return table;
}

ingest::FluidProps fluid_props() {
    ingest::FluidProps f;
    f.mu_o = 5.0;
    f.mu_w = 0.5;
    f.mu_liq = 1.0;
    return f;
}

void emit_dataset(const SynthConfig& config, const std::string& out_dir) {
    config.validate();
    std::filesystem::create_directories(out_dir);
    const auto path = [&](const char* name) {
        return (std::filesystem::path(out_dir) / name).string();
    };

    const GridMap truth = generate_field(config);
    save_grid(truth.grid(), path("grid.json"));
    save_map(truth, path("truth_map.csv"));

    std::vector<WellRecord> wells = sample_wells(truth, config);
    for (WellRecord& w : wells) {
        w.k_wt_absolute.reset(); // downstream must derive it from s_w
        w.k_wl_qq.reset();
    }
    ingest::save_wells(wells, path("wells.csv"));

    ingest::save_relperm(relperm_table(), path("relperm.csv"));
    ingest::save_fluids(fluid_props(), path("fluids.json"));

    const SeismicVolume vol = synthesize_seismic(truth, config);
    ingest::save_seismic(vol, path("seismic.bin"), path("horizon.csv"));

    save_synth_config(config, path("synth.json"));
}

SynthConfig load_synth_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("bad synth config JSON in " + path + ": " + e.what());
    }
    SynthConfig c;
    const auto get = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("nx", c.nx);
    get("ny", c.ny);
    get("spacing", c.spacing);
    get("corr_len_cells", c.corr_len_cells);
    get("log_mean", c.log_mean);
    get("log_sd", c.log_sd);
    get("well_count", c.well_count);
    get("well_margin_frac", c.well_margin_frac);
    get("wl_bias", c.wl_bias);
    get("wl_log_gain", c.wl_log_gain);
    get("wl_scatter", c.wl_scatter);
    get("wt_radius", c.wt_radius);
    get("wt_scatter", c.wt_scatter);
    get("seismic_noise", c.seismic_noise);
    get("seed", c.seed);
    c.validate();
    return c;
}

void save_synth_config(const SynthConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    nlohmann::json j = {
        {"nx", config.nx},
        {"ny", config.ny},
        {"spacing", config.spacing},
        {"corr_len_cells", config.corr_len_cells},
        {"log_mean", config.log_mean},
        {"log_sd", config.log_sd},
        {"well_count", config.well_count},
        {"well_margin_frac", config.well_margin_frac},
        {"wl_bias", config.wl_bias},
        {"wl_log_gain", config.wl_log_gain},
        {"wl_scatter", config.wl_scatter},
        {"wt_radius", config.wt_radius},
        {"wt_scatter", config.wt_scatter},
        {"seismic_noise", config.seismic_noise},
        {"seed", config.seed},
    };
    out << j.dump(2) << "\n";
    if (!out) throw InputError("write failed: " + path);
}

} // namespace permafuse::synthgen
