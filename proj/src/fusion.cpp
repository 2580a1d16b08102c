#include "permafuse/fusion.hpp"
#include "permafuse/common.hpp"
#include "permafuse/transform.hpp"

#include <algorithm>
#include <cmath>

namespace permafuse::fusion {

using domain::GridMap;
using domain::GridPtr;
using domain::KernelParams;
using domain::MapKind;
using domain::Point2;
using domain::distance;
using ingest::WellRecord;
using preprocess::to_log10;

FusionResult fuse_map(const std::vector<WellRecord>& wells,
                      const std::optional<GridMap>& seismic_map,
                      const KernelParams& params, GridPtr grid) {
    params.validate();
    if (!grid || grid->size() == 0) throw InputError("empty grid");
    if (seismic_map && seismic_map->grid_ptr().get() != grid.get() &&
        seismic_map->size() != grid->size())
        throw InputError("seismic map grid does not match fusion grid");

    // Id order makes the summation order, and therefore the result,
    // independent of how the input list happened to be arranged.
    std::vector<const WellRecord*> order;
    order.reserve(wells.size());
    for (const auto& w : wells)
        if (w.has_wt() || w.has_wl()) order.push_back(&w);
    std::sort(order.begin(), order.end(),
              [](const WellRecord* a, const WellRecord* b) { return a->id < b->id; });

    if (order.empty() && !seismic_map)
        throw InputError("no usable sources: no well values and no seismic map");

    struct Source {
        Point2 at;
        bool wt = false;
        bool wl = false;
        double wt_log = 0.0;
        double wl_log = 0.0;
    };
    std::vector<Source> sources;
    sources.reserve(order.size());
    for (const WellRecord* w : order) {
        Source s;
        s.at = w->location;
        if (w->has_wt()) {
            s.wt = true;
            s.wt_log = to_log10(w->wt_value());
        }
        if (w->has_wl()) {
            s.wl = true;
            s.wl_log = to_log10(w->wl_value());
        }
        sources.push_back(s);
    }

    const std::size_t n = grid->size();
    std::vector<double> perm(n), conf(n);
    for (std::size_t j = 0; j < n; ++j) {
        const Point2& r = grid->point(j);
        double num = 0.0, den = 0.0;
        for (const Source& s : sources) {
            const double d = distance(r, s.at);
            if (s.wt) {
                const double w = kernel_wt(d, params);
                num += w * s.wt_log;
                den += w;
            }
            if (s.wl) {
                const double w = kernel_wl(d, params);
                num += w * s.wl_log;
                den += w;
            }
        }
        if (seismic_map) {
            num += params.w_s * seismic_map->value(j);
            den += params.w_s;
        }
        if (den == 0.0) throw NumericError("uncovered grid point");
        perm[j] = num / den;
        conf[j] = den;
    }

    FusionResult res{GridMap(grid, std::move(perm), MapKind::Permeability),
                     GridMap(grid, std::move(conf), MapKind::Confidence), params,
                     seismic_map.has_value(), sources.size()};
    return res;
}

double synthetic_well_test(const GridMap& map, const Point2& well_position,
                           double r_dr) {
    if (!(r_dr > 0.0)) throw InputError("drainage radius must be positive");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < map.size(); ++j) {
        const double w = std::exp(-distance(map.grid().point(j), well_position) / r_dr);
        num += w * map.value(j);
        den += w;
    }
    return num / den;
}

} // namespace permafuse::fusion
