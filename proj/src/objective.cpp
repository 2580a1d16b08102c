#include "permafuse/objective.hpp"
#include "permafuse/common.hpp"
#include "permafuse/transform.hpp"

#include <algorithm>
#include <cmath>

namespace permafuse::optimize {

using domain::GridMap;
using domain::GridPtr;
using domain::KernelParams;
using domain::distance;
using fusion::kernel_wl;
using fusion::kernel_wt;
using ingest::WellRecord;
using preprocess::to_log10;

double hist_distance_l1(const std::vector<double>& k,
                        const std::vector<double>& k_hat, int bins) {
    if (k.empty() || k_hat.empty()) throw InputError("empty sample");
    if (bins < 2) throw InputError("histogram needs at least 2 bins");

    double lo = k[0], hi = k[0];
    for (double v : k) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : k_hat) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    const auto bin_of = [&](double v) -> std::size_t {
        if (hi == lo) return 0;
        const double t = (v - lo) / (hi - lo) * bins;
        const auto b = static_cast<std::size_t>(t);
        return std::min(b, static_cast<std::size_t>(bins - 1));
    };

    std::vector<double> p(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> q(static_cast<std::size_t>(bins), 0.0);
    for (double v : k) p[bin_of(v)] += 1.0 / static_cast<double>(k.size());
    for (double v : k_hat) q[bin_of(v)] += 1.0 / static_cast<double>(k_hat.size());

    double sum = 0.0;
    for (int b = 0; b < bins; ++b)
        sum += std::abs(p[static_cast<std::size_t>(b)] - q[static_cast<std::size_t>(b)]);
    return std::sqrt(sum) / std::sqrt(2.0);
}

double range_penalty_l2(const std::vector<double>& k,
                        const std::vector<double>& k_hat) {
    if (k.empty() || k_hat.empty()) throw InputError("empty sample");
    const auto mm_k = std::minmax_element(k.begin(), k.end());
    const auto mm_h = std::minmax_element(k_hat.begin(), k_hat.end());
    const double top = std::max(*mm_k.second, *mm_h.second);
    if (top <= 0.0) throw NumericError("degenerate normalization");
    const double range_k = *mm_k.second - *mm_k.first;
    const double range_h = *mm_h.second - *mm_h.first;
    return std::abs(range_k - range_h) / top;
}

Metrics metrics(const std::vector<double>& k, const std::vector<double>& k_hat) {
    if (k.empty() || k.size() != k_hat.size())
        throw InputError("metrics need equal nonzero lengths");
    const double n = static_cast<double>(k.size());
    double mean = 0.0;
    for (double v : k) mean += v;
    mean /= n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double e = k_hat[i] - k[i];
        ss_res += e * e;
        const double d = k[i] - mean;
        ss_tot += d * d;
    }
    if (ss_tot == 0.0) throw NumericError("zero variance in reference values");
    return {ss_res / n, 1.0 - ss_res / ss_tot};
}

LoocvObjective::LoocvObjective(const std::vector<WellRecord>& wells, GridPtr grid,
                               std::optional<GridMap> seismic_map, double c1,
                               double c2, int bins, double r_dr)
    : grid_(std::move(grid)), c1_(c1), c2_(c2), bins_(bins) {
    if (!grid_ || grid_->size() == 0) throw InputError("empty grid");
    if (!(r_dr > 0.0)) throw InputError("drainage radius must be positive");

    std::vector<const WellRecord*> order;
    for (const auto& w : wells)
        if (w.has_wt() || w.has_wl()) order.push_back(&w);
    std::sort(order.begin(), order.end(),
              [](const WellRecord* a, const WellRecord* b) { return a->id < b->id; });
    if (order.empty()) throw InputError("no usable wells");
    if (order.size() < 2)
        throw InputError("cross-validation needs at least 2 usable wells");

    const std::size_t n = order.size();
    const std::size_t m = grid_->size();
    ids_.reserve(n);
    has_wt_.resize(n);
    has_wl_.resize(n);
    wt_log_.resize(n);
    wl_log_.resize(n);
    dist_.resize(n * m);
    drain_w_.resize(n * m);
    drain_sum_.assign(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const WellRecord& w = *order[i];
        ids_.push_back(w.id);
        has_wt_[i] = w.has_wt() ? 1 : 0;
        has_wl_[i] = w.has_wl() ? 1 : 0;
        wt_log_[i] = w.has_wt() ? to_log10(w.wt_value()) : 0.0;
        wl_log_[i] = w.has_wl() ? to_log10(w.wl_value()) : 0.0;
        double esum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double d = distance(grid_->point(j), w.location);
            dist_[i * m + j] = d;
            const double e = std::exp(-d / r_dr);
            drain_w_[i * m + j] = e;
            esum += e;
        }
        drain_sum_[i] = esum;
    }

    if (seismic_map) {
        if (seismic_map->size() != m)
            throw InputError("seismic map grid does not match fusion grid");
        seismic_ = seismic_map->values();
    }
}

LoocvObjective::Detail LoocvObjective::evaluate(const KernelParams& params) const {
    params.validate();
    const std::size_t n = ids_.size();
    const std::size_t m = grid_->size();

    // Per-well contributions to the fusion sums. Leave-one-out maps are
    // assembled from prefix and suffix partial sums of these rows: pure
    // additions, so removing a dominant well cannot cancel.
    std::vector<double> cn(n * m), cd(n * m);
    std::vector<double> num(m, 0.0), den(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* drow = &dist_[i * m];
        double* cnrow = &cn[i * m];
        double* cdrow = &cd[i * m];
        const bool wt = has_wt_[i] != 0;
        const bool wl = has_wl_[i] != 0;
        const double vt = wt_log_[i];
        const double vl = wl_log_[i];
        for (std::size_t j = 0; j < m; ++j) {
            double cnum = 0.0, cden = 0.0;
            if (wt) {
                const double w = kernel_wt(drow[j], params);
                cnum += w * vt;
                cden += w;
            }
            if (wl) {
                const double w = kernel_wl(drow[j], params);
                cnum += w * vl;
                cden += w;
            }
            cnrow[j] = cnum;
            cdrow[j] = cden;
            num[j] += cnum;
            den[j] += cden;
        }
    }
    if (!seismic_.empty()) {
        for (std::size_t j = 0; j < m; ++j) {
            num[j] += params.w_s * seismic_[j];
            den[j] += params.w_s;
        }
    }

    std::vector<double> full(m);
    for (std::size_t j = 0; j < m; ++j) {
        if (den[j] == 0.0) throw NumericError("uncovered grid point");
        full[j] = num[j] / den[j];
    }

    std::vector<double> suf_n((n + 1) * m, 0.0), suf_d((n + 1) * m, 0.0);
    for (std::size_t l = n; l-- > 0;)
        for (std::size_t j = 0; j < m; ++j) {
            suf_n[l * m + j] = suf_n[(l + 1) * m + j] + cn[l * m + j];
            suf_d[l * m + j] = suf_d[(l + 1) * m + j] + cd[l * m + j];
        }

    Detail d;
    d.k.resize(n);
    d.k_hat.resize(n);
    std::vector<double> pre_n(m, 0.0), pre_d(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* erow = &drain_w_[i * m];
        const double* snrow = &suf_n[(i + 1) * m];
        const double* sdrow = &suf_d[(i + 1) * m];
        double tk = 0.0, tkh = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            tk += erow[j] * full[j];
            double nloo = pre_n[j] + snrow[j];
            double dloo = pre_d[j] + sdrow[j];
            if (!seismic_.empty()) {
                nloo += params.w_s * seismic_[j];
                dloo += params.w_s;
            }
            if (dloo <= 0.0) throw NumericError("uncovered grid point");
            tkh += erow[j] * (nloo / dloo);
        }
        d.k[i] = tk / drain_sum_[i];
        d.k_hat[i] = tkh / drain_sum_[i];
        const double* cnrow = &cn[i * m];
        const double* cdrow = &cd[i * m];
        for (std::size_t j = 0; j < m; ++j) {
            pre_n[j] += cnrow[j];
            pre_d[j] += cdrow[j];
        }
    }

    double mean = 0.0;
    for (double v : d.k) mean += v;
    mean /= static_cast<double>(n);
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ss_tot += (d.k[i] - mean) * (d.k[i] - mean);
        ss_res += (d.k_hat[i] - d.k[i]) * (d.k_hat[i] - d.k[i]);
    }
    if (ss_tot == 0.0) throw NumericError("constant synthetic tests");

    d.mse = ss_res / static_cast<double>(n);
    d.r2 = 1.0 - ss_res / ss_tot;
    d.l1 = hist_distance_l1(d.k, d.k_hat, bins_);
    d.l2 = range_penalty_l2(d.k, d.k_hat);
    d.f = 1.0 - d.r2 + c1_ * d.l1 + c2_ * d.l2;
    return d;
}

double loocv_objective(const KernelParams& params,
                       const std::vector<WellRecord>& wells, GridPtr grid,
                       const std::optional<GridMap>& seismic_map, double c1,
                       double c2, int bins) {
    LoocvObjective obj(wells, std::move(grid), seismic_map, c1, c2, bins);
    return obj(params);
}

} // namespace permafuse::optimize
