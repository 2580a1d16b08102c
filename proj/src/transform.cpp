#include "permafuse/transform.hpp"
#include "permafuse/common.hpp"

#include <algorithm>
#include <cmath>

namespace permafuse::preprocess {

namespace {

bool has_two_distinct(const std::vector<double>& sorted) {
    return sorted.size() >= 2 && sorted.front() < sorted.back();
}

/// Empirical CDF at v under plotting positions (i - 0.5)/n, linear between
/// order statistics, clamped to [p_1, p_n] outside the sample range.
double ecdf(const std::vector<double>& sorted, double v) {
    const std::size_t n = sorted.size();
    const double lo = 0.5 / static_cast<double>(n);
    const double hi = (static_cast<double>(n) - 0.5) / static_cast<double>(n);
    if (v <= sorted.front()) return lo;
    if (v >= sorted.back()) return hi;
    auto it = std::upper_bound(sorted.begin(), sorted.end(), v);
    const std::size_t j = static_cast<std::size_t>(it - sorted.begin());
    const double a = sorted[j - 1];
    const double b = sorted[j];
    const double pa = (static_cast<double>(j) - 0.5) / static_cast<double>(n);
    const double pb = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
    if (b == a) return pa;
    return pa + (pb - pa) * (v - a) / (b - a);
}

/// Empirical quantile: inverse of ecdf, clamped to sample extremes.
double equantile(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    const double h = p * static_cast<double>(n) - 0.5;
    if (h <= 0.0) return sorted.front();
    if (h >= static_cast<double>(n - 1)) return sorted.back();
    const std::size_t j = static_cast<std::size_t>(h);
    const double t = h - static_cast<double>(j);
    return sorted[j] + t * (sorted[j + 1] - sorted[j]);
}

} // namespace

std::vector<double> qq_transform(const std::vector<double>& source,
                                 const std::vector<double>& target,
                                 const std::vector<double>& values) {
    std::vector<double> src = source;
    std::vector<double> tgt = target;
    std::sort(src.begin(), src.end());
    std::sort(tgt.begin(), tgt.end());
    if (!has_two_distinct(src) || !has_two_distinct(tgt))
        throw InputError("degenerate sample");

    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(equantile(tgt, ecdf(src, v)));
    return out;
}

std::vector<double> qq_log_normalize(const std::vector<double>& sample,
                                     const std::vector<double>& values) {
    std::vector<double> src = sample;
    std::sort(src.begin(), src.end());
    if (!has_two_distinct(src)) throw InputError("degenerate sample");

    double mean = 0.0;
    for (double v : src) mean += v;
    mean /= static_cast<double>(src.size());
    double var = 0.0;
    for (double v : src) var += (v - mean) * (v - mean);
    var /= static_cast<double>(src.size() - 1);
    const double sd = std::sqrt(var);

    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values)
        out.push_back(mean + sd * inverse_normal_cdf(ecdf(src, v)));
    return out;
}

double to_log10(double v) {
    if (!(v > 0.0)) throw InputError("non-positive permeability");
    return std::log10(v);
}

double from_log10(double v) { return std::pow(10.0, v); }

std::vector<double> to_log10(const std::vector<double>& values) {
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(to_log10(v));
    return out;
}

std::vector<double> from_log10(const std::vector<double>& values) {
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(from_log10(v));
    return out;
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0) || !(p < 1.0)) throw InputError("probability out of (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley refinement against the exact CDF via erfc.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

} // namespace permafuse::preprocess
