#ifndef PERMAFUSE_TRANSFORM_HPP
#define PERMAFUSE_TRANSFORM_HPP

#include <vector>

namespace permafuse::preprocess {

/// Map each value through the empirical quantile function of `target` at
/// the empirical CDF of `source`. Quantiles use plotting positions
/// (i - 0.5)/n with linear interpolation between order statistics; values
/// at or beyond the source extremes clamp to the target extremes. The
/// mapping is monotone non-decreasing.
std::vector<double> qq_transform(const std::vector<double>& source,
                                 const std::vector<double>& target,
                                 const std::vector<double>& values);

/// Map values onto a Gaussian with the sample mean and standard deviation
/// of `sample`, again through plotting-position quantiles.
std::vector<double> qq_log_normalize(const std::vector<double>& sample,
                                     const std::vector<double>& values);

double to_log10(double v);
double from_log10(double v);
std::vector<double> to_log10(const std::vector<double>& values);
std::vector<double> from_log10(const std::vector<double>& values);

/// Inverse standard normal CDF (Acklam's rational approximation, refined
/// with one Halley step; |relative error| far below any use here).
double inverse_normal_cdf(double p);

} // namespace permafuse::preprocess

#endif
