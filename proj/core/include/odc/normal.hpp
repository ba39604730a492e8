#pragma once

namespace odc {

/// Standard normal CDF.
double normal_cdf(double z);

/// Inverse of the standard normal CDF for p in (0, 1).
///
/// Acklam's rational approximation followed by one Halley correction step,
/// which brings the absolute error below 1e-13 across the open interval.
/// Returns -inf / +inf at p = 0 / 1 and NaN outside [0, 1].
double normal_quantile(double p);

} // namespace odc
