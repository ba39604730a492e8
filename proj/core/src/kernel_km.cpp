#include "odc/kernel_km.hpp"

#include "odc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace odc {

double biquadratic_kernel(double u)
{
    if (!(std::abs(u) <= 1.0))
        return 0.0;
    const double v = 1.0 - u * u;
    return 15.0 / 16.0 * v * v;
}

NeighborhoodWeights nw_weights(std::span<const double> x, const Dataset& d, BandwidthConfig bw)
{
    if (!(bw.h > 0.0))
        throw Error(ErrorKind::InvalidArgument, "bandwidth must be positive");
    const std::size_t p = d.dimension();
    if (x.size() != p)
        throw Error(ErrorKind::DimensionMismatch, "evaluation point has " + std::to_string(x.size()) +
                                                      " covariates, dataset has " + std::to_string(p));
    if (p > 0 && !d.is_scaled())
        throw Error(ErrorKind::InvalidArgument, "kernel weights require min-max scaled covariates");

    const std::size_t n = d.size();
    NeighborhoodWeights out;
    out.weights.resize(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& xk = d[k].covariates;
        double sq = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double diff = x[j] - xk[j];
            sq += diff * diff;
        }
        out.weights[k] = biquadratic_kernel(std::sqrt(sq) / bw.h);
        total += out.weights[k];
    }
    if (!(total > 0.0)) {
        std::fill(out.weights.begin(), out.weights.end(), 1.0 / static_cast<double>(n));
        out.fallback = true;
        return out;
    }
    for (auto& w : out.weights)
        w /= total;
    return out;
}

WeightedKaplanMeier::WeightedKaplanMeier(const Dataset& d)
    : order_(d.size())
{
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return d[a].time < d[b].time; });
    sorted_times_.reserve(order_.size());
    sorted_status_.reserve(order_.size());
    tie_start_.resize(order_.size());
    for (std::size_t pos = 0; pos < order_.size(); ++pos) {
        sorted_times_.push_back(d[order_[pos]].time);
        sorted_status_.push_back(d[order_[pos]].status);
        tie_start_[pos] = (pos > 0 && sorted_times_[pos] == sorted_times_[pos - 1]) ? tie_start_[pos - 1] : pos;
    }
}

double WeightedKaplanMeier::cdf(double t, std::span<const double> weights) const
{
    const std::size_t n = order_.size();
    if (weights.size() != n)
        throw Error(ErrorKind::LengthMismatch, "weight vector length differs from dataset size");
    if (n == 0 || t < sorted_times_.front())
        return 0.0;

    // at-risk mass: suffix sums over the time-sorted rows
    std::vector<double> at_risk(n + 1, 0.0);
    for (std::size_t pos = n; pos-- > 0;)
        at_risk[pos] = at_risk[pos + 1] + weights[order_[pos]];

    double survival = 1.0;
    for (std::size_t pos = 0; pos < n && sorted_times_[pos] <= t; ++pos) {
        if (sorted_status_[pos] != 1)
            continue;
        const double b = weights[order_[pos]];
        if (b <= 0.0)
            continue;
        const double risk = at_risk[tie_start_[pos]];
        survival *= std::max(0.0, 1.0 - b / risk);
    }
    return std::clamp(1.0 - survival, 0.0, 1.0);
}

double local_km_cdf(double t, std::span<const double> x, const Dataset& d, BandwidthConfig bw)
{
    const auto nw = nw_weights(x, d, bw);
    return WeightedKaplanMeier(d).cdf(t, nw.weights);
}

ObservedCdf local_cdf_at_censored(const Dataset& d, BandwidthConfig bw)
{
    ObservedCdf out;
    out.values.assign(d.size(), std::numeric_limits<double>::quiet_NaN());
    const WeightedKaplanMeier km(d);
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i].status == 1)
            continue;
        const auto nw = nw_weights(d[i].covariates, d, bw);
        if (nw.fallback)
            ++out.neighborhood_fallbacks;
        out.values[i] = km.cdf(d[i].time, nw.weights);
    }
    return out;
}

WeightValue redistribution_weight(int status, double tau, double cdf_at_obs)
{
    if (!(tau > 0.0 && tau < 1.0))
        throw Error(ErrorKind::InvalidArgument, "tau must lie in (0, 1)");
    if (status == 1)
        return {1.0, false};
    if (cdf_at_obs >= 1.0 - 1e-12)
        return {1.0, true};
    if (cdf_at_obs >= tau)
        return {1.0, false};
    return {(tau - cdf_at_obs) / (1.0 - cdf_at_obs), false};
}

RedistributionWeights redistribution_weights(const Dataset& d, double tau, const ObservedCdf& cdf)
{
    if (cdf.values.size() != d.size())
        throw Error(ErrorKind::LengthMismatch, "observed CDF vector length differs from dataset size");
    RedistributionWeights out;
    out.tau = tau;
    out.weights.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto w = redistribution_weight(d[i].status, tau, cdf.values[i]);
        out.weights[i] = w.weight;
        if (w.degenerate)
            out.degenerate.push_back(i);
    }
    return out;
}

} // namespace odc
