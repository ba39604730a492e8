#pragma once

#include "odc/data_model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace odc {

/// Kernel bandwidth on the min-max scaled covariate axis.
struct BandwidthConfig {
    double h = 0.05;
};

/// Per-observation weights splitting censored mass between the observed time
/// and the far pseudo-response.
struct RedistributionWeights {
    double tau = 0.5;
    std::vector<double> weights;
    std::vector<std::size_t> degenerate; // censored rows whose local CDF reached 1
};

/// Biquadratic kernel (15/16)(1 - u^2)^2 on [-1, 1].
double biquadratic_kernel(double u);

struct NeighborhoodWeights {
    std::vector<double> weights;
    bool fallback = false; // no point inside the kernel support; uniform weights used
};

/// Nadaraya-Watson weights around `x` (scaled covariates). Weights are
/// proportional to K(||x - x_k|| / h) and sum to one.
NeighborhoodWeights nw_weights(std::span<const double> x, const Dataset& d, BandwidthConfig bw);

/// Product-limit CDF with arbitrary non-negative observation weights,
/// evaluated at one time point. Observations with zero weight drop out.
class WeightedKaplanMeier {
public:
    explicit WeightedKaplanMeier(const Dataset& d);

    /// 1 - prod over events Y_j <= t of (1 - B_j / sum_{k: Y_k >= Y_j} B_k)
    double cdf(double t, std::span<const double> weights) const;

private:
    std::vector<std::size_t> order_;      // rows sorted by time ascending (stable)
    std::vector<std::size_t> tie_start_;  // per sorted position: first position with equal time
    std::vector<double> sorted_times_;
    std::vector<int> sorted_status_;
};

/// Local Kaplan-Meier estimate of F(t | x).
double local_km_cdf(double t, std::span<const double> x, const Dataset& d, BandwidthConfig bw);

/// F(Y_i | X_i) for every censored row (events get NaN; they do not need it),
/// plus the number of neighborhood fallbacks that fired.
struct ObservedCdf {
    std::vector<double> values;
    std::size_t neighborhood_fallbacks = 0;
};

ObservedCdf local_cdf_at_censored(const Dataset& d, BandwidthConfig bw);

struct WeightValue {
    double weight = 1.0;
    bool degenerate = false;
};

/// Weight for one observation given F(Y_i | X_i). F == tau returns 1.
WeightValue redistribution_weight(int status, double tau, double cdf_at_obs);

RedistributionWeights redistribution_weights(const Dataset& d, double tau, const ObservedCdf& cdf);

} // namespace odc
