#pragma once

#include "odc/data_model.hpp"
#include "odc/kernel_km.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace odc {

struct SolverDiagnostics {
    std::size_t iterations = 0;
    std::size_t degenerate_pivots = 0;
    std::size_t neighborhood_fallbacks = 0;
    std::size_t pseudo_retries = 0;
};

/// Fitted conditional quantile line at one level. `beta` is intercept first.
struct QuantileFit {
    double tau = 0.5;
    std::vector<double> beta;
    double objective = 0.0;
    double pseudo_response = 0.0;
    SolverDiagnostics diagnostics;
};

/// Check loss u * (tau - 1{u < 0}).
double pinball_loss(double u, double tau);

/// Weighted pinball-loss regression problem. Every observation contributes a
/// row at its response; censored rows with weight < 1 contribute a second,
/// pseudo row at the far response Y* carrying the complementary weight.
struct WeightedQRProblem {
    double tau = 0.5;
    std::vector<std::string> column_names; // "(Intercept)" first
    std::vector<std::vector<double>> design;
    std::vector<double> responses;
    std::vector<double> weights;
    std::vector<std::size_t> source_row;
    std::vector<bool> pseudo;
    double pseudo_response = 0.0;

    std::size_t rows() const noexcept { return responses.size(); }
    std::size_t columns() const noexcept { return column_names.size(); }
    std::size_t pseudo_rows() const;
};

/// max(Y) + 100 (max(Y) - min(Y)) + 1
double default_pseudo_response(std::span<const double> responses);

/// Design rows are (1, stored covariates). For a scaled dataset those are the
/// scaled values; `fit_cqr` maps the coefficients back.
WeightedQRProblem assemble_problem(const Dataset& d, double tau, const RedistributionWeights& w);

/// Exact minimizer of sum weight * rho_tau(response - x'beta).
///
/// Solved as the bounded-variable dual linear program
///     max  y'a   s.t.  X'a = (1 - tau) X'w,  0 <= a <= w
/// with a two-phase primal simplex; the coefficients are the simplex
/// multipliers of the equality rows. Pricing is Dantzig with lowest-index ties
/// and switches to Bland's rule after a run of degenerate pivots.
///
/// If a pseudo row ends up with a non-positive residual, Y* is pushed ten
/// times further above max(Y) and the problem is solved again (3 retries).
QuantileFit solve_weighted_qr(const WeightedQRProblem& prob);

double evaluate_objective(const WeightedQRProblem& prob, std::span<const double> beta);

/// Locally weighted censored quantile regression at one level.
QuantileFit fit_cqr(const Dataset& d, double tau, BandwidthConfig bw);

/// Same, reusing F(Y_i | X_i) computed once for the dataset.
QuantileFit fit_cqr(const Dataset& d, double tau, const ObservedCdf& cdf);

std::vector<QuantileFit> fit_cqr_levels(const Dataset& d, std::span<const double> taus, BandwidthConfig bw);

/// (1, x)' beta with x on the original covariate scale.
double predict_quantile(const QuantileFit& fit, std::span<const double> x);

/// Conditional quantile at every row of `d`.
std::vector<double> predict_rows(const QuantileFit& fit, const Dataset& d);

} // namespace odc
