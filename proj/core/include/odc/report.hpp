#pragma once

#include "odc/cqr_solver.hpp"
#include "odc/data_model.hpp"
#include "odc/detectors.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace odc {

/// The five levels printed by the coefficient table.
inline constexpr double kCoefLevels[] = {0.10, 0.25, 0.50, 0.75, 0.90};

/// Quantile levels a detection method fits.
std::vector<double> required_levels(Method m);

struct ReportOptions {
    std::string data_label;
    double bandwidth = 0.05;
    std::size_t top = 6;
    bool full_listing = false; // append every row with its evidence and flag
};

/// Text summary in the layout of the classic show() output: header, then the
/// top rows in decreasing evidence order with 1-based original row numbers.
std::string render_report(const Dataset& d, const DetectionResult& det, const DetectorConfig& cfg,
                          const ReportOptions& opts);

/// Rows = intercept + covariates, columns q10 ... q90, three decimals.
/// Throws MissingFit when one of the five levels is absent.
std::string coef_table(const std::map<double, QuantileFit>& fits, std::span<const std::string> covariate_names);

struct QqGeometry {
    double slope = 0.0;
    double intercept = 0.0;
    bool has_reference = false;
};

/// Reference line through the first and third quartile points of the
/// (theoretical, sample) pairs. Quartiles use linear interpolation between
/// order statistics on both axes.
QqGeometry qq_reference_line(std::span<const double> scores);

/// Normal QQ plot of scores as a self-contained 600x600 SVG. Events are drawn
/// as circles, censored rows as plus signs; an optional dashed threshold.
std::string qq_plot_svg(std::span<const double> scores, std::span<const int> statuses,
                        std::optional<double> k_s);

void write_text_file(const std::filesystem::path& path, const std::string& content);

} // namespace odc
