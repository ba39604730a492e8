#pragma once

#include "odc/cqr_solver.hpp"
#include "odc/data_model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace odc {

enum class Method { Residual, Boxplot, Score };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view text);

struct DetectorConfig {
    Method method = Method::Score;
    double k_r = 1.5;
    double k_b = 1.5;
    std::optional<double> k_s;
    double p_ref = 0.75; // quantile fed to the inverse normal CDF for sigma

    /// Throws InvalidArgument on a non-positive cutoff or p_ref outside (0.5, 1).
    void validate() const;
};

struct CutoffInfo {
    std::optional<double> k;         // the cutoff parameter that was applied
    std::optional<double> sigma;     // residual method only
    std::optional<double> threshold; // residual method: k_r * sigma
    bool zero_spread = false;        // residual method: median |r| was 0
    bool undecided = false;          // score method without k_s
};

/// Per-observation flags plus the evidence that produced them: residuals,
/// upper fences or outlying scores, depending on the method.
struct DetectionResult {
    Method method = Method::Score;
    std::vector<bool> flags;
    std::vector<double> evidence;
    CutoffInfo cutoff;
    std::size_t n_outliers = 0;
    std::vector<std::size_t> clamped;
    std::vector<bool> upper_side; // score method: Y_i > Q(0.50 | X_i)
};

struct SigmaEstimate {
    double sigma = 0.0;
    bool zero_spread = false;
};

/// median |r_i| / Phi^{-1}(p_ref); even counts use the midpoint of the two
/// central order statistics.
SigmaEstimate estimate_sigma(std::span<const double> residuals, double p_ref = 0.75);

DetectionResult detect_residual(std::span<const double> responses, std::span<const double> q50,
                                const DetectorConfig& cfg);
DetectionResult detect_residual(const Dataset& d, const QuantileFit& fit50, const DetectorConfig& cfg);

DetectionResult detect_boxplot(std::span<const double> responses, std::span<const double> q25,
                               std::span<const double> q75, const DetectorConfig& cfg);
DetectionResult detect_boxplot(const Dataset& d, const QuantileFit& fit25, const QuantileFit& fit75,
                               const DetectorConfig& cfg);

struct OutlyingScores {
    std::vector<double> scores;
    std::vector<bool> upper_side;     // Y_i > Q(0.50 | X_i); empty means all upper
    std::vector<std::size_t> clamped; // rows whose denominator hit the guard
};

OutlyingScores outlying_scores(std::span<const double> responses, std::span<const double> q25,
                               std::span<const double> q50, std::span<const double> q75);
OutlyingScores outlying_scores(const Dataset& d, const QuantileFit& fit25, const QuantileFit& fit50,
                               const QuantileFit& fit75);

/// Flags s_i > k_s for rows above the conditional median; both tails are
/// scored but only too-large responses are declared outliers. With no k_s
/// nothing is flagged and the cutoff is reported as undecided. `statuses` is
/// only checked for length.
DetectionResult detect_score(const OutlyingScores& scores, const DetectorConfig& cfg,
                             std::span<const int> statuses);

} // namespace odc
