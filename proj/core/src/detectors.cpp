#include "odc/detectors.hpp"

#include "odc/error.hpp"
#include "odc/normal.hpp"

#include <algorithm>
#include <cmath>

namespace odc {

std::string_view to_string(Method m)
{
    switch (m) {
    case Method::Residual: return "residual";
    case Method::Boxplot: return "boxplot";
    case Method::Score: return "score";
    }
    return "score";
}

std::optional<Method> parse_method(std::string_view text)
{
    if (text == "residual")
        return Method::Residual;
    if (text == "boxplot")
        return Method::Boxplot;
    if (text == "score")
        return Method::Score;
    return std::nullopt;
}

void DetectorConfig::validate() const
{
    if (!(k_r > 0.0) || !(k_b > 0.0))
        throw Error(ErrorKind::InvalidArgument, "k_r and k_b must be positive");
    if (k_s && !(*k_s > 0.0))
        throw Error(ErrorKind::InvalidArgument, "k_s must be positive when given");
    if (!(p_ref > 0.5 && p_ref < 1.0))
        throw Error(ErrorKind::InvalidArgument, "p_ref must lie in (0.5, 1)");
}

namespace {

void require_same_length(std::size_t a, std::size_t b)
{
    if (a != b)
        throw Error(ErrorKind::LengthMismatch, "vectors of length " + std::to_string(a) + " and " +
                                                   std::to_string(b));
}

void require_tau(const QuantileFit& fit, double tau)
{
    if (std::abs(fit.tau - tau) > 1e-12)
        throw Error(ErrorKind::InvalidArgument,
                    "expected a fit at tau = " + std::to_string(tau) + ", got " + std::to_string(fit.tau));
}

std::size_t count_flags(const std::vector<bool>& flags)
{
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

double response_range(std::span<const double> y)
{
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    return *hi - *lo;
}

} // namespace

SigmaEstimate estimate_sigma(std::span<const double> residuals, double p_ref)
{
    if (residuals.empty())
        throw Error(ErrorKind::InvalidArgument, "cannot estimate sigma from no residuals");
    if (!(p_ref > 0.5 && p_ref < 1.0))
        throw Error(ErrorKind::InvalidArgument, "p_ref must lie in (0.5, 1)");

    std::vector<double> abs_r(residuals.size());
    std::transform(residuals.begin(), residuals.end(), abs_r.begin(), [](double r) { return std::abs(r); });
    std::sort(abs_r.begin(), abs_r.end());
    const std::size_t n = abs_r.size();
    const double median = n % 2 == 1 ? abs_r[n / 2] : 0.5 * (abs_r[n / 2 - 1] + abs_r[n / 2]);
    const double sigma = median / normal_quantile(p_ref);
    return {sigma, !(sigma > 0.0)};
}

DetectionResult detect_residual(std::span<const double> responses, std::span<const double> q50,
                                const DetectorConfig& cfg)
{
    require_same_length(responses.size(), q50.size());
    cfg.validate();

    DetectionResult out;
    out.method = Method::Residual;
    out.evidence.resize(responses.size());
    for (std::size_t i = 0; i < responses.size(); ++i)
        out.evidence[i] = responses[i] - q50[i];

    const auto sigma = estimate_sigma(out.evidence, cfg.p_ref);
    const double threshold = cfg.k_r * sigma.sigma;
    out.cutoff.k = cfg.k_r;
    out.cutoff.sigma = sigma.sigma;
    out.cutoff.threshold = threshold;
    out.cutoff.zero_spread = sigma.zero_spread;

    out.flags.resize(responses.size());
    for (std::size_t i = 0; i < responses.size(); ++i)
        out.flags[i] = out.evidence[i] > threshold;
    out.n_outliers = count_flags(out.flags);
    return out;
}

DetectionResult detect_residual(const Dataset& d, const QuantileFit& fit50, const DetectorConfig& cfg)
{
    require_tau(fit50, 0.50);
    return detect_residual(d.times(), predict_rows(fit50, d), cfg);
}

DetectionResult detect_boxplot(std::span<const double> responses, std::span<const double> q25,
                               std::span<const double> q75, const DetectorConfig& cfg)
{
    require_same_length(responses.size(), q25.size());
    require_same_length(responses.size(), q75.size());
    cfg.validate();

    DetectionResult out;
    out.method = Method::Boxplot;
    out.cutoff.k = cfg.k_b;
    out.evidence.resize(responses.size());
    out.flags.resize(responses.size());
    for (std::size_t i = 0; i < responses.size(); ++i) {
        double iqr = q75[i] - q25[i];
        if (iqr < 0.0) {
            iqr = 0.0;
            out.clamped.push_back(i);
        }
        out.evidence[i] = q75[i] + cfg.k_b * iqr;
        out.flags[i] = responses[i] > out.evidence[i];
    }
    out.n_outliers = count_flags(out.flags);
    return out;
}

DetectionResult detect_boxplot(const Dataset& d, const QuantileFit& fit25, const QuantileFit& fit75,
                               const DetectorConfig& cfg)
{
    require_tau(fit25, 0.25);
    require_tau(fit75, 0.75);
    return detect_boxplot(d.times(), predict_rows(fit25, d), predict_rows(fit75, d), cfg);
}

OutlyingScores outlying_scores(std::span<const double> responses, std::span<const double> q25,
                               std::span<const double> q50, std::span<const double> q75)
{
    const std::size_t n = responses.size();
    require_same_length(n, q25.size());
    require_same_length(n, q50.size());
    require_same_length(n, q75.size());

    OutlyingScores out;
    out.scores.resize(n);
    out.upper_side.resize(n);
    if (n == 0)
        return out;
    const double range = response_range(responses);
    const double eps = range > 0.0 ? 1e-8 * range : 1e-8;

    for (std::size_t i = 0; i < n; ++i) {
        const double dev = responses[i] - q50[i];
        // Both branches divide by a positive gap; crossed or coincident
        // quantiles fall back to eps.
        double gap = dev > 0.0 ? q75[i] - q50[i] : q50[i] - q25[i];
        if (gap < eps) {
            gap = eps;
            out.clamped.push_back(i);
        }
        out.scores[i] = std::abs(dev) / gap;
        out.upper_side[i] = dev > 0.0;
    }
    return out;
}

OutlyingScores outlying_scores(const Dataset& d, const QuantileFit& fit25, const QuantileFit& fit50,
                               const QuantileFit& fit75)
{
    require_tau(fit25, 0.25);
    require_tau(fit50, 0.50);
    require_tau(fit75, 0.75);
    return outlying_scores(d.times(), predict_rows(fit25, d), predict_rows(fit50, d), predict_rows(fit75, d));
}

DetectionResult detect_score(const OutlyingScores& scores, const DetectorConfig& cfg,
                             std::span<const int> statuses)
{
    require_same_length(scores.scores.size(), statuses.size());
    if (!scores.upper_side.empty())
        require_same_length(scores.scores.size(), scores.upper_side.size());
    cfg.validate();

    DetectionResult out;
    out.method = Method::Score;
    out.evidence = scores.scores;
    out.clamped = scores.clamped;
    out.upper_side = scores.upper_side.empty() ? std::vector<bool>(scores.scores.size(), true) : scores.upper_side;
    out.flags.assign(scores.scores.size(), false);
    if (!cfg.k_s) {
        out.cutoff.undecided = true;
        return out;
    }
    out.cutoff.k = *cfg.k_s;
    for (std::size_t i = 0; i < out.flags.size(); ++i)
        out.flags[i] = out.upper_side[i] && scores.scores[i] > *cfg.k_s;
    out.n_outliers = count_flags(out.flags);
    return out;
}

} // namespace odc
