#include "odc/report.hpp"

#include "odc/error.hpp"
#include "odc/normal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace odc {

std::vector<double> required_levels(Method m)
{
    switch (m) {
    case Method::Residual: return {0.50};
    case Method::Boxplot: return {0.25, 0.75};
    case Method::Score: return {0.25, 0.50, 0.75};
    }
    return {};
}

namespace {

std::string fmt(const char* pattern, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string pad_left(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

const char* algorithm_label(Method m)
{
    switch (m) {
    case Method::Residual: return "Residual-based algorithm (residual)";
    case Method::Boxplot: return "Boxplot algorithm (boxplot)";
    case Method::Score: return "Scoring algorithm (score)";
    }
    return "";
}

const char* cutoff_name(Method m)
{
    switch (m) {
    case Method::Residual: return "k_r";
    case Method::Boxplot: return "k_b";
    case Method::Score: return "k_s";
    }
    return "";
}

// Ordering key: larger means more outlying.
double rank_key(const Dataset& d, const DetectionResult& det, std::size_t i)
{
    return det.method == Method::Boxplot ? d[i].time - det.evidence[i] : det.evidence[i];
}

class RowTable {
public:
    RowTable(const Dataset& d, const DetectionResult& det)
        : d_(d)
        , det_(det)
    {
        header_ = pad_left("row", 6) + pad_left("times", 9) + pad_left("delta", 6);
        for (const auto& name : d.covariate_names())
            header_ += pad_left(name, std::max<std::size_t>(name.size() + 1, 8));
        switch (det.method) {
        case Method::Residual: header_ += pad_left("residual", 9) + pad_left("sigma", 7); break;
        case Method::Boxplot: header_ += pad_left("UB", 8); break;
        case Method::Score: header_ += pad_left("score", 8); break;
        }
        header_ += " Outlier";
    }

    const std::string& header() const { return header_; }

    std::string row(std::size_t i) const
    {
        std::string s = pad_left(std::to_string(i + 1), 6) + pad_left(fmt("%.2f", d_[i].time), 9) +
                        pad_left(std::to_string(d_[i].status), 6);
        const auto& names = d_.covariate_names();
        for (std::size_t j = 0; j < names.size(); ++j)
            s += pad_left(fmt("%g", d_.raw_covariate(i, j)), std::max<std::size_t>(names[j].size() + 1, 8));
        switch (det_.method) {
        case Method::Residual:
            s += pad_left(fmt("%.2f", det_.evidence[i]), 9) + pad_left(fmt("%.2f", det_.cutoff.sigma.value_or(0)), 7);
            break;
        case Method::Boxplot:
        case Method::Score:
            s += pad_left(fmt("%.2f", det_.evidence[i]), 8);
            break;
        }
        s += det_.flags[i] ? "       *" : "";
        return s;
    }

private:
    const Dataset& d_;
    const DetectionResult& det_;
    std::string header_;
};

} // namespace

std::string render_report(const Dataset& d, const DetectionResult& det, const DetectorConfig& cfg,
                          const ReportOptions& opts)
{
    if (det.flags.size() != d.size() || det.evidence.size() != d.size())
        throw Error(ErrorKind::LengthMismatch, "detection result does not match the dataset");

    std::ostringstream out;
    out << "     Outlier Detection for Censored Data\n\n";
    if (!opts.data_label.empty())
        out << " Data: " << opts.data_label << '\n';
    out << " Algorithm: " << algorithm_label(det.method) << '\n';
    out << " Model: Locally weighted censored quantile regression (h = " << fmt("%g", opts.bandwidth) << ")\n";
    out << " Value for cut-off " << cutoff_name(det.method) << ": ";
    if (det.cutoff.undecided)
        out << " undecided";
    else
        out << ' ' << fmt("%g", det.cutoff.k.value_or(0.0));
    out << '\n';
    if (det.method == Method::Residual) {
        out << " Scale estimate sigma: " << fmt("%.4f", det.cutoff.sigma.value_or(0.0)) << " (p = " << fmt("%g", cfg.p_ref)
            << "), threshold k_r*sigma: " << fmt("%.4f", det.cutoff.threshold.value_or(0.0)) << '\n';
        if (det.cutoff.zero_spread)
            out << " Warning: zero residual spread; every positive residual is flagged\n";
    }
    if (!det.clamped.empty())
        out << " Degeneracy guard fired on " << det.clamped.size() << " row(s)\n";
    out << " # of outliers detected:  " << det.n_outliers << "\n\n";

    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rank_key(d, det, a) > rank_key(d, det, b); });

    const RowTable table(d, det);
    if (det.method == Method::Score) {
        const std::size_t shown = std::min(opts.top, d.size());
        out << " Top " << shown << " outlying scores:\n" << table.header() << '\n';
        for (std::size_t k = 0; k < shown; ++k)
            out << table.row(order[k]) << '\n';
    } else if (det.n_outliers > 0) {
        out << " Outliers detected:\n" << table.header() << '\n';
        std::size_t shown = 0;
        for (std::size_t i : order) {
            if (!det.flags[i])
                continue;
            if (shown == opts.top)
                break;
            out << table.row(i) << '\n';
            ++shown;
        }
        out << ' ' << shown << " of all " << det.n_outliers << " outliers were displayed.\n";
    }

    if (opts.full_listing) {
        out << "\n Full listing:\n" << table.header() << '\n';
        for (std::size_t i = 0; i < d.size(); ++i)
            out << table.row(i) << '\n';
    }
    return out.str();
}

std::string coef_table(const std::map<double, QuantileFit>& fits, std::span<const std::string> covariate_names)
{
    std::vector<const QuantileFit*> columns;
    for (double tau : kCoefLevels) {
        auto it = std::find_if(fits.begin(), fits.end(),
                               [&](const auto& kv) { return std::abs(kv.first - tau) < 1e-12; });
        if (it == fits.end())
            throw Error(ErrorKind::MissingFit, "no fit at tau = " + fmt("%.2f", tau));
        if (it->second.beta.size() != covariate_names.size() + 1)
            throw Error(ErrorKind::DimensionMismatch, "fit has a different number of coefficients");
        columns.push_back(&it->second);
    }

    std::vector<std::string> labels{"(Intercept)"};
    labels.insert(labels.end(), covariate_names.begin(), covariate_names.end());
    std::size_t label_width = 0;
    for (const auto& l : labels)
        label_width = std::max(label_width, l.size());

    std::vector<std::vector<std::string>> cells(labels.size());
    std::size_t width = 3;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        for (const auto* fit : columns) {
            // avoid printing "-0.000"
            const double v = std::abs(fit->beta[r]) < 5e-4 ? 0.0 : fit->beta[r];
            cells[r].push_back(fmt("%.3f", v));
            width = std::max(width, cells[r].back().size());
        }
    }

    std::ostringstream out;
    out << std::string(label_width, ' ');
    for (double tau : kCoefLevels)
        out << ' ' << pad_left("q" + std::to_string(static_cast<int>(std::lround(tau * 100))), width);
    out << '\n';
    for (std::size_t r = 0; r < labels.size(); ++r) {
        out << pad_right(labels[r], label_width);
        for (const auto& c : cells[r])
            out << ' ' << pad_left(c, width);
        out << '\n';
    }
    return out.str();
}

namespace {

double interpolated_quantile(const std::vector<double>& sorted, double p)
{
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size())
        return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::vector<double> theoretical_positions(std::size_t n)
{
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    return t;
}

std::string px(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

double nice_step(double range)
{
    const double raw = range / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    return (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0) * mag;
}

} // namespace

QqGeometry qq_reference_line(std::span<const double> scores)
{
    QqGeometry g;
    if (scores.size() < 2)
        return g;
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    const auto theo = theoretical_positions(sorted.size());
    const double t1 = interpolated_quantile(theo, 0.25);
    const double t3 = interpolated_quantile(theo, 0.75);
    if (!(t3 > t1))
        return g;
    const double s1 = interpolated_quantile(sorted, 0.25);
    const double s3 = interpolated_quantile(sorted, 0.75);
    g.slope = (s3 - s1) / (t3 - t1);
    g.intercept = s1 - g.slope * t1;
    g.has_reference = true;
    return g;
}

std::string qq_plot_svg(std::span<const double> scores, std::span<const int> statuses, std::optional<double> k_s)
{
    if (scores.size() != statuses.size())
        throw Error(ErrorKind::LengthMismatch, "scores and statuses differ in length");
    if (scores.empty())
        throw Error(ErrorKind::InvalidArgument, "nothing to plot");
    for (double s : scores) {
        if (!std::isfinite(s))
            throw Error(ErrorKind::InvalidArgument, "scores must be finite");
    }

    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    const auto theo = theoretical_positions(n);
    const auto line = qq_reference_line(scores);

    constexpr double size = 600.0;
    constexpr double margin = 40.0;
    constexpr double inner = size - 2.0 * margin;

    double xmin = theo.front();
    double xmax = theo.back();
    double ymin = scores[order.front()];
    double ymax = scores[order.back()];
    if (k_s) {
        ymin = std::min(ymin, *k_s);
        ymax = std::max(ymax, *k_s);
    }
    auto widen = [](double& lo, double& hi) {
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    };
    widen(xmin, xmax);
    widen(ymin, ymax);
    auto to_x = [&](double t) { return margin + (t - xmin) / (xmax - xmin) * inner; };
    auto to_y = [&](double s) { return size - margin - (s - ymin) / (ymax - ymin) * inner; };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n"
        << "<title>Normal QQ plot of outlying scores</title>\n"
        << "<defs><clipPath id=\"plot-area\"><rect x=\"40\" y=\"40\" width=\"520\" height=\"520\"/></clipPath></defs>\n"
        << "<rect x=\"0\" y=\"0\" width=\"600\" height=\"600\" fill=\"white\"/>\n"
        << "<rect class=\"frame\" x=\"40\" y=\"40\" width=\"520\" height=\"520\" fill=\"none\" stroke=\"black\"/>\n";

    svg << "<g class=\"ticks\" stroke=\"black\">\n";
    const double xs = nice_step(xmax - xmin);
    for (double t = std::ceil(xmin / xs) * xs; t <= xmax; t += xs)
        svg << "<line x1=\"" << px(to_x(t)) << "\" y1=\"560\" x2=\"" << px(to_x(t)) << "\" y2=\"566\"/>\n";
    const double ys = nice_step(ymax - ymin);
    for (double s = std::ceil(ymin / ys) * ys; s <= ymax; s += ys)
        svg << "<line x1=\"34\" y1=\"" << px(to_y(s)) << "\" x2=\"40\" y2=\"" << px(to_y(s)) << "\"/>\n";
    svg << "</g>\n";

    if (line.has_reference) {
        svg << "<line class=\"reference\" data-slope=\"" << to_decimal17(line.slope) << "\" data-intercept=\""
            << to_decimal17(line.intercept) << "\" x1=\"" << px(to_x(xmin)) << "\" y1=\""
            << px(to_y(line.intercept + line.slope * xmin)) << "\" x2=\"" << px(to_x(xmax)) << "\" y2=\""
            << px(to_y(line.intercept + line.slope * xmax))
            << "\" stroke=\"red\" stroke-width=\"1.5\" clip-path=\"url(#plot-area)\"/>\n";
    }
    if (k_s) {
        svg << "<line class=\"threshold\" data-value=\"" << to_decimal17(*k_s) << "\" x1=\"40\" y1=\""
            << px(to_y(*k_s)) << "\" x2=\"560\" y2=\"" << px(to_y(*k_s))
            << "\" stroke=\"blue\" stroke-dasharray=\"2,3\"/>\n";
    }

    svg << "<g class=\"points\" fill=\"none\" stroke=\"black\">\n";
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        const std::string cx = px(to_x(theo[k]));
        const std::string cy = px(to_y(scores[i]));
        if (statuses[i] == 1)
            svg << "<path class=\"event\" data-row=\"" << i + 1 << "\" d=\"M" << cx << ' ' << cy
                << " m-4 0 a4 4 0 1 0 8 0 a4 4 0 1 0 -8 0\"/>\n";
        else
            svg << "<path class=\"censored\" data-row=\"" << i + 1 << "\" d=\"M" << cx << ' ' << cy
                << " m-4 0 h8 m-4 -4 v8\"/>\n";
    }
    svg << "</g>\n</svg>\n";
    return svg.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << content;
    if (!out)
        throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

} // namespace odc
