#include "odc/error.hpp"
#include "odc/normal.hpp"
#include "odc/report.hpp"
#include "odc/simulator.hpp"

#include <doctest.h>

#include <regex>
#include <sstream>

using namespace odc;

namespace {

struct Glyph {
    std::string kind;
    int row = 0;
    double x = 0, y = 0;
};

std::vector<Glyph> glyphs(const std::string& svg)
{
    std::regex re(R"re(<path class="(event|censored)" data-row="(\d+)" d="M([-0-9.]+) ([-0-9.]+) )re");
    std::vector<Glyph> out;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
        out.push_back({(*it)[1], std::stoi((*it)[2]), std::stod((*it)[3]), std::stod((*it)[4])});
    return out;
}

std::optional<double> attr(const std::string& svg, const std::string& cls, const std::string& name)
{
    std::regex re("class=\"" + cls + "\"[^>]*" + name + "=\"([^\"]+)\"");
    std::smatch m;
    if (!std::regex_search(svg, m, re))
        return std::nullopt;
    return std::stod(m[1]);
}

std::size_t occurrences(const std::string& text, const std::string& what)
{
    std::size_t n = 0;
    for (auto pos = text.find(what); pos != std::string::npos; pos = text.find(what, pos + 1))
        ++n;
    return n;
}

QuantileFit constant_fit(double tau, std::vector<double> beta)
{
    QuantileFit f;
    f.tau = tau;
    f.beta = std::move(beta);
    return f;
}

} // namespace

TEST_CASE("coefficient table")
{
    std::map<double, QuantileFit> fits;
    for (double tau : kCoefLevels)
        fits[tau] = constant_fit(tau, {7.0});
    auto text = coef_table(fits, {});
    CHECK(occurrences(text, "7.000") == 5);
    CHECK(text.find("q10") != std::string::npos);
    CHECK(text.find("q90") != std::string::npos);
    CHECK(text.find("(Intercept)") != std::string::npos);

    std::map<double, QuantileFit> two;
    for (double tau : kCoefLevels)
        two[tau] = constant_fit(tau, {3.332, -0.091});
    std::vector<std::string> names{"meta"};
    auto t2 = coef_table(two, names);
    CHECK(std::count(t2.begin(), t2.end(), '\n') == 3);
    CHECK(occurrences(t2, "-0.091") == 5);

    two.erase(0.90);
    try {
        coef_table(two, names);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingFit);
    }
}

TEST_CASE("required levels")
{
    CHECK(required_levels(Method::Residual) == std::vector<double>{0.5});
    CHECK(required_levels(Method::Boxplot) == std::vector<double>{0.25, 0.75});
    CHECK(required_levels(Method::Score) == std::vector<double>{0.25, 0.5, 0.75});
}

TEST_CASE("qq plot with one score")
{
    std::vector<double> s{1.5};
    std::vector<int> st{1};
    auto svg = qq_plot_svg(s, st, std::nullopt);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(glyphs(svg).size() == 1);
    CHECK_FALSE(attr(svg, "reference", "data-slope").has_value());
}

TEST_CASE("qq reference line through exact normal quantiles")
{
    const std::size_t n = 41;
    std::vector<double> s;
    for (std::size_t i = 1; i <= n; ++i)
        s.push_back(normal_quantile((i - 0.5) / n));
    std::vector<int> st(n, 1);
    auto svg = qq_plot_svg(s, st, std::nullopt);
    CHECK(std::abs(attr(svg, "reference", "data-slope").value() - 1.0) <= 1e-9);
    CHECK(std::abs(attr(svg, "reference", "data-intercept").value()) <= 1e-9);
}

TEST_CASE("threshold line separates flagged glyphs")
{
    std::vector<double> s{0.1, 0.5, 4.6, 1.2, 4.5, 2.5, 0.9, 3.9};
    std::vector<int> st{1, 0, 0, 1, 1, 0, 1, 1};
    auto svg = qq_plot_svg(s, st, 4.0);
    const double ty = attr(svg, "threshold", "y1").value();
    CHECK(attr(svg, "threshold", "data-value").value() == 4.0);
    auto g = glyphs(svg);
    REQUIRE(g.size() == s.size());
    int above = 0;
    for (const auto& p : g) {
        above += p.y < ty;
        CHECK(p.kind == (st[p.row - 1] == 1 ? "event" : "censored"));
    }
    CHECK(above == 2);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
}

TEST_CASE("qq plot output is stable")
{
    std::vector<double> s{3, 1, 4, 1, 5, 9, 2, 6};
    std::vector<int> st{1, 0, 1, 1, 0, 1, 0, 1};
    CHECK(qq_plot_svg(s, st, 2.0) == qq_plot_svg(s, st, 2.0));
    CHECK(qq_plot_svg(s, st, 2.0) != qq_plot_svg(s, st, 3.0));
    CHECK_THROWS_AS(qq_plot_svg(s, std::vector<int>{1}, 2.0), Error);
}

TEST_CASE("report header and star count")
{
    SimConfig cfg;
    cfg.c = 5.0;
    auto d = scale_covariates(generate_dataset(cfg, 0).data);
    auto cdf = local_cdf_at_censored(d, cfg.bandwidth);
    auto f25 = fit_cqr(d, 0.25, cdf), f50 = fit_cqr(d, 0.5, cdf), f75 = fit_cqr(d, 0.75, cdf);
    auto scores = outlying_scores(d, f25, f50, f75);

    DetectorConfig c{Method::Score};
    ReportOptions opts{"sim", 0.05, 6, true};
    auto undecided = render_report(d, detect_score(scores, c, d.statuses()), c, opts);
    CHECK(undecided.find("# of outliers detected:  0") != std::string::npos);
    CHECK(undecided.find("undecided") != std::string::npos);
    CHECK(undecided.find("Top 6 outlying scores") != std::string::npos);
    CHECK(undecided.find("Locally weighted censored quantile regression") != std::string::npos);

    for (double k : {2.0, 3.0, 4.0}) {
        c.k_s = k;
        auto det = detect_score(scores, c, d.statuses());
        auto text = render_report(d, det, c, opts);
        auto listing = text.substr(text.find("Full listing"));
        CHECK(occurrences(listing, "*") == det.n_outliers);
        CHECK(text.find("# of outliers detected:  " + std::to_string(det.n_outliers) + "\n") != std::string::npos);
    }

    DetectorConfig b{Method::Boxplot};
    b.k_b = 1.0;
    auto bd = detect_boxplot(d, f25, f75, b);
    auto bt = render_report(d, bd, b, opts);
    CHECK(bt.find("of all " + std::to_string(bd.n_outliers) + " outliers were displayed") != std::string::npos);
    CHECK(occurrences(bt.substr(bt.find("Full listing")), "*") == bd.n_outliers);
}
