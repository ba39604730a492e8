#include "odc/error.hpp"
#include "odc/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace odc;

namespace {

SimConfig small_config()
{
    SimConfig cfg;
    cfg.replicates = 6;
    cfg.seed = 99;
    return cfg;
}

void check_same(const StudyResult& a, const StudyResult& b)
{
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CHECK(a.cells[i].metrics.tp == b.cells[i].metrics.tp);
        CHECK(a.cells[i].metrics.fp == b.cells[i].metrics.fp);
        CHECK(a.cells[i].metrics.accuracy == b.cells[i].metrics.accuracy);
    }
    CHECK(a.mean_censoring_rate == b.mean_censoring_rate);
}

} // namespace

TEST_CASE("noise scale at the smallest covariate")
{
    CHECK(std::sqrt(std::exp(3.0 - 1.0 / 8.0)) == doctest::Approx(4.2098).epsilon(1e-4));
}

TEST_CASE("generated rows follow the model structure")
{
    SimConfig cfg;
    cfg.c = 3.0;
    for (std::size_t r = 0; r < 10; ++r) {
        auto sim = generate_dataset(cfg, r);
        const auto& d = sim.data;
        REQUIRE(d.size() == 500);
        CHECK(d.response_transform() == ResponseTransform::Log);
        CHECK(std::count(sim.truth.begin(), sim.truth.end(), true) == 20);
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double x = d[i].covariates[0];
            CHECK(x == std::floor(x));
            CHECK(x >= 1.0);
            CHECK(x <= 20.0);
            if (sim.truth[i]) {
                CHECK(i >= 480);
                CHECK(d[i].status == 1);
                const double sigma = std::exp((3.0 - x / 8.0) / 2.0);
                CHECK(d[i].time >= 10.0 - 0.3 * x + 3.0 * sigma - 1e-12);
            } else if (d[i].status == 0) {
                CHECK(d[i].time > 0.0);
                CHECK(d[i].time < 40.0);
            }
        }
        CHECK(sim.censoring_rate >= 0.0);
        CHECK(sim.censoring_rate <= 1.0);
    }
}

TEST_CASE("streams are pure functions of seed, replicate and purpose")
{
    ReplicateStream a(1, 2, StreamPurpose::Noise), b(1, 2, StreamPurpose::Noise);
    ReplicateStream c(1, 3, StreamPurpose::Noise), e(1, 2, StreamPurpose::Censor);
    double ua = a.uniform(), ub = b.uniform();
    CHECK(ua == ub);
    CHECK(c.uniform() != ua);
    CHECK(e.uniform() != ua);
    for (int i = 0; i < 1000; ++i) {
        double u = a.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        int k = b.discrete(1, 20);
        CHECK(k >= 1);
        CHECK(k <= 20);
    }

    SimConfig cfg;
    auto late = generate_dataset(cfg, 7);
    generate_dataset(cfg, 3);
    auto again = generate_dataset(cfg, 7);
    CHECK(late.data.times() == again.data.times());
    CHECK(generate_dataset(cfg, 8).data.times() != late.data.times());
}

TEST_CASE("evaluate detection")
{
    std::vector<bool> truth(500, false);
    for (std::size_t i = 480; i < 500; ++i)
        truth[i] = true;
    auto perfect = evaluate_detection(truth, truth);
    CHECK(perfect.sensitivity == 1.0);
    CHECK(perfect.specificity == 1.0);
    CHECK(perfect.fp == 0.0);
    CHECK(perfect.fn == 0.0);

    auto none = evaluate_detection(std::vector<bool>(500, false), truth);
    CHECK(none.accuracy == doctest::Approx(0.96));
    CHECK(none.sensitivity == 0.0);
    CHECK(none.specificity == 1.0);

    CHECK_THROWS_AS(evaluate_detection(std::vector<bool>(3, false), truth), Error);
}

TEST_CASE("study invariants")
{
    auto cfg = small_config();
    auto res = run_study(cfg);
    CHECK(res.replicates_requested == 6);
    CHECK(res.failures == 0);
    REQUIRE(res.cells.size() == cfg.grid.size());
    for (const auto& cell : res.cells) {
        const auto& m = cell.metrics;
        CHECK(m.replicates_used == 6);
        CHECK(m.tp + m.fn == doctest::Approx(20.0));
        CHECK(m.fp + m.tn == doctest::Approx(480.0));
        CHECK(m.n_selected == doctest::Approx(m.tp + m.fp));
        CHECK(std::abs(m.accuracy - (m.tp + m.tn) / 500.0) <= 1e-12);
        CHECK(std::abs(m.sensitivity - m.tp / (m.tp + m.fn)) <= 1e-12);
        CHECK(std::abs(m.specificity - m.tn / (m.tn + m.fp)) <= 1e-12);
    }
    // n_selected falls as the cutoff rises within a method
    for (std::size_t i = 1; i < res.cells.size(); ++i) {
        const auto& a = res.cells[i - 1];
        const auto& b = res.cells[i];
        if (a.method == b.method && a.cutoff < b.cutoff)
            CHECK(b.metrics.n_selected <= a.metrics.n_selected);
    }
}

TEST_CASE("study output does not depend on scheduling")
{
    auto cfg = small_config();
    cfg.threads = 1;
    auto serial = run_study(cfg);
    cfg.threads = 4;
    auto parallel = run_study(cfg);
    check_same(serial, parallel);
    check_same(serial, run_study(cfg));
}

TEST_CASE("study csv layout")
{
    auto cfg = small_config();
    cfg.replicates = 1;
    cfg.grid = {{Method::Boxplot, 1.0}};
    std::vector<StudyResult> res{run_study(cfg)};
    std::ostringstream out;
    write_study_csv(out, res);
    auto text = out.str();
    CHECK(text.rfind("c,censor_upper,method,cutoff,accuracy,sensitivity,specificity,tp,fp,tn,fn,n_selected,"
                     "replicates_used\n",
                     0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("config validation")
{
    SimConfig cfg;
    cfg.replicates = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.censor_upper = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.c = -1;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
