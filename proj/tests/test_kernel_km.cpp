#include "odc/error.hpp"
#include "odc/kernel_km.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

using namespace odc;

namespace {

// Textbook product-limit estimate: group events by distinct time, multiply
// (1 - d_j / R_j) for every distinct event time <= t.
double global_km_oracle(const std::vector<double>& y, const std::vector<int>& delta, double t)
{
    std::map<double, std::pair<int, int>> at; // time -> (events, rows)
    for (std::size_t i = 0; i < y.size(); ++i) {
        auto& slot = at[y[i]];
        slot.first += delta[i];
        slot.second += 1;
    }
    double surv = 1.0;
    double risk = static_cast<double>(y.size());
    for (auto& [time, cnt] : at) {
        if (time > t)
            break;
        if (cnt.first > 0)
            surv *= 1.0 - cnt.first / risk;
        risk -= cnt.second;
    }
    return 1.0 - surv;
}

Dataset one_covariate(const std::vector<double>& y, const std::vector<int>& delta, const std::vector<double>& x)
{
    std::vector<Observation> obs;
    for (std::size_t i = 0; i < y.size(); ++i)
        obs.push_back({y[i], delta[i], {x[i]}});
    return scale_covariates(Dataset(obs, {"x"}));
}

Dataset random_censored(std::mt19937_64& rng, std::size_t n, bool constant_x)
{
    std::exponential_distribution<double> et(0.5), ec(0.3);
    std::uniform_real_distribution<double> ux(0.0, 10.0);
    std::vector<double> y, x;
    std::vector<int> d;
    for (std::size_t i = 0; i < n; ++i) {
        double t = et(rng), c = ec(rng);
        y.push_back(std::min(t, c));
        d.push_back(t <= c ? 1 : 0);
        x.push_back(constant_x ? 3.0 : ux(rng));
    }
    return one_covariate(y, d, x);
}

} // namespace

TEST_CASE("biquadratic kernel values")
{
    CHECK(biquadratic_kernel(0.0) == 0.9375);
    CHECK(biquadratic_kernel(1.0) == 0.0);
    CHECK(biquadratic_kernel(-1.0) == 0.0);
    CHECK(biquadratic_kernel(0.5) == doctest::Approx(0.52734375).epsilon(1e-15));
    CHECK(biquadratic_kernel(1.5) == 0.0);
    for (double u = -1.2; u <= 1.2; u += 0.05) {
        CHECK(biquadratic_kernel(u) >= 0.0);
        CHECK(biquadratic_kernel(u) == doctest::Approx(biquadratic_kernel(-u)));
    }
}

TEST_CASE("nadaraya-watson weights")
{
    // scaled covariates 0.5, 0.52, 0.6 embedded in a column spanning [0, 1]
    Dataset d = one_covariate({1, 2, 3, 4, 5}, {1, 1, 1, 1, 1}, {0.5, 0.52, 0.6, 0.0, 1.0});
    std::vector<double> x{0.5};
    auto w = nw_weights(x, d, {0.05});
    CHECK_FALSE(w.fallback);
    // K(0) = 0.9375, K(0.4) = 0.9375 * 0.84^2 = 0.6615, K(2) = 0
    CHECK(w.weights[0] == doctest::Approx(0.9375 / (0.9375 + 0.6615)).epsilon(1e-12));
    CHECK(w.weights[1] == doctest::Approx(0.6615 / (0.9375 + 0.6615)).epsilon(1e-12));
    CHECK(w.weights[0] == doctest::Approx(0.58630).epsilon(1e-5));
    CHECK(w.weights[2] == 0.0);

    Dataset sym = one_covariate({1, 2, 3, 4}, {1, 1, 1, 1}, {0.485, 0.515, 0.0, 1.0});
    auto ws = nw_weights(std::vector<double>{0.5}, sym, {0.05});
    CHECK(ws.weights[0] == doctest::Approx(0.5));
    CHECK(ws.weights[1] == doctest::Approx(0.5));

    auto solo = nw_weights(std::vector<double>{0.0}, sym, {0.05});
    CHECK(solo.weights[2] == doctest::Approx(1.0));
}

TEST_CASE("empty neighborhood falls back to uniform weights")
{
    Dataset d = one_covariate({1, 2, 3}, {1, 1, 1}, {0.0, 0.1, 1.0});
    auto w = nw_weights(std::vector<double>{0.5}, d, {0.05});
    CHECK(w.fallback);
    for (double v : w.weights)
        CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("unscaled covariates are rejected")
{
    Dataset raw({{1, 1, {5.0}}, {2, 1, {7.0}}}, {"x"});
    CHECK_THROWS_AS(nw_weights(std::vector<double>{5.0}, raw, {0.05}), Error);
}

TEST_CASE("local kaplan-meier hand example")
{
    Dataset d = one_covariate({1, 2, 3}, {1, 0, 1}, {4, 4, 4});
    std::vector<double> x{0.0};
    BandwidthConfig bw{0.05};
    CHECK(local_km_cdf(1.0, x, d, bw) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(local_km_cdf(2.5, x, d, bw) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(local_km_cdf(3.0, x, d, bw) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(local_km_cdf(0.5, x, d, bw) == 0.0);
}

TEST_CASE("all censored gives a zero cdf")
{
    Dataset d = one_covariate({1, 2, 3}, {0, 0, 0}, {1, 2, 3});
    for (double t : {0.5, 1.0, 2.0, 10.0})
        CHECK(local_km_cdf(t, std::vector<double>{0.5}, d, {0.6}) == 0.0);
}

TEST_CASE("tied events multiply one factor each")
{
    // uniform weights, times {1,1,2}: factors (1 - 1/3) at both tied rows
    Dataset d = one_covariate({1, 1, 2}, {1, 1, 1}, {0, 0, 0});
    double f = local_km_cdf(1.0, std::vector<double>{0.0}, d, {0.05});
    CHECK(f == doctest::Approx(1.0 - (2.0 / 3.0) * (2.0 / 3.0)));
}

TEST_CASE("property: constant covariate reproduces global kaplan-meier")
{
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 20; ++rep) {
        auto d = random_censored(rng, 60, true);
        auto y = d.times();
        auto delta = d.statuses();
        for (double t : y) {
            double got = local_km_cdf(t, std::vector<double>{0.0}, d, {0.05});
            CHECK(std::abs(got - global_km_oracle(y, delta, t)) <= 1e-12);
        }
    }
}

TEST_CASE("property: weights sum to one and cdf is a nondecreasing step function")
{
    std::mt19937_64 rng(22);
    for (int rep = 0; rep < 20; ++rep) {
        auto d = random_censored(rng, 80, false);
        std::uniform_real_distribution<double> ux(0.0, 1.0);
        std::vector<double> x{ux(rng)};
        BandwidthConfig bw{0.05 + 0.1 * (rep % 3)};
        auto w = nw_weights(x, d, bw);
        double s = 0.0;
        for (double v : w.weights) {
            CHECK(v >= 0.0);
            s += v;
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);

        auto y = d.times();
        double lo = *std::min_element(y.begin(), y.end()), hi = *std::max_element(y.begin(), y.end());
        double prev = 0.0;
        for (int g = -2; g <= 202; ++g) {
            double t = lo + (hi - lo) * g / 200.0;
            double f = local_km_cdf(t, x, d, bw);
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
            CHECK(f >= prev - 1e-15);
            prev = f;
        }
        // right-continuity at each observed time
        for (double t : y)
            CHECK(local_km_cdf(t, x, d, bw) == doctest::Approx(local_km_cdf(t + 1e-9, x, d, bw)));
    }
}

TEST_CASE("redistribution weight examples")
{
    CHECK(redistribution_weight(1, 0.5, 0.9).weight == 1.0);
    CHECK(redistribution_weight(0, 0.5, 0.2).weight == doctest::Approx(0.375));
    CHECK(redistribution_weight(0, 0.5, 0.8).weight == 1.0);
    CHECK(redistribution_weight(0, 0.5, 0.5).weight == 1.0);
    auto deg = redistribution_weight(0, 0.5, 1.0);
    CHECK(deg.weight == 1.0);
    CHECK(deg.degenerate);
}

TEST_CASE("property: redistribution weight in tau")
{
    // 1 for tau <= F, then (tau - F)/(1 - F) rising towards 1 as tau -> 1
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uf(0.0, 0.99);
    for (int rep = 0; rep < 200; ++rep) {
        double f = uf(rng);
        double prev = -1.0;
        for (int k = 1; k < 100; ++k) {
            double tau = k / 100.0;
            double w = redistribution_weight(0, tau, f).weight;
            CHECK(w >= 0.0);
            CHECK(w <= 1.0);
            if (tau <= f) {
                CHECK(w == 1.0);
            } else {
                CHECK(w >= prev);
                prev = w;
            }
        }
    }
}

TEST_CASE("fully observed data gives unit weights")
{
    std::mt19937_64 rng(24);
    auto d = random_censored(rng, 50, false);
    std::vector<Observation> obs = d.observations();
    for (auto& o : obs)
        o.status = 1;
    Dataset full(obs, d.covariate_names(), ResponseTransform::Identity, d.scaling());
    auto cdf = local_cdf_at_censored(full, {0.05});
    for (double tau : {0.1, 0.5, 0.9}) {
        auto w = redistribution_weights(full, tau, cdf);
        for (double v : w.weights)
            CHECK(v == 1.0);
    }
}
