#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gradcodec/distfit.hpp"
#include "gradcodec/mcsim.hpp"
#include "oracles.hpp"

using namespace gradcodec;
using namespace gradcodec::distfit;

TEST_CASE("two-point log sample fits exactly") {
    std::vector<float> x{static_cast<float>(std::exp(-1.0)), static_cast<float>(std::exp(1.0))};
    auto p = fit_lognormal(x);
    CHECK(std::fabs(p.mu) < 1e-6);        // float32 storage accuracy
    CHECK(std::fabs(p.sigma - 1.0) < 1e-6);
}

TEST_CASE("degenerate and undersized samples are rejected") {
    float e2 = static_cast<float>(std::exp(2.0));
    std::vector<float> same{e2, -e2, e2, e2};
    CHECK_THROWS_WITH_AS(fit_lognormal(same), doctest::Contains("degenerate"), std::invalid_argument);
    std::vector<float> tiny{1.0f, 0.0f, 0.0f};
    CHECK_THROWS_AS(fit_lognormal(tiny), std::invalid_argument);
}

TEST_CASE("fit is insensitive to signs and zeros") {
    mcsim::SimConfig cfg;
    cfg.sigma = 2.0;
    cfg.n = 20000;
    cfg.seed = 8;
    auto x = mcsim::sample_lognormal(cfg, /*signed_values=*/true);
    std::vector<float> cleaned;
    for (float v : x)
        if (v != 0.0f) cleaned.push_back(std::fabs(v));
    std::vector<float> with_zeros = x;
    for (int i = 0; i < 500; ++i) with_zeros.push_back(0.0f);
    auto a = fit_lognormal(with_zeros);
    auto b = fit_lognormal(cleaned);
    CHECK(a.mu == b.mu);
    CHECK(a.sigma == b.sigma);
    CHECK(a.k == b.k);
}

TEST_CASE("fitted parameters recover the sampling parameters within CLT bounds") {
    mcsim::SimConfig cfg;
    cfg.mu = 0.0;
    cfg.sigma = 3.0;
    cfg.n = 100000;
    cfg.seed = 77;
    auto x = mcsim::sample_lognormal(cfg);
    auto p = fit_lognormal(x);
    CHECK(std::fabs(p.mu - 0.0) < 0.03);
    CHECK(std::fabs(p.sigma - 3.0) < 0.03);
}

TEST_CASE("truncation multiplier sits at the standardized quantile") {
    mcsim::SimConfig cfg;
    cfg.sigma = 1.0;
    cfg.n = 1000000;
    cfg.seed = 5;
    auto x = mcsim::sample_lognormal(cfg);
    auto p = fit_lognormal(x);
    double k = estimate_truncation(x, p, 0.997);
    CHECK(std::fabs(k - 2.748) < 0.1);  // standard normal 0.997 quantile

    std::vector<float> two{static_cast<float>(std::exp(-1.0)), static_cast<float>(std::exp(1.0))};
    LognormalParams tp{0.0, 1.0, 1.0};
    CHECK_THROWS_AS(estimate_truncation(two, tp, 0.5), std::invalid_argument);   // k = 0 boundary
    CHECK_THROWS_AS(estimate_truncation(two, tp, 1.2), std::invalid_argument);   // bad quantile
    CHECK_THROWS_AS(estimate_truncation(two, tp, 0.0), std::invalid_argument);
}

TEST_CASE("samples placed at model quantiles score exactly half a step") {
    // dyadic construction: every quantity is a power-of-two multiple
    const int n = 128;
    std::vector<float> x(n);
    for (int i = 0; i < n; ++i) x[i] = static_cast<float>((2.0 * i + 1.0) / 256.0);
    FittedParams uni{Family::uniform, 0.0, 1.0};
    CHECK(ks_statistic(x, uni) == 1.0 / 256.0);

    const int m = 100;
    std::vector<float> y(m);
    for (int i = 0; i < m; ++i) y[i] = static_cast<float>((i + 0.5) / 100.0);
    CHECK(std::fabs(ks_statistic(y, uni) - 0.005) < 1e-6);  // float32 sample storage
}

TEST_CASE("ks statistic rejects a single sample and unknown input") {
    std::vector<float> one{1.0f};
    CHECK_THROWS_AS(ks_statistic(one, FittedParams{Family::normal, 0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(parse_family("logistic"), std::invalid_argument);
}

TEST_CASE("ks statistic is permutation invariant") {
    mcsim::SimConfig cfg;
    cfg.sigma = 1.5;
    cfg.n = 2000;
    cfg.seed = 9;
    auto x = mcsim::sample_lognormal(cfg);
    auto p = fit_family(x, Family::lognormal);
    double before = ks_statistic(x, p);
    std::shuffle(x.begin(), x.end(), std::mt19937{17});
    CHECK(ks_statistic(x, p) == before);
}

TEST_CASE("log-family ks is invariant to positive rescaling after refit") {
    mcsim::SimConfig cfg;
    cfg.sigma = 2.0;
    cfg.n = 5000;
    cfg.seed = 10;
    auto x = mcsim::sample_lognormal(cfg);
    std::vector<float> scaled(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = 16.0f * x[i];
    for (Family f : {Family::lognormal, Family::loglaplace}) {
        double a = ks_statistic(x, fit_family(x, f));
        double b = ks_statistic(scaled, fit_family(scaled, f));
        CHECK(a == doctest::Approx(b).epsilon(1e-9));
        // scale shifts the location parameter only
        CHECK(fit_family(scaled, f).a ==
              doctest::Approx(fit_family(x, f).a + std::log(16.0)).epsilon(1e-9));
        CHECK(fit_family(scaled, f).b == doctest::Approx(fit_family(x, f).b).epsilon(1e-9));
    }
}

TEST_CASE("lognormal data ranks lognormal first by a wide margin") {
    mcsim::SimConfig cfg;
    cfg.sigma = 3.0;
    cfg.n = 100000;
    cfg.seed = 12;
    auto x = mcsim::sample_lognormal(cfg, /*signed_values=*/true);
    auto report = fit_report(x, all_families());
    REQUIRE(report.size() == 6);
    CHECK(report.front().family == Family::lognormal);
    CHECK(report.front().ks_stat < 0.01);
    for (const auto& e : report)
        if (e.family == Family::normal) CHECK(e.ks_stat > 0.2);
}

TEST_CASE("log-laplace data ranks log-laplace first with lognormal close behind") {
    auto x = oracles::sample_loglaplace(100000, 0.0, 2.0, 13);
    auto report = fit_report(x, all_families());
    REQUIRE(report.front().family == Family::loglaplace);
    CHECK(report.front().ks_stat < 0.01);
    // the other log family stays a close fit, far ahead of the linear-scale ones
    std::size_t ln_pos = 0;
    for (std::size_t i = 0; i < report.size(); ++i)
        if (report[i].family == Family::lognormal) ln_pos = i;
    CHECK(ln_pos <= 2);
    CHECK(report[ln_pos].ks_stat < 0.1);
    for (const auto& e : report)
        if (e.family == Family::normal || e.family == Family::laplace) CHECK(e.ks_stat > 0.3);
}

TEST_CASE("empty family list yields an empty report") {
    std::vector<float> x{1.0f, 2.0f};
    CHECK(fit_report(x, {}).empty());
}

TEST_CASE("per-family failures become diagnostics, not a thrown report") {
    std::vector<float> constant{2.0f, 2.0f, 2.0f};  // zero variance everywhere
    auto report = fit_report(constant, all_families());
    REQUIRE(report.size() == 6);
    for (const auto& e : report) {
        CHECK(!e.ok);
        CHECK(!e.error.empty());
    }
}
