#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "gradcodec/mcsim.hpp"

using namespace gradcodec;
using namespace gradcodec::mcsim;

TEST_CASE("zero spread collapses to a constant tensor") {
    SimConfig cfg;
    cfg.mu = 1.5;
    cfg.sigma = 0.0;
    cfg.n = 100;
    auto x = sample_lognormal(cfg, /*signed_values=*/false);
    for (float v : x) CHECK(v == doctest::Approx(std::exp(1.5)).epsilon(1e-6));
}

TEST_CASE("sampling is deterministic per seed and independent across seeds") {
    SimConfig cfg;
    cfg.sigma = 2.0;
    cfg.n = 1000;
    cfg.seed = 3;
    auto a = sample_lognormal(cfg);
    auto b = sample_lognormal(cfg);
    CHECK(a == b);
    cfg.seed = 4;
    CHECK(a != sample_lognormal(cfg));
}

TEST_CASE("truncated sampling respects the log-domain cap") {
    SimConfig cfg;
    cfg.mu = -1.0;
    cfg.sigma = 3.0;
    cfg.k = 2.0;
    cfg.n = 200000;
    cfg.seed = 5;
    auto x = sample_lognormal(cfg);
    double cap = cfg.mu + *cfg.k * cfg.sigma;
    double max_log = -1e300;
    for (float v : x) max_log = std::max(max_log, std::log(std::fabs(static_cast<double>(v))));
    CHECK(max_log <= cap + 1e-6);
    // the cap actually binds: without truncation  ~2% of draws exceed it
    CHECK(max_log > cap - 0.5);
}

TEST_CASE("signed sampling splits signs evenly") {
    SimConfig cfg;
    cfg.sigma = 1.0;
    cfg.n = 100000;
    cfg.seed = 6;
    auto x = sample_lognormal(cfg);
    std::size_t neg = 0;
    for (float v : x) neg += (v < 0.0f);
    CHECK(std::fabs(static_cast<double>(neg) / cfg.n - 0.5) < 0.01);
}

TEST_CASE("a huge mantissa and wide exponent drive the empirical error to zero") {
    SimConfig cfg;
    cfg.n = 20000;
    cfg.seed = 7;
    CHECK(empirical_relative_error(1.0, FpFormat(6, 18), cfg) < 1e-4);
}

TEST_CASE("achieved sparsity tracks the requested level") {
    SimConfig cfg;
    cfg.n = 1000000;
    cfg.seed = 8;
    auto run = empirical_sparsity(0.85, 0.0, 3.0, cfg);
    CHECK(std::fabs(run.achieved - 0.85) < 0.005);
}

TEST_CASE("the wrong-prior baseline misses the target visibly") {
    SimConfig cfg;
    cfg.n = 300000;
    cfg.seed = 9;
    auto run = empirical_sparsity(0.7, 0.0, 3.0, cfg, fpquant::Prior::normal);
    CHECK(std::fabs(run.achieved - 0.7) > 0.02);
}

TEST_CASE("worker count does not perturb sampling") {
    SimConfig cfg;
    cfg.sigma = 2.5;
    cfg.k = 2.5;
    cfg.n = 300000;
    cfg.seed = 10;
    setenv("GRADCODEC_THREADS", "1", 1);
    auto a = sample_lognormal(cfg);
    setenv("GRADCODEC_THREADS", "5", 1);
    auto b = sample_lognormal(cfg);
    unsetenv("GRADCODEC_THREADS");
    CHECK(a == b);
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.n = 0;
    CHECK_THROWS_AS(sample_lognormal(cfg), std::invalid_argument);
    SimConfig c2;
    CHECK_THROWS_AS(empirical_cosine(1.0, c2), std::invalid_argument);  // k unset
}
