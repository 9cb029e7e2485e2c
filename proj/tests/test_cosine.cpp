#include <cmath>
#include <vector>

#include "doctest.h"
#include "gradcodec/mcsim.hpp"
#include "gradcodec/prune.hpp"

using namespace gradcodec;
using prune::analytic_cosine;
using prune::Truncation;

TEST_CASE("log-domain truncation matches the simulated cosine") {
    mcsim::SimConfig cfg;
    cfg.k = 2.5;
    cfg.n = 200000;
    cfg.repetitions = 3;
    cfg.seed = 40;
    for (double sigma : {3.0, 5.0}) {
        cfg.sigma = sigma;
        for (double target : {0.9, 0.95}) {
            double alpha = prune::threshold_for_sparsity(target, 0.0, sigma);
            double analytic = analytic_cosine(alpha, sigma, 2.5, Truncation::log_domain);
            double empirical = mcsim::empirical_cosine(alpha, cfg);
            CHECK(std::fabs(analytic - empirical) < 0.01);
        }
    }
}

TEST_CASE("value-domain truncation disagrees with the log-domain sampler") {
    mcsim::SimConfig cfg;
    cfg.k = 2.5;
    cfg.sigma = 3.0;
    cfg.n = 200000;
    cfg.repetitions = 2;
    cfg.seed = 41;
    // at this sparsity the threshold still sits inside the value-domain support
    double alpha = prune::threshold_for_sparsity(0.5, 0.0, 3.0);
    double empirical = mcsim::empirical_cosine(alpha, cfg);
    double log_conv = analytic_cosine(alpha, 3.0, 2.5, Truncation::log_domain);
    double val_conv = analytic_cosine(alpha, 3.0, 2.5, Truncation::value_domain);
    CHECK(std::fabs(log_conv - empirical) < 0.01);
    CHECK(std::fabs(val_conv - empirical) > 0.03);
}

TEST_CASE("empirical cosine tends to one as the threshold vanishes") {
    mcsim::SimConfig cfg;
    cfg.k = 2.5;
    cfg.sigma = 3.0;
    cfg.n = 50000;
    cfg.seed = 42;
    CHECK(mcsim::empirical_cosine(1e-9, cfg) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("averaging repetitions tightens the estimate") {
    mcsim::SimConfig cfg;
    cfg.k = 2.5;
    cfg.sigma = 3.0;
    cfg.n = 20000;
    cfg.repetitions = 1;
    double alpha = prune::threshold_for_sparsity(0.95, 0.0, 3.0);

    std::vector<double> singles;
    for (int r = 0; r < 16; ++r) {
        cfg.seed = 100 + r;
        singles.push_back(mcsim::empirical_cosine(alpha, cfg));
    }
    auto var = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= v.size();
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s / v.size();
    };
    std::vector<double> grouped;
    for (int g = 0; g < 4; ++g) {
        double m = 0.0;
        for (int j = 0; j < 4; ++j) m += singles[4 * g + j];
        grouped.push_back(m / 4.0);
    }
    CHECK(var(grouped) < var(singles));
}
