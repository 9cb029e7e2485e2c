#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gradcodec/format.hpp"
#include "gradcodec/fpquant.hpp"

namespace gradcodec::mcsim {

struct SimConfig {
    double mu = 0.0;
    double sigma = 1.0;
    std::optional<double> k;  // truncation: resample draws with z > k
    std::size_t n = 10000;
    std::uint64_t seed = 0;
    int repetitions = 1;
};

// exp(mu + sigma * z) with counter-based normals; rejection resampling keeps
// z <= k when truncated.  Random signs unless signed_values is false.
std::vector<float> sample_lognormal(const SimConfig& config, bool signed_values = true);

// Mean of |q(x) - x| / x over magnitudes with ln x ~ N(0, sigma^2), averaged
// over config.repetitions independent tensors of config.n elements.
double empirical_relative_error(double sigma, const FpFormat& fmt, const SimConfig& config);

struct SparsityRun {
    double alpha = 0.0;
    double achieved = 0.0;
};

// Solves the threshold for the requested prior, prunes lognormal(mu, sigma)
// tensors, returns the achieved zero fraction.  The normal prior fits
// mean/std to the sampled signed values first (the wrong-model baseline).
SparsityRun empirical_sparsity(double target_sparsity, double mu, double sigma,
                               const SimConfig& config, fpquant::Prior prior = fpquant::Prior::lognormal);

// Exact inner-product cosine between truncated-lognormal tensors and their
// pruned copies, averaged over repetitions.  config.k must be set.
double empirical_cosine(double alpha, const SimConfig& config);

}  // namespace gradcodec::mcsim
