#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradcodec/distfit.hpp"
#include "gradcodec/tensor.hpp"

namespace gradcodec::prune {

struct PruneSpec {
    double target_sparsity = 0.0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
};

struct LayerProfile {
    std::string layer_id;
    std::uint64_t n = 0;
    distfit::LognormalParams params;
    int depth_rank = 0;  // 0 = deepest, first in the backward pass
    std::optional<double> min_cosine;
    std::optional<double> left_ratio;
};

struct CosineReport {
    double analytic_cos = 1.0;
    std::optional<double> empirical_cos;
    double alpha = 0.0;
    double sparsity = 0.0;
};

enum class Truncation { log_domain, value_domain };

// Fraction of entries pruned to exactly zero by stochastic pruning at
// threshold alpha when ln|x| ~ N(mu, sigma^2); closed form of the
// epsilon-averaged CDF integral.
double sparsity_given_threshold(double alpha, double mu, double sigma);

// Inverts sparsity_given_threshold by bisection on [e^(mu-8 sigma),
// e^(mu+8 sigma)] to |S(alpha) - S| < 1e-6.
double threshold_for_sparsity(double target_sparsity, double mu, double sigma);

// Baseline solver that assumes signed values are N(mean, std^2); used to
// quantify the penalty of the wrong prior.
double threshold_for_sparsity_normal(double target_sparsity, double mean, double stddev);
double sparsity_given_threshold_normal(double alpha, double mean, double stddev);

// Unbiased stochastic pruning: per element, with one uniform draw eps keyed
// by (seed, element index):
//   |x| > alpha -> x;  alpha*eps <= |x| <= alpha -> sign(x)*alpha;  else 0.
std::vector<float> stochastic_prune(std::span<const float> values, double alpha,
                                    std::uint64_t seed);

// Threshold for a two-mode tensor: the left mode (fraction l of entries,
// orders of magnitude smaller) is assumed fully pruned, so the right mode
// is pruned to S' = (S - l) / (1 - l) using its own fitted parameters.
double bimodal_threshold(double target_sparsity, double left_ratio,
                         const distfit::LognormalParams& right_params);

// Expected cosine similarity between a tensor and its stochastically pruned
// copy, for magnitudes ~ lognormal(0, sigma^2) truncated at ln x <= k*sigma
// (log_domain) or x <= k*sigma (value_domain).  alpha must be normalized to
// mu = 0 (callers divide by e^mu).
double analytic_cosine(double alpha, double sigma, double k,
                       Truncation convention = Truncation::log_domain);

struct LayerAllocation {
    std::string layer_id;
    double sparsity = 0.0;
    double alpha = 0.0;
    double analytic_cos = 1.0;
    bool constrained = false;
};

struct AllocationResult {
    std::vector<LayerAllocation> layers;
    double overall_sparsity = 0.0;  // element-weighted mean
    bool cap_bound = false;
    std::string warning;
};

// Per-layer sparsity targets under a global budget: layers with a minimum
// cosine get their threshold reduced until the analytic cosine meets it;
// the remaining layers absorb the difference, clamped to max_cap (a binding
// cap is reported as a shortfall, not an error).
AllocationResult heterogeneous_allocate(const std::vector<LayerProfile>& layers,
                                        double target_sparsity, double max_cap = 0.97);

struct PruneOutcome {
    std::vector<float> values;
    CosineReport report;
    double achieved_sparsity = 0.0;
    distfit::LognormalParams fitted;
    double left_ratio = 0.0;
};

// Fit -> solve threshold -> prune -> measure.  With a mask, the fit uses
// only unmasked entries and the threshold solves the two-mode reduction.
PruneOutcome predict_and_prune(std::span<const float> values, double target_sparsity,
                               std::uint64_t seed, const ZeroMask* mask = nullptr);

}  // namespace gradcodec::prune
