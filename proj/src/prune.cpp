#include "gradcodec/prune.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gradcodec/kernels.hpp"
#include "gradcodec/parallel.hpp"

namespace gradcodec::prune {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double phi_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }
double phi_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

// Generic monotone bisection in log(alpha) space.
template <typename F>
double bisect_log(F&& f, double lo, double hi, double target, double tol, int max_iter = 200) {
    double llo = std::log(lo), lhi = std::log(hi);
    double mid = 0.5 * (llo + lhi);
    for (int i = 0; i < max_iter; ++i) {
        mid = 0.5 * (llo + lhi);
        double v = f(std::exp(mid));
        if (std::fabs(v - target) < tol) break;
        if (v < target)
            llo = mid;
        else
            lhi = mid;
    }
    return std::exp(mid);
}

}  // namespace

double sparsity_given_threshold(double alpha, double mu, double sigma) {
    if (!(alpha > 0.0)) throw std::invalid_argument("sparsity_given_threshold: alpha must be > 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("sparsity_given_threshold: sigma must be > 0");
    const double t = alpha * std::exp(-mu);
    const double lt = std::log(t);
    // erf(s/sqrt2 - lt/(sqrt2 s)) - 1 written via erfc for tail stability
    const double tail = std::erfc(sigma / kSqrt2 - lt / (kSqrt2 * sigma));
    const double s = 0.5 + (1.0 / (2.0 * t)) *
                               (t * std::erf(lt / (kSqrt2 * sigma)) -
                                std::exp(0.5 * sigma * sigma) * tail);
    return std::clamp(s, 0.0, 1.0);
}

double threshold_for_sparsity(double target_sparsity, double mu, double sigma) {
    if (!(target_sparsity > 0.0 && target_sparsity < 1.0))
        throw std::invalid_argument("threshold_for_sparsity: sparsity must lie in (0,1)");
    if (!(sigma > 0.0)) throw std::invalid_argument("threshold_for_sparsity: sigma must be > 0");
    double lo = std::exp(mu - 8.0 * sigma), hi = std::exp(mu + 8.0 * sigma);
    return bisect_log([&](double a) { return sparsity_given_threshold(a, mu, sigma); }, lo, hi,
                      target_sparsity, 1e-6);
}

double sparsity_given_threshold_normal(double alpha, double mean, double stddev) {
    if (!(alpha > 0.0) || !(stddev > 0.0))
        throw std::invalid_argument("sparsity_given_threshold_normal: need alpha > 0, stddev > 0");
    // E_eps[ P(|x| < alpha eps) ] with x ~ N(mean, stddev^2); antiderivative
    // of Phi is z Phi(z) + phi(z)
    auto J = [](double z) { return z * phi_cdf(z) + phi_pdf(z); };
    const double s = stddev;
    double upper = (s / alpha) * (J((alpha - mean) / s) - J(-mean / s));
    double lower = (s / alpha) * (J(-mean / s) - J((-alpha - mean) / s));
    return std::clamp(upper - lower, 0.0, 1.0);
}

double threshold_for_sparsity_normal(double target_sparsity, double mean, double stddev) {
    if (!(target_sparsity > 0.0 && target_sparsity < 1.0))
        throw std::invalid_argument("threshold_for_sparsity_normal: sparsity must lie in (0,1)");
    if (!(stddev > 0.0)) throw std::invalid_argument("threshold_for_sparsity_normal: stddev must be > 0");
    double scale = std::fabs(mean) + stddev;
    return bisect_log([&](double a) { return sparsity_given_threshold_normal(a, mean, stddev); },
                      scale * 1e-9, scale * 1e9, target_sparsity, 1e-6);
}

std::vector<float> stochastic_prune(std::span<const float> values, double alpha,
                                    std::uint64_t seed) {
    if (!(alpha > 0.0)) throw std::invalid_argument("stochastic_prune: alpha must be > 0");
    std::vector<float> out(values.size());
    const float alpha_f = static_cast<float>(alpha);
    auto kernel = kernels::active_prune();
    parallel_for(0, values.size(), [&](std::size_t lo, std::size_t hi) {
        kernel(values.data() + lo, out.data() + lo, hi - lo, alpha_f, seed, lo);
    });
    return out;
}

double bimodal_threshold(double target_sparsity, double left_ratio,
                         const distfit::LognormalParams& right_params) {
    if (!(left_ratio >= 0.0 && left_ratio < 1.0))
        throw std::invalid_argument("bimodal_threshold: left ratio must lie in [0,1)");
    if (left_ratio >= target_sparsity)
        throw std::invalid_argument(
            "bimodal_threshold: infeasible sparsity (target " + std::to_string(target_sparsity) +
            " <= left-mode fraction " + std::to_string(left_ratio) + ")");
    double adjusted = (target_sparsity - left_ratio) / (1.0 - left_ratio);
    return threshold_for_sparsity(adjusted, right_params.mu, right_params.sigma);
}

double analytic_cosine(double alpha, double sigma, double k, Truncation convention) {
    if (!(alpha > 0.0)) throw std::invalid_argument("analytic_cosine: alpha must be > 0");
    if (!(sigma > 0.0) || !(k > 0.0))
        throw std::invalid_argument("analytic_cosine: sigma and k must be > 0");
    const double cap_log = convention == Truncation::log_domain ? k * sigma : std::log(k * sigma);
    const double la = std::log(alpha);
    if (la >= cap_log)
        throw std::invalid_argument("analytic_cosine: threshold exceeds the truncated support");
    const double s2 = sigma * sigma;
    const double c = sigma * kSqrt2;
    // second moments of the kept mass; erfc keeps the near-cancelling tails stable
    const double xx = std::exp(2.0 * s2) * std::erfc((2.0 * s2 - cap_log) / c);
    const double tt = alpha * std::exp(0.5 * s2) * std::erfc((s2 - la) / c) +
                      std::exp(2.0 * s2) * (std::erfc((2.0 * s2 - cap_log) / c) -
                                            std::erfc((2.0 * s2 - la) / c));
    if (!(xx > 0.0) || !(tt > 0.0))
        throw std::invalid_argument("analytic_cosine: degenerate moments for these parameters");
    // E[X.T(X)] equals E|X|^2, so cos = sqrt(E|X|^2 / E|T|^2)
    return std::sqrt(xx / tt);
}

AllocationResult heterogeneous_allocate(const std::vector<LayerProfile>& layers,
                                        double target_sparsity, double max_cap) {
    if (layers.empty()) throw std::invalid_argument("heterogeneous_allocate: no layers");
    if (!(target_sparsity > 0.0 && target_sparsity < 1.0))
        throw std::invalid_argument("heterogeneous_allocate: target sparsity must lie in (0,1)");
    if (!(max_cap > 0.0 && max_cap <= 1.0))
        throw std::invalid_argument("heterogeneous_allocate: max cap must lie in (0,1]");
    for (std::size_t i = 1; i < layers.size(); ++i)
        if (layers[i].depth_rank < layers[i - 1].depth_rank)
            throw std::invalid_argument("heterogeneous_allocate: layers must be ordered by depth rank");

    AllocationResult result;
    result.layers.resize(layers.size());

    double total_n = 0.0, constrained_budget = 0.0, rest_n = 0.0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& L = layers[i];
        auto& out = result.layers[i];
        out.layer_id = L.layer_id;
        total_n += static_cast<double>(L.n);
        if (!L.min_cosine) {
            rest_n += static_cast<double>(L.n);
            continue;
        }
        out.constrained = true;
        double alpha = threshold_for_sparsity(target_sparsity, L.params.mu, L.params.sigma);
        double cosine = analytic_cosine(alpha * std::exp(-L.params.mu), L.params.sigma, L.params.k);
        if (cosine < *L.min_cosine) {
            // cosine is monotone decreasing in alpha; shrink until it meets the floor
            double lo = alpha * std::exp(-16.0 * L.params.sigma), hi = alpha;
            for (int it = 0; it < 200; ++it) {
                double mid = std::sqrt(lo * hi);
                double c = analytic_cosine(mid * std::exp(-L.params.mu), L.params.sigma, L.params.k);
                if (std::fabs(c - *L.min_cosine) < 1e-9) { hi = lo = mid; break; }
                if (c > *L.min_cosine)
                    lo = mid;
                else
                    hi = mid;
            }
            alpha = std::sqrt(lo * hi);
            cosine = analytic_cosine(alpha * std::exp(-L.params.mu), L.params.sigma, L.params.k);
        }
        out.alpha = alpha;
        out.analytic_cos = cosine;
        out.sparsity = sparsity_given_threshold(alpha, L.params.mu, L.params.sigma);
        constrained_budget += out.sparsity * static_cast<double>(L.n);
    }

    bool have_rest = rest_n > 0.0;
    double rest_target = 0.0;
    if (have_rest) {
        rest_target = (target_sparsity * total_n - constrained_budget) / rest_n;
        if (rest_target > max_cap) {
            rest_target = max_cap;
            result.cap_bound = true;
        }
        rest_target = std::max(rest_target, 0.0);
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (result.layers[i].constrained) continue;
            const auto& L = layers[i];
            auto& out = result.layers[i];
            out.sparsity = rest_target;
            out.alpha = threshold_for_sparsity(rest_target, L.params.mu, L.params.sigma);
            out.analytic_cos =
                analytic_cosine(out.alpha * std::exp(-L.params.mu), L.params.sigma, L.params.k);
        }
    }

    double weighted = 0.0;
    for (std::size_t i = 0; i < layers.size(); ++i)
        weighted += result.layers[i].sparsity * static_cast<double>(layers[i].n);
    result.overall_sparsity = weighted / total_n;
    if (result.overall_sparsity < target_sparsity - 1e-9) {
        result.cap_bound = result.cap_bound || !have_rest;
        result.warning = "sparsity shortfall: achievable overall sparsity " +
                         std::to_string(result.overall_sparsity) + " < target " +
                         std::to_string(target_sparsity);
    }
    return result;
}

PruneOutcome predict_and_prune(std::span<const float> values, double target_sparsity,
                               std::uint64_t seed, const ZeroMask* mask) {
    PruneOutcome out;
    double alpha;
    if (mask) {
        if (mask->size() != values.size())
            throw std::invalid_argument("predict_and_prune: mask length mismatch");
        std::vector<float> right;
        right.reserve(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!mask->bits[i]) right.push_back(values[i]);
        out.left_ratio =
            static_cast<double>(values.size() - right.size()) / static_cast<double>(values.size());
        out.fitted = distfit::fit_lognormal(right);
        alpha = bimodal_threshold(target_sparsity, out.left_ratio, out.fitted);
    } else {
        out.fitted = distfit::fit_lognormal(values);
        alpha = threshold_for_sparsity(target_sparsity, out.fitted.mu, out.fitted.sigma);
    }
    out.values = stochastic_prune(values, alpha, seed);

    std::uint64_t zeros = 0;
    double dot = 0.0, nx = 0.0, np = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        zeros += (out.values[i] == 0.0f);
        double x = values[i], p = out.values[i];
        dot += x * p;
        nx += x * x;
        np += p * p;
    }
    out.achieved_sparsity = values.empty() ? 0.0 : static_cast<double>(zeros) / values.size();
    out.report.alpha = alpha;
    out.report.sparsity = out.achieved_sparsity;
    out.report.analytic_cos =
        analytic_cosine(alpha * std::exp(-out.fitted.mu), out.fitted.sigma, out.fitted.k);
    if (nx > 0.0 && np > 0.0) out.report.empirical_cos = dot / (std::sqrt(nx) * std::sqrt(np));
    return out;
}

}  // namespace gradcodec::prune
