#include "gradcodec/mcsim.hpp"

#include <cmath>
#include <stdexcept>

#include "gradcodec/parallel.hpp"
#include "gradcodec/prune.hpp"
#include "gradcodec/rng.hpp"

namespace gradcodec::mcsim {

namespace {

// Counter layout per element i: normal draws use counters (r << 44) + i for
// retry round r, sign bits live on a separate high stream.
constexpr std::uint64_t kRetryStride = 1ull << 44;
constexpr std::uint64_t kSignStream = 1ull << 62;

double draw_z(const rng::Counter& rgen, std::size_t i, std::optional<double> k) {
    std::uint64_t ctr = static_cast<std::uint64_t>(i);
    double z = rgen.normal(ctr);
    if (k) {
        std::uint64_t round = 1;
        while (z > *k) {
            z = rgen.normal(round * kRetryStride + ctr);
            ++round;
        }
    }
    return z;
}

}  // namespace

std::vector<float> sample_lognormal(const SimConfig& config, bool signed_values) {
    if (config.n < 1) throw std::invalid_argument("sample_lognormal: n must be >= 1");
    if (!(config.sigma >= 0.0)) throw std::invalid_argument("sample_lognormal: sigma must be >= 0");
    std::vector<float> out(config.n);
    rng::Counter rgen(config.seed);
    parallel_for(0, config.n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double z = draw_z(rgen, i, config.k);
            double v = std::exp(config.mu + config.sigma * z);
            if (signed_values && (rgen.bits(kSignStream + i) & 1ull)) v = -v;
            out[i] = static_cast<float>(v);
        }
    });
    return out;
}

double empirical_relative_error(double sigma, const FpFormat& fmt, const SimConfig& config) {
    if (!(sigma > 0.0)) throw std::invalid_argument("empirical_relative_error: sigma must be > 0");
    if (config.repetitions < 1)
        throw std::invalid_argument("empirical_relative_error: repetitions must be >= 1");
    double total = 0.0;
    for (int r = 0; r < config.repetitions; ++r) {
        SimConfig c = config;
        c.mu = 0.0;
        c.sigma = sigma;
        c.seed = rng::derive(config.seed, static_cast<std::uint64_t>(r));
        auto x = sample_lognormal(c, /*signed_values=*/false);
        auto q = fpquant::quantize_tensor(x, fmt);
        total += q.stats.mean_relative_error;
    }
    return total / config.repetitions;
}

SparsityRun empirical_sparsity(double target_sparsity, double mu, double sigma,
                               const SimConfig& config, fpquant::Prior prior) {
    SimConfig c = config;
    c.mu = mu;
    c.sigma = sigma;
    std::uint64_t zeros = 0, total = 0;
    double alpha = 0.0;
    for (int r = 0; r < config.repetitions; ++r) {
        c.seed = rng::derive(config.seed, static_cast<std::uint64_t>(r));
        auto x = sample_lognormal(c, /*signed_values=*/true);
        if (prior == fpquant::Prior::lognormal) {
            alpha = prune::threshold_for_sparsity(target_sparsity, mu, sigma);
        } else {
            double m = 0.0;
            for (float v : x) m += v;
            m /= static_cast<double>(x.size());
            double var = 0.0;
            for (float v : x) var += (v - m) * (v - m);
            double sd = std::sqrt(var / static_cast<double>(x.size()));
            alpha = prune::threshold_for_sparsity_normal(target_sparsity, m, sd);
        }
        auto pruned = prune::stochastic_prune(x, alpha, rng::derive(c.seed, 0x517e));
        for (float v : pruned) zeros += (v == 0.0f);
        total += x.size();
    }
    return {alpha, static_cast<double>(zeros) / static_cast<double>(total)};
}

double empirical_cosine(double alpha, const SimConfig& config) {
    if (!config.k) throw std::invalid_argument("empirical_cosine: truncation k must be set");
    if (!(alpha > 0.0)) throw std::invalid_argument("empirical_cosine: alpha must be > 0");
    double total = 0.0;
    for (int r = 0; r < config.repetitions; ++r) {
        SimConfig c = config;
        c.seed = rng::derive(config.seed, static_cast<std::uint64_t>(r));
        auto x = sample_lognormal(c, /*signed_values=*/true);
        auto p = prune::stochastic_prune(x, alpha, rng::derive(c.seed, 0x9c0));
        double dot = 0.0, nx = 0.0, np = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double xv = x[i], pv = p[i];
            dot += xv * pv;
            nx += xv * xv;
            np += pv * pv;
        }
        total += dot / (std::sqrt(nx) * std::sqrt(np));
    }
    return total / config.repetitions;
}

}  // namespace gradcodec::mcsim
