#include "gradcodec/distfit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gradcodec::distfit {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double phi_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

std::vector<double> log_magnitudes(std::span<const float> samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (float v : samples)
        if (v != 0.0f) out.push_back(std::log(std::fabs(static_cast<double>(v))));
    return out;
}

std::vector<double> signed_values(std::span<const float> samples) {
    return {samples.begin(), samples.end()};
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population (1/n) standard deviation.
double pop_std(const std::vector<double>& v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

double model_cdf(const FittedParams& p, double x) {
    switch (p.family) {
        case Family::normal:
            return phi_cdf((x - p.a) / p.b);
        case Family::lognormal:
            // CDF of |x| with ln|x| ~ N(a, b^2); x is a magnitude here
            return x <= 0.0 ? 0.0 : phi_cdf((std::log(x) - p.a) / p.b);
        case Family::laplace: {
            double z = (x - p.a) / p.b;
            return z < 0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
        }
        case Family::loglaplace: {
            if (x <= 0.0) return 0.0;
            double z = (std::log(x) - p.a) / p.b;
            return z < 0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
        }
        case Family::uniform:
            if (x <= p.a) return 0.0;
            if (x >= p.b) return 1.0;
            return (x - p.a) / (p.b - p.a);
        case Family::cauchy:
            return 0.5 + std::atan((x - p.a) / p.b) / std::numbers::pi;
    }
    throw std::invalid_argument("unknown family");
}

}  // namespace

const char* family_name(Family f) {
    switch (f) {
        case Family::normal: return "normal";
        case Family::lognormal: return "lognormal";
        case Family::laplace: return "laplace";
        case Family::loglaplace: return "loglaplace";
        case Family::uniform: return "uniform";
        case Family::cauchy: return "cauchy";
    }
    return "?";
}

Family parse_family(const std::string& name) {
    for (Family f : all_families())
        if (name == family_name(f)) return f;
    throw std::invalid_argument("unknown family '" + name + "'");
}

std::vector<Family> all_families() {
    return {Family::normal, Family::lognormal, Family::laplace,
            Family::loglaplace, Family::uniform, Family::cauchy};
}

bool uses_magnitudes(Family f) { return f == Family::lognormal || f == Family::loglaplace; }

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0,1]");
    std::sort(v.begin(), v.end());
    double h = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

LognormalParams fit_lognormal(std::span<const float> samples) {
    auto logs = log_magnitudes(samples);
    if (logs.size() < 2)
        throw std::invalid_argument("fit_lognormal: need at least 2 nonzero samples, have " +
                                    std::to_string(logs.size()));
    LognormalParams p;
    p.mu = mean(logs);
    p.sigma = pop_std(logs, p.mu);
    if (p.sigma <= 0.0)
        throw std::invalid_argument("fit_lognormal: degenerate data (zero variance of log-magnitudes)");
    p.k = estimate_truncation(samples, p, 0.997);
    return p;
}

double estimate_truncation(std::span<const float> samples, const LognormalParams& params, double q) {
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("estimate_truncation: quantile must lie in (0,1)");
    if (!(params.sigma > 0.0)) throw std::invalid_argument("estimate_truncation: sigma must be > 0");
    auto logs = log_magnitudes(samples);
    if (logs.empty()) throw std::invalid_argument("estimate_truncation: no nonzero samples");
    double k = (quantile(std::move(logs), q) - params.mu) / params.sigma;
    if (!(k > 0.0))
        throw std::invalid_argument("estimate_truncation: nonpositive truncation multiplier (k=" +
                                    std::to_string(k) + ")");
    return k;
}

FittedParams fit_family(std::span<const float> samples, Family family) {
    std::vector<double> data = uses_magnitudes(family) ? log_magnitudes(samples) : signed_values(samples);
    if (data.size() < 2)
        throw std::invalid_argument(std::string(family_name(family)) +
                                    ": need at least 2 samples after filtering");
    FittedParams p;
    p.family = family;
    switch (family) {
        case Family::normal:
        case Family::lognormal: {
            p.a = mean(data);
            p.b = pop_std(data, p.a);
            break;
        }
        case Family::laplace:
        case Family::loglaplace: {
            p.a = quantile(data, 0.5);
            double mad = 0.0;
            for (double x : data) mad += std::fabs(x - p.a);
            p.b = mad / static_cast<double>(data.size());
            break;
        }
        case Family::uniform: {
            auto [lo, hi] = std::minmax_element(data.begin(), data.end());
            p.a = *lo;
            p.b = *hi;
            break;
        }
        case Family::cauchy: {
            p.a = quantile(data, 0.5);
            p.b = 0.5 * (quantile(data, 0.75) - quantile(data, 0.25));
            break;
        }
    }
    double scale = (family == Family::uniform) ? p.b - p.a : p.b;
    if (!(scale > 0.0))
        throw std::invalid_argument(std::string(family_name(family)) + ": degenerate data (zero scale)");
    return p;
}

double ks_statistic(std::span<const float> samples, const FittedParams& params) {
    std::vector<double> data;
    if (uses_magnitudes(params.family)) {
        for (float v : samples)
            if (v != 0.0f) data.push_back(std::fabs(static_cast<double>(v)));
    } else {
        data = signed_values(samples);
    }
    if (data.size() < 2) throw std::invalid_argument("ks_statistic: need at least 2 samples");
    double scale = (params.family == Family::uniform) ? params.b - params.a : params.b;
    if (!(scale > 0.0)) throw std::invalid_argument("ks_statistic: invalid scale parameter");

    std::sort(data.begin(), data.end());
    const double n = static_cast<double>(data.size());
    double d = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double f = model_cdf(params, data[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i + 1) / n));
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    }
    return d;
}

std::vector<FitEntry> fit_report(std::span<const float> samples, const std::vector<Family>& families) {
    std::vector<FitEntry> report;
    report.reserve(families.size());
    for (Family f : families) {
        FitEntry e;
        e.family = f;
        try {
            e.params = fit_family(samples, f);
            e.ks_stat = ks_statistic(samples, e.params);
            e.ok = true;
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
        report.push_back(e);
    }
    std::stable_sort(report.begin(), report.end(), [](const FitEntry& x, const FitEntry& y) {
        if (x.ok != y.ok) return x.ok;
        return x.ks_stat < y.ks_stat;
    });
    return report;
}

}  // namespace gradcodec::distfit
