#pragma once

#include <span>
#include <string>
#include <vector>

namespace gradcodec::distfit {

enum class Family { normal, lognormal, laplace, loglaplace, uniform, cauchy };

const char* family_name(Family f);
Family parse_family(const std::string& name);
std::vector<Family> all_families();

// Fitted model of log-magnitudes: ln|x| ~ N(mu, sigma^2), truncated at
// mu + k*sigma.
struct LognormalParams {
    double mu = 0.0;
    double sigma = 1.0;
    double k = 3.0;
};

// Location/scale pair per family; interpretation depends on the family:
//   normal      mean / std of signed values
//   lognormal   mean / std of ln|x| over nonzero entries
//   laplace     median / mean absolute deviation of signed values
//   loglaplace  median / mean absolute deviation of ln|x|
//   uniform     min / max of signed values
//   cauchy      median / half interquartile range of signed values
struct FittedParams {
    Family family = Family::normal;
    double a = 0.0;
    double b = 1.0;
};

struct FitEntry {
    Family family;
    FittedParams params;
    double ks_stat = 0.0;
    bool ok = false;
    std::string error;  // set when fitting or scoring failed for this family
};

// Means/std of ln|x| over nonzero entries (population std); k from the
// default 0.997 quantile.  Throws on fewer than 2 nonzero entries or zero
// variance.
LognormalParams fit_lognormal(std::span<const float> samples);

// k = (quantile_q of ln|x| - mu) / sigma.  q must lie in (0,1); k must come
// out positive.
double estimate_truncation(std::span<const float> samples, const LognormalParams& params, double q);

FittedParams fit_family(std::span<const float> samples, Family family);

// Two-sided KS distance between the empirical CDF and the fitted model.
// Log-families are scored on nonzero magnitudes, the rest on signed values.
double ks_statistic(std::span<const float> samples, const FittedParams& params);

// True for families scored on |x| rather than the signed values.
bool uses_magnitudes(Family f);

// Fits and scores each family; per-family failures are reported in the
// entry, not thrown.  Result sorted ascending by ks_stat (failures last).
std::vector<FitEntry> fit_report(std::span<const float> samples, const std::vector<Family>& families);

// Interpolated quantile (linear between order statistics), q in [0,1].
double quantile(std::vector<double> sorted_or_not, double q);

}  // namespace gradcodec::distfit
