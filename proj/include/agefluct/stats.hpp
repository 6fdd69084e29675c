#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace agefluct {

/// Sample moments of one batch of replicates.
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double var = 0.0;     ///< unbiased
  double se = 0.0;      ///< sqrt(var / n)
  double var_se = 0.0;  ///< standard error of the sample variance, sqrt((m4 - s^4) / n)
  double skew = 0.0;
  double kurt = 0.0;    ///< excess kurtosis
};

Moments moments(std::span<const double> x);

/// Unbiased sample covariance and the standard error of it.
struct Covariance {
  double cov = 0.0;
  double se = 0.0;
};
Covariance covariance(std::span<const double> x, std::span<const double> y);

struct JarqueBera {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// JB = n/6 (S^2 + K^2/4) from the plug-in skewness and excess kurtosis;
/// p from chi-square with two degrees of freedom.
JarqueBera jarque_bera(std::span<const double> x);

/// Kolmogorov-Smirnov distance between the sample and Exp(rate), with the
/// asymptotic p-value.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_exponential(std::vector<double> x, double rate);

/// Half the L1 distance between two probability vectors (padded with zeros).
double total_variation(std::span<const double> p, std::span<const double> q);

double binomial_pmf(unsigned n, unsigned k, double p);

/// Least-squares line y = intercept + slope x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace agefluct
