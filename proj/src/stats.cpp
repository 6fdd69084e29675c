#include "agefluct/stats.hpp"

#include <algorithm>
#include <cmath>

#include "agefluct/errors.hpp"

namespace agefluct {

Moments moments(std::span<const double> x) {
  Moments m;
  m.n = x.size();
  if (m.n == 0) return m;
  const double n = static_cast<double>(m.n);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.mean = mean;
  if (m.n > 1) {
    m.var = m2 * n / (n - 1.0);
    m.se = std::sqrt(m.var / n);
    m.var_se = std::sqrt(std::max(0.0, m4 - m.var * m.var) / n);
  }
  if (m2 > 0.0) {
    m.skew = m3 / std::pow(m2, 1.5);
    m.kurt = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

Covariance covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("covariance needs samples of equal length");
  Covariance c;
  const std::size_t N = x.size();
  if (N < 2) return c;
  const double n = static_cast<double>(N);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i) s += (x[i] - mx) * (y[i] - my);
  c.cov = s / (n - 1.0);
  double ss = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double d = (x[i] - mx) * (y[i] - my) - c.cov;
    ss += d * d;
  }
  c.se = std::sqrt(ss / (n - 1.0) / n);
  return c;
}

JarqueBera jarque_bera(std::span<const double> x) {
  const Moments m = moments(x);
  JarqueBera jb;
  jb.statistic = static_cast<double>(m.n) / 6.0 * (m.skew * m.skew + m.kurt * m.kurt / 4.0);
  jb.p_value = std::exp(-0.5 * jb.statistic);
  return jb;
}

KsResult ks_exponential(std::vector<double> x, double rate) {
  KsResult r;
  if (x.empty()) return r;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = -std::expm1(-rate * std::max(0.0, x[i]));
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  r.statistic = d;
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  r.p_value = std::clamp(p, 0.0, 1.0);
  if (lambda < 0.2) r.p_value = 1.0;
  return r;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < std::max(p.size(), q.size()); ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    acc += std::abs(a - b);
  }
  return 0.5 * acc;
}

double binomial_pmf(unsigned n, unsigned k, double p) {
  if (k > n) return 0.0;
  const double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(logc) * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("line fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw DomainError("line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace agefluct
