#include "agefluct/test_function.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "agefluct/errors.hpp"

namespace agefluct {

namespace {

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double parse_double(std::string_view s, std::string_view whole) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("bad number in test function spec '" + std::string(whole) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

double ExpPoly::operator()(double x) const {
  return coeff * ipow(x, power) * std::exp(rate * x);
}

TestFunction::TestFunction(Kind kind, double p0, double p1, std::string id)
    : kind_(kind), p_{p0, p1}, id_(std::move(id)) {}

TestFunction TestFunction::constant(double c) {
  return {Kind::constant, c, 0.0, c == 1.0 ? "one" : "const:" + fmt(c)};
}

TestFunction TestFunction::exponential(double lambda) {
  if (lambda == 0.0) return constant(1.0);
  return {Kind::exponential, lambda, 0.0, "exp:" + fmt(lambda)};
}

TestFunction TestFunction::monomial(int k) {
  if (k < 0) throw ConfigError("monomial power must be non-negative");
  if (k == 0) return constant(1.0);
  std::string id = k == 1 ? "x" : (k == 2 ? "x2" : "mono:" + std::to_string(k));
  return {Kind::monomial, static_cast<double>(k), 0.0, id};
}

TestFunction TestFunction::bump(double l, double r) {
  if (!(r > l)) throw ConfigError("bump needs l < r");
  return {Kind::bump, l, r, "bump:" + fmt(l) + ":" + fmt(r)};
}

TestFunction TestFunction::gaussian(double center, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian test function needs sigma > 0");
  return {Kind::gaussian, center, sigma, "gauss:" + fmt(center) + ":" + fmt(sigma)};
}

double TestFunction::value(double x) const {
  switch (kind_) {
    case Kind::constant:
      return p_[0];
    case Kind::exponential:
      return std::exp(p_[0] * x);
    case Kind::monomial:
      return ipow(x, static_cast<int>(p_[0]));
    case Kind::bump: {
      const double u = (2.0 * x - p_[0] - p_[1]) / (p_[1] - p_[0]);
      if (std::abs(u) >= 1.0) return 0.0;
      return std::exp(1.0 - 1.0 / (1.0 - u * u));
    }
    case Kind::gaussian: {
      const double d = (x - p_[0]) / p_[1];
      return std::exp(-0.5 * d * d);
    }
  }
  return 0.0;
}

double TestFunction::derivative(double x) const {
  switch (kind_) {
    case Kind::constant:
      return 0.0;
    case Kind::exponential:
      return p_[0] * std::exp(p_[0] * x);
    case Kind::monomial: {
      const int k = static_cast<int>(p_[0]);
      return k * ipow(x, k - 1);
    }
    case Kind::bump: {
      const double u = (2.0 * x - p_[0] - p_[1]) / (p_[1] - p_[0]);
      if (std::abs(u) >= 1.0) return 0.0;
      const double q = 1.0 - u * u;
      const double f = std::exp(1.0 - 1.0 / q);
      return f * (-2.0 * u / (q * q)) * (2.0 / (p_[1] - p_[0]));
    }
    case Kind::gaussian: {
      const double d = (x - p_[0]) / p_[1];
      return -d / p_[1] * std::exp(-0.5 * d * d);
    }
  }
  return 0.0;
}

std::optional<ExpPoly> TestFunction::exp_poly() const {
  switch (kind_) {
    case Kind::constant:
      return ExpPoly{p_[0], 0, 0.0};
    case Kind::exponential:
      return ExpPoly{1.0, 0, p_[0]};
    case Kind::monomial:
      return ExpPoly{1.0, static_cast<int>(p_[0]), 0.0};
    default:
      return std::nullopt;
  }
}

TestFunction parse_test_function(std::string_view spec) {
  auto parts = split(spec, ':');
  const auto head = parts[0];
  auto need = [&](size_t n) {
    if (parts.size() != n) {
      throw ConfigError("wrong number of parameters in test function '" + std::string(spec) + "'");
    }
  };
  if (head == "one") {
    need(1);
    return TestFunction::constant(1.0);
  }
  if (head == "const") {
    need(2);
    return TestFunction::constant(parse_double(parts[1], spec));
  }
  if (head == "x") {
    need(1);
    return TestFunction::monomial(1);
  }
  if (head == "x2") {
    need(1);
    return TestFunction::monomial(2);
  }
  if (head == "mono") {
    need(2);
    return TestFunction::monomial(static_cast<int>(parse_double(parts[1], spec)));
  }
  if (head == "exp") {
    need(2);
    return TestFunction::exponential(parse_double(parts[1], spec));
  }
  if (head == "bump") {
    need(3);
    return TestFunction::bump(parse_double(parts[1], spec), parse_double(parts[2], spec));
  }
  if (head == "gauss") {
    need(3);
    return TestFunction::gaussian(parse_double(parts[1], spec), parse_double(parts[2], spec));
  }
  throw ConfigError("unknown test function kind '" + std::string(spec) + "'");
}

std::vector<TestFunction> make_panel(const std::vector<std::string>& spec) {
  if (spec.empty()) {
    return {TestFunction::constant(1.0),     TestFunction::monomial(1),
            TestFunction::monomial(2),       TestFunction::exponential(0.5),
            TestFunction::exponential(-1.0), TestFunction::bump(0.2, 0.8)};
  }
  std::vector<TestFunction> panel;
  panel.reserve(spec.size());
  for (const auto& s : spec) panel.push_back(parse_test_function(s));
  return panel;
}

// Two-variable catalogue --------------------------------------------------

double TwoVarFunction::value(double x, double s) const {
  return coeff * ipow(x, x_power) * std::exp(x_rate * x) * ipow(s, s_power) *
         std::exp(s_rate * s);
}

double TwoVarFunction::d_age(double x, double s) const {
  const double ex = std::exp(x_rate * x);
  double dx = x_rate * ipow(x, x_power) * ex;
  if (x_power > 0) dx += x_power * ipow(x, x_power - 1) * ex;
  return coeff * dx * ipow(s, s_power) * std::exp(s_rate * s);
}

double TwoVarFunction::d_time(double x, double s) const {
  const double es = std::exp(s_rate * s);
  double ds = s_rate * ipow(s, s_power) * es;
  if (s_power > 0) ds += s_power * ipow(s, s_power - 1) * es;
  return coeff * ipow(x, x_power) * std::exp(x_rate * x) * ds;
}

std::string TwoVarFunction::id() const {
  std::ostringstream os;
  os << coeff << "*x^" << x_power << "*e^(" << x_rate << "x)*s^" << s_power << "*e^(" << s_rate
     << "s)";
  return os.str();
}

}  // namespace agefluct
