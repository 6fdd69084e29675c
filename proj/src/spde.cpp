#include "agefluct/spde.hpp"

#include <algorithm>
#include <cmath>

#include "agefluct/csv.hpp"
#include "agefluct/errors.hpp"
#include "agefluct/ledger.hpp"
#include "agefluct/parallel.hpp"
#include "agefluct/simd/kernels.hpp"

namespace agefluct {

namespace {

std::size_t round_up8(std::size_t n) { return (n + 7) / 8 * 8; }

double center(std::size_t j, double dx) { return (static_cast<double>(j) + 0.5) * dx; }

/// Variance density of the birth residual at one age.
double residual_rate(const RateRecord& r, double m_death) {
  return std::max(0.0, r.b * r.v_birth + r.h * (r.v_death - m_death * m_death));
}

void check_background(const LimitSolution& bg, std::size_t cells) {
  if (bg.frames.empty()) throw ConfigError("empty background solution");
  if (bg.frames[0].cells() != cells) throw ConfigError("fluctuation grid and background grid differ");
  if (std::abs(bg.frames[0].dx() - bg.dt) > 1e-12 * bg.dt) throw ConfigError("the fluctuation solver needs dx == dt");
}

/// Per-step coefficients shared by all paths, indexed by old cell.
struct StepPlan {
  std::size_t active = 0;
  std::size_t base = 0;  ///< offset into the pooled arrays
  double cn_mass = 0.0;
  double cn_kernel = 0.0;
  double n0 = 0.0;
  double g0 = 0.0;
  double sigma_b = 0.0;
  double sum_k = 0.0;
  double sum_k_wn = 0.0;
  double sum_k_wg = 0.0;
};

struct StepTable {
  double dx = 0.0;
  double dt = 0.0;
  double m_death = 0.0;
  bool has_mass_drift = false;
  bool has_kernel_drift = false;
  bool kernel_pairs = false;
  std::vector<double> surv, sigma, drift_mass, drift_kernel, wn, wg;
  std::vector<StepPlan> plans;
  std::vector<double> wn_init, wg_init;
};

StepTable build_table(const RateModel& model, const LimitSolution& bg, std::size_t ext0, std::size_t steps) {
  StepTable tab;
  tab.dx = bg.frames[0].dx();
  tab.dt = bg.dt;
  tab.m_death = model.death_law.mean();
  tab.has_mass_drift = model.death.mass_dependent();
  tab.has_kernel_drift = model.death.kernel_dependent();
  tab.kernel_pairs = model.uses_kernel();
  const double dx = tab.dx, dt = tab.dt;
  const TestFunction g = model.kernel.at(0.0);

  std::size_t total = 0;
  for (std::size_t n = 0; n < steps; ++n) total += ext0 + n;
  tab.surv.resize(total);
  tab.sigma.resize(total);
  tab.wn.resize(total);
  if (tab.has_mass_drift) tab.drift_mass.resize(total);
  if (tab.has_kernel_drift) tab.drift_kernel.resize(total);
  if (tab.kernel_pairs) tab.wg.resize(total);

  {
    const FrameRates f0(model, bg.frames[0].values(), dx);
    tab.wn_init.resize(ext0);
    tab.wg_init.assign(ext0, 0.0);
    for (std::size_t j = 0; j < ext0; ++j) {
      tab.wn_init[j] = f0.at(center(j, dx)).n * dx;
      if (tab.kernel_pairs) tab.wg_init[j] = g(center(j, dx)) * dx;
    }
  }

  std::size_t base = 0;
  tab.plans.resize(steps);
  for (std::size_t n = 0; n < steps; ++n) {
    const auto a = bg.frames[n].values();
    const FrameRates fa(model, a, dx);
    const FrameRates fb(model, bg.frames[n + 1].values(), dx);
    StepPlan& p = tab.plans[n];
    p.active = ext0 + n;
    p.base = base;
    double sb2 = 0.0;
    for (std::size_t j = 0; j < p.active; ++j) {
      const std::size_t i = base + j;
      const double xm = static_cast<double>(j + 1) * dx;
      const double xc = center(j, dx);
      const double xn = center(j + 1, dx);
      const RateRecord rc = fa.at(xc);
      tab.surv[i] = std::exp(-fa.at(xm).h * dt);
      tab.sigma[i] = std::sqrt(rc.h * a[j] * dx * dt);
      tab.wn[i] = fb.at(xn).n * dx;
      if (tab.kernel_pairs) tab.wg[i] = g(xn) * dx;
      if (tab.has_mass_drift || tab.has_kernel_drift) {
        const FrechetCoefficients fc = fa.frechet(RateChannel::h, xm);
        if (tab.has_mass_drift) tab.drift_mass[i] = fc.d_mass * a[j] * dt;
        if (tab.has_kernel_drift) {
          const double dk = fc.d_kernel * a[j] * dt;
          tab.drift_kernel[i] = dk;
          p.sum_k += dk;
          p.sum_k_wn += dk * tab.wn[i];
          if (tab.kernel_pairs) p.sum_k_wg += dk * tab.wg[i];
        }
      }
      if (a[j] != 0.0) {
        const FrechetCoefficients fn = fa.frechet(RateChannel::n, xc);
        p.cn_mass += fn.d_mass * a[j];
        p.cn_kernel += fn.d_kernel * a[j];
        sb2 += residual_rate(rc, tab.m_death) * a[j];
      }
    }
    p.cn_mass *= dx;
    p.cn_kernel *= dx;
    p.sigma_b = std::sqrt(sb2 * dx * dt);
    p.n0 = fb.at(center(0, dx)).n * dx;
    p.g0 = tab.kernel_pairs ? g(center(0, dx)) * dx : 0.0;
    base += p.active;
  }
  return tab;
}

/// Output schedule: step index per requested time.
std::vector<std::size_t> output_steps(const LimitSolution& bg, const std::vector<double>& times) {
  std::vector<std::size_t> out;
  if (times.empty()) {
    out.push_back(bg.steps());
  } else {
    for (double t : times) out.push_back(bg.step_of(t));
  }
  if (!std::is_sorted(out.begin(), out.end())) throw ConfigError("output times must be increasing");
  return out;
}

}  // namespace

NoiseChannel noise_channel(const RateModel& model, const GridDensity& frame, double dt) {
  NoiseChannel ch;
  ch.dx = frame.dx();
  ch.dt = dt;
  ch.m_death = model.death_law.mean();
  const auto a = frame.values();
  const FrameRates fr(model, a, ch.dx);
  ch.sigma.resize(a.size());
  double sb2 = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const RateRecord r = fr.at(center(j, ch.dx));
    ch.sigma[j] = std::sqrt(r.h * a[j] * ch.dx * dt);
    sb2 += residual_rate(r, ch.m_death) * a[j];
  }
  ch.sigma_b = std::sqrt(sb2 * ch.dx * dt);
  return ch;
}

double construction_covariance(const NoiseChannel& ch, const TestFunction& f, const TestFunction& g) {
  const double f0 = f(0.0), g0 = g(0.0);
  double acc = 0.0;
  for (std::size_t j = 0; j < ch.sigma.size(); ++j) {
    const double x = center(j, ch.dx);
    acc += (f0 * ch.m_death - f(x)) * (g0 * ch.m_death - g(x)) * ch.sigma[j] * ch.sigma[j];
  }
  return acc + f0 * g0 * ch.sigma_b * ch.sigma_b;
}

double formula_covariance(const RateModel& model, const GridDensity& frame, const TestFunction& f,
                          const TestFunction& g, double dt) {
  const double dx = frame.dx();
  const double f0 = f(0.0), g0 = g(0.0);
  const double m = model.death_law.mean();
  const FrameRates fr(model, frame.values(), dx);
  double acc = 0.0;
  for (std::size_t j = 0; j < frame.cells(); ++j) {
    if (frame[j] == 0.0) continue;
    const double x = center(j, dx);
    const RateRecord r = fr.at(x);
    acc += (f0 * g0 * r.w + r.h * f(x) * g(x) - r.h * m * (f0 * g(x) + g0 * f(x))) * frame[j];
  }
  return dt * dx * acc;
}

std::vector<std::vector<double>> sample_noise(const NoiseChannel& ch, const std::vector<TestFunction>& panel,
                                              std::size_t draws, std::uint64_t seed) {
  const std::size_t J = ch.sigma.size();
  std::vector<std::vector<double>> tabs;
  std::vector<double> f0;
  for (const auto& f : panel) {
    tabs.push_back(tabulate(f, ch.dx, J));
    f0.push_back(f(0.0));
  }
  NormalStream normals(StreamRng(seed, StreamDomain::spde_noise, 1, 0).gaussian_lanes());
  std::vector<double> z(J + 1), dD(J);
  std::vector<std::vector<double>> out(panel.size(), std::vector<double>(draws));
  const auto& k = simd::kernels();
  for (std::size_t d = 0; d < draws; ++d) {
    normals.fill(z.data(), J + 1);
    for (std::size_t j = 0; j < J; ++j) dD[j] = ch.sigma[j] * z[j];
    const double dB = ch.m_death * k.sum(dD.data(), J) + ch.sigma_b * z[J];
    for (std::size_t i = 0; i < panel.size(); ++i) {
      out[i][d] = f0[i] * dB - k.dot(tabs[i].data(), dD.data(), J);
    }
  }
  return out;
}

std::vector<double> step_z(std::span<const double> z, const RateModel& model, const LimitSolution& bg,
                           std::size_t n, std::span<const double> normals) {
  const std::size_t J = z.size();
  check_background(bg, J);
  if (n >= bg.steps()) throw DomainError("step index beyond the background solution");
  if (!normals.empty() && normals.size() < J) throw DomainError("need one normal per cell");
  if (z[J - 1] != 0.0) throw InternalError("fluctuation field reached the end of the grid");
  const double dx = bg.frames[0].dx(), dt = bg.dt;
  const auto a = bg.frames[n].values();
  const FrameRates fa(model, a, dx);
  const double m = model.death_law.mean();
  const bool age_kernel = model.uses_kernel() && !model.kernel.age_independent();

  double P1 = 0.0, Pn = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    P1 += z[j];
    Pn += fa.at(center(j, dx)).n * z[j];
  }
  P1 *= dx;
  Pn *= dx;
  auto kernel_pair_z = [&](double x) {
    if (!model.uses_kernel()) return 0.0;
    const TestFunction g = model.kernel.at(x);
    double acc = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      if (z[j] != 0.0) acc += g(center(j, dx)) * z[j];
    }
    return acc * dx;
  };
  const double Pg0 = age_kernel ? 0.0 : kernel_pair_z(0.0);
  auto Pg = [&](double x) { return age_kernel ? kernel_pair_z(x) : Pg0; };

  std::vector<double> out(J, 0.0);
  double Cn = 0.0, noise = 0.0, sb2 = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    if (a[j] == 0.0) continue;
    const double xc = center(j, dx);
    const FrechetCoefficients fn = fa.frechet(RateChannel::n, xc);
    Cn += (fn.d_mass * P1 + (fn.d_kernel != 0.0 ? fn.d_kernel * Pg(xc) : 0.0)) * a[j];
    sb2 += residual_rate(fa.at(xc), m) * a[j];
  }
  Cn *= dx;
  for (std::size_t j = 0; j + 1 < J; ++j) {
    const double xm = static_cast<double>(j + 1) * dx;
    double v = z[j] * std::exp(-fa.at(xm).h * dt);
    if (a[j] != 0.0) {
      const FrechetCoefficients fc = fa.frechet(RateChannel::h, xm);
      double dh = fc.d_mass * P1;
      if (fc.d_kernel != 0.0) dh += fc.d_kernel * Pg(xm);
      v -= dh * a[j] * dt;
      if (!normals.empty()) {
        const double s = std::sqrt(fa.at(center(j, dx)).h * a[j] * dx * dt) * normals[j];
        noise += s;
        v -= s / dx;
      }
    }
    out[j + 1] = v;
  }
  double dB = 0.0;
  if (!normals.empty()) dB = m * noise + std::sqrt(sb2 * dx * dt) * normals[J - 1];
  out[0] = (Cn + Pn) * dt / dx + dB / dx;
  return out;
}

std::vector<GridDensity> evolve_mean(const RateModel& model, const GridDensity& nu0, const LimitSolution& bg) {
  check_background(bg, nu0.cells());
  std::vector<GridDensity> frames;
  frames.reserve(bg.steps() + 1);
  frames.emplace_back(nu0.dx(), std::vector<double>(nu0.values().begin(), nu0.values().end()), true);
  for (std::size_t n = 0; n < bg.steps(); ++n) {
    frames.emplace_back(nu0.dx(), step_z(frames.back().values(), model, bg, n), true);
  }
  return frames;
}

GridDensity classical_mean_exact(const GridDensity& z0, double b, double h, double m_death, double m_birth,
                                 double E1Z0, double t) {
  const double n = b * m_birth + h * m_death;
  const double dx = z0.dx();
  std::vector<double> v(z0.cells(), 0.0);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double x = z0.center(j);
    if (x > t) {
      const auto src = static_cast<std::size_t>(std::floor((x - t) / dx));
      if (src < z0.cells()) v[j] = z0[src] * std::exp(-h * t);
    } else {
      v[j] = n * E1Z0 * std::exp((n - h) * t) * std::exp(-n * x);
    }
  }
  return GridDensity(dx, std::move(v), true);
}

double ito_variance_classical(double n, double h, double w, double m_death,
                              const std::function<double(double)>& pair0, double lambda, double t) {
  const double X0 = pair0(0.0);
  const double L0 = pair0(lambda);
  const double L2 = pair0(2.0 * lambda);
  auto A = [&](double mu, double p0, double s) { return classical_exp_pairing(n, h, mu, p0, X0, s); };
  auto integrand = [&](double s) {
    const double X = A(0.0, X0, s);
    const double Al = A(lambda, L0, s);
    const double A2 = A(2.0 * lambda, L2, s);
    const double q_ll = w * X + h * A2 - 2.0 * h * m_death * Al;
    const double q_l0 = w * X + h * Al - h * m_death * (X + Al);
    const double q_00 = w * X + h * X - 2.0 * h * m_death * X;
    const double tau = t - s;
    const double kl = std::exp((lambda - h) * tau);
    const double k0 = n * std::exp(-h * tau) * exp_difference(n, lambda, tau);
    return kl * kl * q_ll + 2.0 * kl * k0 * q_l0 + k0 * k0 * q_00;
  };
  return integrate_gl5(integrand, 0.0, t, 0.01);
}

EnsembleResult run_spde_ensemble(const RateModel& model, const LimitSolution& bg, const GridDensity& z0,
                                 const EnsembleOptions& opt) {
  const std::size_t J = z0.cells();
  check_background(bg, J);
  const double dx = z0.dx();
  const std::size_t N = bg.steps();
  const std::vector<std::size_t> outs = output_steps(bg, opt.output_times);
  const std::size_t ext0 = std::max(z0.support_end(), bg.frames[0].support_end());
  if (ext0 + N > J) throw ConfigError("grid too short for the fluctuation field: needs J >= support + T/dt");

  EnsembleResult res;
  for (std::size_t s : outs) res.times.push_back(bg.times[s]);
  std::vector<std::vector<double>> ftabs;
  for (const auto& f : opt.panel) {
    res.f_ids.push_back(f.id());
    ftabs.push_back(tabulate(f, dx, J));
  }
  res.values.assign(outs.size(), std::vector<std::vector<double>>(opt.panel.size(), std::vector<double>(opt.paths)));
  const bool age_kernel = model.uses_kernel() && !model.kernel.age_independent();
  const std::size_t batch = std::max<std::size_t>(1, opt.batch);
  const std::size_t batches = (opt.paths + batch - 1) / batch;

  auto record = [&](std::size_t k, std::size_t p, const double* z, std::size_t cells) {
    for (std::size_t i = 0; i < ftabs.size(); ++i) {
      res.values[k][i][p] = dx * simd::kernels().dot(ftabs[i].data(), z, cells);
    }
  };
  auto keep_field = [&](std::size_t p, const double* z) {
    if (opt.keep_first_fields && p == 0) res.first_path_fields.emplace_back(dx, std::vector<double>(z, z + J), true);
  };

  if (age_kernel) {
    parallel_for(batches, resolve_workers(opt.workers), [&](std::size_t b) {
      const std::size_t end = std::min(opt.paths, (b + 1) * batch);
      std::vector<double> normals(J);
      for (std::size_t p = b * batch; p < end; ++p) {
        NormalStream ns(StreamRng(opt.seed, StreamDomain::spde_noise, 0, static_cast<std::uint32_t>(p)).gaussian_lanes());
        std::vector<double> z(z0.values().begin(), z0.values().end());
        std::size_t next_out = 0;
        for (std::size_t n = 0; n <= N; ++n) {
          while (next_out < outs.size() && outs[next_out] == n) {
            record(next_out++, p, z.data(), J);
            keep_field(p, z.data());
          }
          if (n == N) break;
          ns.fill(normals.data(), J);
          z = step_z(z, model, bg, n, normals);
        }
      }
    });
    return res;
  }

  const StepTable tab = build_table(model, bg, ext0, N);
  const double m = tab.m_death;
  const double dt_dx = tab.dt / dx;
  const double inv_dx = 1.0 / dx;
  const auto& kern = simd::kernels();

  parallel_for(batches, resolve_workers(opt.workers), [&](std::size_t b) {
    const std::size_t first = b * batch;
    const std::size_t count = std::min(opt.paths, first + batch) - first;
    struct Path {
      std::vector<double> buf;
      std::size_t off;
      double P1, Pn, Pg;
      simd::GaussianLanes lanes;
    };
    std::vector<Path> paths(count);
    for (std::size_t q = 0; q < count; ++q) {
      Path& P = paths[q];
      P.buf.assign(J + N + 1, 0.0);
      P.off = N;
      std::copy(z0.values().begin(), z0.values().end(), P.buf.begin() + static_cast<std::ptrdiff_t>(N));
      const double* z = P.buf.data() + P.off;
      P.P1 = dx * kern.sum(z, ext0);
      P.Pn = kern.dot(tab.wn_init.data(), z, ext0);
      P.Pg = tab.kernel_pairs ? kern.dot(tab.wg_init.data(), z, ext0) : 0.0;
      P.lanes = StreamRng(opt.seed, StreamDomain::spde_noise, 0, static_cast<std::uint32_t>(first + q)).gaussian_lanes();
    }
    std::vector<double> normals(round_up8(ext0 + N + 1));
    std::size_t next_out = 0;
    for (std::size_t n = 0; n <= N; ++n) {
      while (next_out < outs.size() && outs[next_out] == n) {
        const std::size_t cells = std::min(J, ext0 + n);
        for (std::size_t q = 0; q < count; ++q) {
          const double* z = paths[q].buf.data() + paths[q].off;
          record(next_out, first + q, z, cells);
          keep_field(first + q, z);
        }
        ++next_out;
      }
      if (n == N) break;
      const StepPlan& sp = tab.plans[n];
      const std::size_t o = sp.base;
      for (std::size_t q = 0; q < count; ++q) {
        Path& P = paths[q];
        double* z = P.buf.data() + P.off;
        kern.fill_normals(P.lanes, normals.data(), round_up8(sp.active + 1));
        simd::SweepArgs args;
        args.z = z;
        args.survival = tab.surv.data() + o;
        args.drift = tab.has_mass_drift ? tab.drift_mass.data() + o : nullptr;
        args.drift_scale = -P.P1;
        args.sigma = tab.sigma.data() + o;
        args.normals = normals.data();
        args.inv_dx = inv_dx;
        args.weight_a = tab.wn.data() + o;
        args.weight_b = tab.kernel_pairs ? tab.wg.data() + o : nullptr;
        args.n = sp.active;
        simd::SweepSums s = kern.sweep(args);
        if (tab.has_kernel_drift) {
          const double scale = -P.Pg;
          const double* dk = tab.drift_kernel.data() + o;
          for (std::size_t j = 0; j < sp.active; ++j) z[j] += scale * dk[j];
          s.mass += scale * sp.sum_k;
          s.wa += scale * sp.sum_k_wn;
          s.wb += scale * sp.sum_k_wg;
        }
        const double dB = m * s.noise + sp.sigma_b * normals[sp.active];
        const double z_new = (sp.cn_mass * P.P1 + sp.cn_kernel * P.Pg + P.Pn) * dt_dx + dB * inv_dx;
        P.off -= 1;
        P.buf[P.off] = z_new;
        P.P1 = dx * (s.mass + z_new);
        P.Pn = s.wa + sp.n0 * z_new;
        P.Pg = s.wb + sp.g0 * z_new;
      }
    }
  });
  return res;
}

void write_path_stats_csv(const EnsembleResult& res, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "t,f_id,mean,var,n_paths\n";
  for (std::size_t k = 0; k < res.times.size(); ++k) {
    for (std::size_t i = 0; i < res.f_ids.size(); ++i) {
      const auto& v = res.values[k][i];
      const double n = static_cast<double>(v.size());
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= std::max(n, 1.0);
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
      out << format_double(res.times[k]) << ',' << res.f_ids[i] << ',' << format_double(mean) << ','
          << format_double(var) << ',' << v.size() << '\n';
    }
  }
}

}  // namespace agefluct
