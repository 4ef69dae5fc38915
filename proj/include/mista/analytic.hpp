#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "protocol.hpp"

namespace mista {

inline int pmf_support_min(int n, int gamma) { return std::max(0, n - gamma + 1); }

// stationary ratio P_m / P_{m-1} of the active-count chain
inline double pm_ratio(int m, const PolicyParams& params) {
  const int n = params.n, gamma = params.gamma;
  if (gamma < 2) throw DomainError("pm_ratio requires gamma >= 2");
  const int smin = pmf_support_min(n, gamma);
  if (m <= smin || m > n) throw DomainError("pm_ratio: m outside (support_min, n]");
  const double t1 = params.tau1, t2 = params.tau2, md = m;
  double collide_prev = 0.0;  // the (m-1)-scaled term vanishes at m = 1
  if (m >= 2)
    collide_prev = (md - 1.0) * ((1.0 - t2) * detail::pow01(1.0 - t1, md - 2.0) +
                                 t2 * detail::pow01(1.0 - t1 * t2, md - 2.0));
  const double num = (1.0 / t1 - collide_prev) * (n - md + 1.0);
  const double den = ((1.0 - t2) * detail::pow01(1.0 - t1, md - 1.0) +
                      t2 * detail::pow01(1.0 - t1 * t2, md - 1.0)) *
                     md * (gamma - 1.0 - n + md);
  return num / den;
}

struct ActiveCountPmf {
  int n = 0;
  int support_min = 0;
  std::vector<double> probabilities;  // index 0 corresponds to m = support_min

  double at(int m) const {
    if (m < support_min || m > n) return 0.0;
    return probabilities[static_cast<std::size_t>(m - support_min)];
  }
  int mode() const {
    const auto it = std::max_element(probabilities.begin(), probabilities.end());
    return support_min + static_cast<int>(it - probabilities.begin());
  }
  double total() const {
    double s = 0.0;
    for (double p : probabilities) s += p;
    return s;
  }
};

// stationary distribution of the active count, accumulated in log space
inline ActiveCountPmf active_count_pmf(const PolicyParams& params) {
  params.validate();
  if (params.gamma < 2) throw DomainError("active_count_pmf requires gamma >= 2");
  const int n = params.n, smin = pmf_support_min(n, params.gamma);
  std::vector<double> lw(static_cast<std::size_t>(n - smin + 1), 0.0);
  for (int m = smin + 1; m <= n; ++m)
    lw[static_cast<std::size_t>(m - smin)] =
        lw[static_cast<std::size_t>(m - smin - 1)] + std::log(pm_ratio(m, params));
  const double mx = *std::max_element(lw.begin(), lw.end());
  double z = 0.0;
  for (double v : lw) z += std::exp(v - mx);
  ActiveCountPmf pmf{n, smin, {}};
  pmf.probabilities.resize(lw.size());
  for (std::size_t i = 0; i < lw.size(); ++i)
    pmf.probabilities[i] = std::exp(lw[i] - mx) / z;
  return pmf;
}

// per-slot success rate at offered load G in the large-n limit
inline double instantaneous_throughput_G(double G, double tau2) {
  if (!(G >= 0.0)) throw DomainError("G must be >= 0");
  if (!(tau2 > 0.0) || tau2 > 1.0) throw DomainError("tau2 must be in (0,1]");
  return tau2 * G * std::exp(-tau2 * G) + (1.0 - tau2) * G * std::exp(-G);
}

// asymptotic per-slot success probability seen by the network when a fraction k
// of the sources is active
inline double q0_limit(const ScaledParams& sp, double k) {
  sp.validate();
  if (!(k > 0.0) || !(k < 1.0)) throw DomainError("k must be in (0,1)");
  const double ka = k * sp.alpha;
  return sp.alpha * std::exp(-ka) +
         sp.alpha * sp.tau2 * (std::exp(-sp.tau2 * ka) - std::exp(-ka));
}

// drift of the scaled active fraction; +inf left of the domain, -inf right of it
inline double drift_f(double k, const ScaledParams& sp) {
  const double inf = std::numeric_limits<double>::infinity();
  const double lo = std::max(0.0, 1.0 - sp.r);
  if (k <= lo) return inf;
  if (k >= 1.0) return -inf;
  const double g = instantaneous_throughput_G(k * sp.alpha, sp.tau2);
  const double a1 = 1.0 / g - 1.0;
  const double a2 = sp.r / (k + sp.r - 1.0) - 1.0;
  if (!(a1 > 0.0) || !(a2 > 0.0)) return -inf;
  return std::log(a1) + std::log(a2);
}

enum class Regime { SinglePeak, DoublePeak, Degenerate };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::SinglePeak: return "single_peak";
    case Regime::DoublePeak: return "double_peak";
    case Regime::Degenerate: return "degenerate";
  }
  return "?";
}

struct DriftAnalysis {
  std::vector<double> roots;             // ascending
  std::vector<double> decreasing_roots;  // roots where f crosses + -> -
  std::optional<double> integral_k0_k2;  // double-peak selection integral
  double selected_k0 = std::numeric_limits<double>::quiet_NaN();
  Regime regime = Regime::Degenerate;
  bool tie_warning = false;
};

namespace detail {

template <class F>
double adaptive_simpson_rec(F&& f, double a, double m, double b, double fa, double fm,
                            double fb, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace detail

// double-peak selection: negative integral keeps the lower root, positive picks
// the upper; an exact tie falls back to the lower root with a warning
inline double select_double_peak_root(double k_low, double k_high, double integral,
                                      bool& tie_warning) {
  if (integral < 0.0) return k_low;
  if (integral > 0.0) return k_high;
  tie_warning = true;
  return k_low;
}

inline DriftAnalysis regime_analysis(const ScaledParams& sp, int grid_points = 10000) {
  sp.validate();
  if (grid_points < 10) throw DomainError("grid_points must be >= 10");
  const double eps = 1e-12;
  const double lo = std::max(0.0, 1.0 - sp.r) + eps;
  const double hi = 1.0 - eps;

  DriftAnalysis da;
  auto f = [&](double k) { return drift_f(k, sp); };
  auto bisect = [&](double a, double b, double fa) {
    // fa and f(b) have opposite signs; refine until the interval collapses,
    // keeping full relative precision for roots near the domain edges
    while (true) {
      const double m = 0.5 * (a + b);
      if (m == a || m == b) return m;
      const double fm = f(m);
      if (fm == 0.0) return m;
      if ((fm > 0.0) == (fa > 0.0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
  };

  double prev_k = lo, prev_f = f(lo);
  for (int i = 1; i <= grid_points; ++i) {
    const double k = lo + (hi - lo) * static_cast<double>(i) / grid_points;
    const double fk = f(k);
    if (fk == 0.0) {
      da.roots.push_back(k);
      if (prev_f > 0.0) da.decreasing_roots.push_back(k);
    } else if ((fk > 0.0) != (prev_f > 0.0)) {
      const double root = bisect(prev_k, k, prev_f);
      da.roots.push_back(root);
      if (prev_f > 0.0) da.decreasing_roots.push_back(root);
    }
    prev_k = k;
    prev_f = fk;
  }

  if (da.roots.empty()) throw NoRootError("drift has no detectable root");

  if (da.roots.size() == 1) {
    da.regime = Regime::SinglePeak;
    da.selected_k0 = da.roots[0];
  } else if (da.roots.size() == 3) {
    da.regime = Regime::DoublePeak;
    const double k0 = da.roots[0], k2 = da.roots[2];
    const double I = detail::adaptive_simpson(f, k0, k2, 1e-8);
    da.integral_k0_k2 = I;
    da.selected_k0 = select_double_peak_root(k0, k2, I, da.tie_warning);
  } else {
    da.regime = Regime::Degenerate;  // reported, not raised
  }
  return da;
}

// sparse-regime age distribution: geometric tail past the threshold
struct AgeDistribution {
  int gamma = 1;
  double q0 = 1.0;

  double pmf(std::int64_t j) const {
    if (j < 1) return 0.0;
    const double c = 1.0 / (gamma - 1.0 + 1.0 / q0);
    const double over = static_cast<double>(std::max<std::int64_t>(j - gamma, 0));
    return detail::pow01(1.0 - q0, over) * c;
  }
  double mean() const {
    return gamma * (gamma - 1.0) / (2.0 * (gamma - 1.0 + 1.0 / q0)) + 1.0 / q0;
  }
};

inline AgeDistribution age_distribution(int gamma, double q0) {
  if (gamma < 1) throw DomainError("gamma must be >= 1");
  if (!(q0 > 0.0) || q0 > 1.0) throw DomainError("q0 must be in (0,1]");
  return AgeDistribution{gamma, q0};
}

// scaled mean age Delta/n at active fraction k0
inline double asymptotic_age(const ScaledParams& sp, double k0) {
  const double L = q0_limit(sp, k0);
  return sp.r * sp.r / (2.0 * (sp.r + 1.0 / L)) + 1.0 / L;
}

// equivalent form valid at roots of the drift, where q0_limit(k0) = (1-k0)/(r*k0)
inline double asymptotic_age_root_form(const ScaledParams& sp, double k0) {
  if (!(k0 > 0.0) || !(k0 < 1.0)) throw DomainError("k0 must be in (0,1)");
  return sp.r * (k0 * k0 + 1.0) / (2.0 * (1.0 - k0));
}

inline double throughput_asymptotic(const ScaledParams& sp, double k0) {
  return k0 * q0_limit(sp, k0);
}

struct ThroughputBound {
  double q_max = 0.0;
  double G_star = 0.0;
  double tau2_star = 0.0;
  double bound_slope = 0.0;      // 1 / (2 q_max)
  double age_lower_bound = 0.0;  // bound_slope * n + 1/2
};

// maximize instantaneous_throughput_G over G in (0,10], tau2 in (0,1]
// (or along a fixed tau2), then form the age lower bound for n sources
inline ThroughputBound max_throughput_and_age_bound(
    double n, std::optional<double> fixed_tau2 = std::nullopt) {
  if (!(n > 0.0)) throw DomainError("n must be > 0");
  if (fixed_tau2 && (!(*fixed_tau2 > 0.0) || *fixed_tau2 > 1.0))
    throw DomainError("tau2 must be in (0,1]");

  const double G_hi = 10.0;
  double best_q = -1.0, best_G = 1.0, best_t2 = fixed_tau2.value_or(1.0);
  auto consider = [&](double G, double t2) {
    if (!(G > 0.0) || G > G_hi || !(t2 > 0.0) || t2 > 1.0) return;
    const double q = instantaneous_throughput_G(G, t2);
    if (q > best_q) {
      best_q = q;
      best_G = G;
      best_t2 = t2;
    }
  };

  for (int i = 1; i <= 400; ++i) {
    const double G = G_hi * i / 400.0;
    if (fixed_tau2) {
      consider(G, *fixed_tau2);
    } else {
      for (int j = 1; j <= 200; ++j) consider(G, j / 200.0);
    }
  }

  double step_G = G_hi / 400.0;
  double step_t = fixed_tau2 ? 0.0 : 1.0 / 200.0;
  while (step_G > 1e-10 || step_t > 1e-10) {
    const double q0 = best_q;
    consider(best_G - step_G, best_t2);
    consider(best_G + step_G, best_t2);
    if (!fixed_tau2) {
      consider(best_G, best_t2 - step_t);
      consider(best_G, best_t2 + step_t);
    }
    if (best_q == q0) {
      step_G *= 0.5;
      step_t *= 0.5;
    }
  }

  ThroughputBound b;
  b.q_max = best_q;
  b.G_star = best_G;
  b.tau2_star = best_t2;
  b.bound_slope = 1.0 / (2.0 * best_q);
  b.age_lower_bound = b.bound_slope * n + 0.5;
  return b;
}

// useful-throughput ratio of the minislotted scheme vs plain contention at
// equal spectral occupancy: per-symbol rates theta2/theta1, payload c symbols,
// minislot overhead d symbols
inline double spectral_ratio(double theta2, double theta1, double c, double d) {
  if (!(theta1 > 0.0) || !(theta2 > 0.0)) throw DomainError("rates must be > 0");
  if (!(c > 0.0) || d < 0.0) throw DomainError("need c > 0 and d >= 0");
  return (theta2 / theta1) * c / (c + d);
}

}  // namespace mista
