#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "analytic.hpp"
#include "errors.hpp"
#include "protocol.hpp"
#include "threads.hpp"

namespace mista {

enum class RegimeFilter { SinglePeak, DoublePeak, Any };

inline const char* regime_filter_name(RegimeFilter f) {
  switch (f) {
    case RegimeFilter::SinglePeak: return "single_peak";
    case RegimeFilter::DoublePeak: return "double_peak";
    case RegimeFilter::Any: return "any";
  }
  return "?";
}

struct OptimizerDomain {
  double r_min = 1.0, r_max = 3.0;
  double alpha_min = 1.0, alpha_max = 20.0;
  double tau2_min = 0.02, tau2_max = 1.0;
};

struct GridSpec {
  double r_step = 0.1;
  double alpha_step = 0.5;
  double tau2_step = 0.06;
  int coarse_f_grid = 1500;   // drift grid during the scan
  int refine_f_grid = 10000;  // drift grid during refinement
  double step_tol = 1e-4;
  int top_candidates = 4;
};

struct Optimum {
  double r = 0.0, alpha = 0.0, tau2 = 0.0;
  double k0 = 0.0, age = 0.0, throughput = 0.0;
  Regime regime = Regime::SinglePeak;
  double grid_age = 0.0;  // best age seen on the coarse grid, pre-refinement
};

namespace detail {

struct CandEval {
  double age = 0.0, k0 = 0.0, thr = 0.0;
  Regime regime = Regime::SinglePeak;
};

// exact age ties prefer the single-peak operating point
inline bool better(const CandEval& a, const CandEval& b) {
  if (a.age != b.age) return a.age < b.age;
  return a.regime == Regime::SinglePeak && b.regime == Regime::DoublePeak;
}

inline std::optional<CandEval> eval_point(RegimeFilter filter, double r, double alpha,
                                          double tau2, int f_grid) {
  const ScaledParams sp{alpha, r, tau2};
  DriftAnalysis da;
  try {
    da = regime_analysis(sp, f_grid);
  } catch (const NoRootError&) {
    return std::nullopt;
  }
  if (da.regime == Regime::Degenerate) return std::nullopt;
  if (filter == RegimeFilter::SinglePeak && da.regime != Regime::SinglePeak)
    return std::nullopt;
  if (filter == RegimeFilter::DoublePeak && da.regime != Regime::DoublePeak)
    return std::nullopt;
  return CandEval{asymptotic_age(sp, da.selected_k0), da.selected_k0,
                  throughput_asymptotic(sp, da.selected_k0), da.regime};
}

inline std::vector<double> axis(double lo, double hi, double step) {
  std::vector<double> v;
  for (double x = lo; x < hi - 1e-12; x += step) v.push_back(x);
  v.push_back(hi);
  return v;
}

}  // namespace detail

// minimize the asymptotic age over (r, alpha, tau2): coarse grid scan
// (parallel over r-slices), then block-coordinate refinement where every
// r/tau2 probe re-solves the alpha line (the optimum usually sits on a regime
// boundary, where plain axis-aligned descent stalls)
inline Optimum optimize_age(PolicyKind kind, RegimeFilter filter,
                            const OptimizerDomain& dom = {}, const GridSpec& grid = {}) {
  if (kind == PolicyKind::SlottedAloha) {
    // closed form: load 1, everyone active
    Optimum o;
    o.r = 0.0;
    o.alpha = 1.0;
    o.tau2 = 1.0;
    o.k0 = 1.0;
    o.age = std::exp(1.0);
    o.grid_age = o.age;
    o.throughput = std::exp(-1.0);
    o.regime = Regime::SinglePeak;
    return o;
  }
  if (kind == PolicyKind::MuMista)
    throw DomainError("optimize_age supports sa, ta and mista");
  if (!(dom.r_min <= dom.r_max) || !(dom.alpha_min <= dom.alpha_max) ||
      !(dom.tau2_min <= dom.tau2_max) || !(dom.tau2_min > 0.0) || dom.tau2_max > 1.0 ||
      !(dom.r_min > 0.0) || !(dom.alpha_min > 0.0))
    throw DomainError("bad optimizer domain");

  const bool is_ta = kind == PolicyKind::ThresholdAloha;
  const auto rs = detail::axis(dom.r_min, dom.r_max, grid.r_step);
  const auto as = detail::axis(dom.alpha_min, dom.alpha_max, grid.alpha_step);
  const auto t2s = is_ta ? std::vector<double>{1.0}
                         : detail::axis(dom.tau2_min, dom.tau2_max, grid.tau2_step);

  struct Cand {
    double r, a, t2;
    detail::CandEval ev;
  };
  std::vector<std::vector<Cand>> found(rs.size());
  std::atomic<std::size_t> next{0};
  auto scan_worker = [&]() {
    for (std::size_t ri; (ri = next.fetch_add(1)) < rs.size();) {
      for (double a : as)
        for (double t2 : t2s)
          if (auto ev = detail::eval_point(filter, rs[ri], a, t2, grid.coarse_f_grid))
            found[ri].push_back(Cand{rs[ri], a, t2, *ev});
    }
  };
  const int tc = std::min<int>(default_thread_count(), static_cast<int>(rs.size()));
  if (tc <= 1) {
    scan_worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < tc; ++i) pool.emplace_back(scan_worker);
    for (auto& th : pool) th.join();
  }

  std::vector<Cand> all;
  for (auto& v : found) all.insert(all.end(), v.begin(), v.end());
  if (all.empty()) throw NoFeasiblePointError("no feasible point in search domain");
  std::stable_sort(all.begin(), all.end(),
                   [](const Cand& x, const Cand& y) { return detail::better(x.ev, y.ev); });

  // keep the best candidates, spaced at least a few grid cells apart
  std::vector<Cand> picks;
  for (const auto& c : all) {
    bool close = false;
    for (const auto& p : picks)
      close = close || (std::fabs(c.r - p.r) < 3.0 * grid.r_step &&
                        std::fabs(c.a - p.a) < 3.0 * grid.alpha_step &&
                        std::fabs(c.t2 - p.t2) < 3.0 * grid.tau2_step);
    if (!close) picks.push_back(c);
    if (static_cast<int>(picks.size()) >= grid.top_candidates) break;
  }
  const double grid_age = all.front().ev.age;

  // exact line minimization in alpha at fixed (r, tau2)
  auto line_alpha = [&](double r, double t2,
                        double a_hint) -> std::optional<std::pair<double, detail::CandEval>> {
    double best_a = std::numeric_limits<double>::quiet_NaN();
    detail::CandEval best;
    auto try_a = [&](double a) {
      if (a < dom.alpha_min - 1e-12 || a > dom.alpha_max + 1e-12) return;
      a = std::clamp(a, dom.alpha_min, dom.alpha_max);
      if (auto ev = detail::eval_point(filter, r, a, t2, grid.refine_f_grid))
        if (std::isnan(best_a) || detail::better(*ev, best)) {
          best = *ev;
          best_a = a;
        }
    };
    for (double a = a_hint - 8.0 * grid.alpha_step; a <= a_hint + 8.0 * grid.alpha_step + 1e-12;
         a += grid.alpha_step)
      try_a(a);
    if (std::isnan(best_a))
      for (double a : as) try_a(a);
    if (std::isnan(best_a)) return std::nullopt;
    for (double st = 0.5 * grid.alpha_step; st > 0.5 * grid.step_tol; st *= 0.5) {
      for (;;) {
        const double cur = best_a;
        try_a(cur - st);
        try_a(cur + st);
        if (best_a == cur) break;
      }
    }
    return std::make_pair(best_a, best);
  };

  auto refine = [&](const Cand& c) -> std::optional<Optimum> {
    double r = c.r, t2 = c.t2, a = c.a;
    detail::CandEval ev = c.ev;
    if (auto la = line_alpha(r, t2, a)) {
      a = la->first;
      ev = la->second;
    } else {
      return std::nullopt;
    }
    double rstep = grid.r_step, tstep = is_ta ? 0.0 : grid.tau2_step;
    while (rstep > grid.step_tol || tstep > grid.step_tol) {
      bool moved = false;
      for (double cr : {r - rstep, r + rstep}) {
        if (cr < dom.r_min - 1e-12 || cr > dom.r_max + 1e-12) continue;
        const double rr = std::clamp(cr, dom.r_min, dom.r_max);
        if (auto la = line_alpha(rr, t2, a))
          if (detail::better(la->second, ev)) {
            r = rr;
            a = la->first;
            ev = la->second;
            moved = true;
          }
      }
      if (tstep > 0.0)
        for (double ct : {t2 - tstep, t2 + tstep}) {
          if (ct < dom.tau2_min - 1e-12 || ct > dom.tau2_max + 1e-12) continue;
          const double tt = std::clamp(ct, dom.tau2_min, dom.tau2_max);
          if (auto la = line_alpha(r, tt, a))
            if (detail::better(la->second, ev)) {
              t2 = tt;
              a = la->first;
              ev = la->second;
              moved = true;
            }
        }
      if (!moved) {
        rstep *= 0.5;
        tstep *= 0.5;
      }
    }
    Optimum o;
    o.r = r;
    o.alpha = a;
    o.tau2 = is_ta ? 1.0 : t2;
    o.k0 = ev.k0;
    o.age = ev.age;
    o.throughput = ev.thr;
    o.regime = ev.regime;
    o.grid_age = grid_age;
    return o;
  };

  std::optional<Optimum> best;
  for (const auto& c : picks)
    if (auto o = refine(c))
      if (!best ||
          detail::better(detail::CandEval{o->age, o->k0, o->throughput, o->regime},
                         detail::CandEval{best->age, best->k0, best->throughput,
                                          best->regime}))
        best = o;
  if (!best) throw NoFeasiblePointError("refinement found no feasible point");
  return *best;
}

struct SweepPoint {
  double value = 0.0;
  bool feasible = false;  // false: no admissible operating point (gap in the curve)
  double k0 = 0.0, age = 0.0, throughput = 0.0;
  Regime regime = Regime::Degenerate;
};

// one-dimensional sweep holding the other scaled parameters fixed
inline std::vector<SweepPoint> sweep_parameter(const std::string& axis,
                                               const std::vector<double>& values,
                                               const ScaledParams& base,
                                               int f_grid = 10000) {
  if (axis != "r" && axis != "alpha" && axis != "tau2")
    throw DomainError("axis must be r, alpha or tau2");
  std::vector<SweepPoint> out;
  out.reserve(values.size());
  for (double v : values) {
    ScaledParams sp = base;
    if (axis == "r")
      sp.r = v;
    else if (axis == "alpha")
      sp.alpha = v;
    else
      sp.tau2 = v;
    SweepPoint pt;
    pt.value = v;
    try {
      sp.validate();
      const DriftAnalysis da = regime_analysis(sp, f_grid);
      if (da.regime != Regime::Degenerate) {
        pt.feasible = true;
        pt.k0 = da.selected_k0;
        pt.age = asymptotic_age(sp, da.selected_k0);
        pt.throughput = throughput_asymptotic(sp, da.selected_k0);
        pt.regime = da.regime;
      }
    } catch (const DomainError&) {
    } catch (const NoRootError&) {
    }
    out.push_back(pt);
  }
  return out;
}

}  // namespace mista
