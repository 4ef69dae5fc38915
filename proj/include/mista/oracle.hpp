#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "analytic.hpp"
#include "errors.hpp"
#include "protocol.hpp"

namespace mista {

// recurrent-class state type: m active sources plus the set of distinct
// passive ages (subset of {1..gamma-1}); |passive_ages| = n - m
struct StateType {
  int m = 0;
  std::vector<int> passive_ages;  // sorted ascending

  bool operator==(const StateType&) const = default;
};

namespace detail {

inline double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double v = 1.0;
  for (int j = 1; j <= k; ++j) v *= static_cast<double>(n - k + j) / j;
  return v;
}

// falling factorial a * (a-1) * ... * (a-k+1)
inline double falling(int a, int k) {
  double v = 1.0;
  for (int j = 0; j < k; ++j) v *= static_cast<double>(a - j);
  return v;
}

struct IntVecHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::size_t h = 1469598103934665603ULL;
    for (int x : v) {
      h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

inline std::vector<int> type_key(const StateType& t) {
  std::vector<int> key;
  key.reserve(t.passive_ages.size() + 1);
  key.push_back(t.m);
  key.insert(key.end(), t.passive_ages.begin(), t.passive_ages.end());
  return key;
}

template <class F>
void for_each_combination(int lo, int hi, int k, std::vector<int>& cur, F&& fn) {
  if (static_cast<int>(cur.size()) == k) {
    fn(cur);
    return;
  }
  const int need = k - static_cast<int>(cur.size());
  for (int v = lo; v <= hi - need + 1; ++v) {
    cur.push_back(v);
    for_each_combination(v + 1, hi, k, cur, fn);
    cur.pop_back();
  }
}

}  // namespace detail

// labeled states per type: actives are interchangeable, passives carry
// distinct ages assigned injectively -> n!/m!
inline double state_multiplicity(int n, int m) {
  double v = 1.0;
  for (int j = m + 1; j <= n; ++j) v *= static_cast<double>(j);
  return v;
}

// labeled recurrent states with exactly m active sources
inline double recurrent_state_count(int n, int gamma, int m) {
  if (m < pmf_support_min(n, gamma) || m > n) return 0.0;
  return detail::binom(n, m) * detail::falling(gamma - 1, n - m);
}

inline std::vector<StateType> enumerate_recurrent_types(int n, int gamma) {
  if (n < 1) throw DomainError("n must be >= 1");
  if (gamma < 2) throw DomainError("gamma must be >= 2");
  const int smin = pmf_support_min(n, gamma);
  double total = 0.0;
  for (int m = smin; m <= n; ++m) total += detail::binom(gamma - 1, n - m);
  if (total > 1e6) throw SizeError("type space exceeds 1e6 states");

  std::vector<StateType> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<int> cur;
  for (int m = smin; m <= n; ++m) {
    detail::for_each_combination(1, gamma - 1, n - m, cur, [&](const std::vector<int>& ages) {
      out.push_back(StateType{m, ages});
    });
  }
  return out;
}

// one-slot image of a type: passives age by one (gamma-1 promotes to active),
// then an optional winner drops to age 1
inline StateType advance_type(const StateType& t, int gamma, bool success) {
  StateType nxt;
  nxt.m = t.m;
  nxt.passive_ages.reserve(t.passive_ages.size() + 1);
  for (int p : t.passive_ages) {
    if (p + 1 >= gamma)
      ++nxt.m;
    else
      nxt.passive_ages.push_back(p + 1);
  }
  if (success) {
    --nxt.m;
    nxt.passive_ages.insert(nxt.passive_ages.begin(), 1);
  }
  return nxt;
}

struct StationaryResult {
  std::vector<StateType> types;
  std::vector<double> type_probs;  // total stationary mass of each type
  std::vector<double> P_m;         // index m: total mass with m active
  double residual = 0.0;           // ||pi P - pi||_inf
  int iterations = 0;
  bool direct_solve = false;

  // per-state probability for a given active count (uniform within a count)
  double per_state(int n, int gamma, int m) const {
    const double N = recurrent_state_count(n, gamma, m);
    return N > 0.0 ? P_m[static_cast<std::size_t>(m)] / N : 0.0;
  }
};

namespace detail {

struct TypeChain {
  std::vector<StateType> types;
  std::vector<int> fail_to, win_to;
  std::vector<long double> s;  // success probability per type

  std::vector<long double> apply(const std::vector<long double>& x) const {
    std::vector<long double> y(x.size(), 0.0L);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const long double xi = x[i];
      if (xi == 0.0L) continue;
      y[static_cast<std::size_t>(fail_to[i])] += xi * (1.0L - s[i]);
      if (s[i] > 0.0L) y[static_cast<std::size_t>(win_to[i])] += xi * s[i];
    }
    return y;
  }

  long double residual_inf(const std::vector<long double>& x) const {
    const auto y = apply(x);
    long double r = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) r = std::max(r, std::fabs(y[i] - x[i]));
    return r;
  }
};

inline TypeChain build_type_chain(const PolicyParams& params) {
  TypeChain tc;
  tc.types = enumerate_recurrent_types(params.n, params.gamma);
  std::unordered_map<std::vector<int>, int, IntVecHash> index;
  index.reserve(tc.types.size() * 2);
  for (std::size_t i = 0; i < tc.types.size(); ++i)
    index.emplace(type_key(tc.types[i]), static_cast<int>(i));

  tc.fail_to.resize(tc.types.size());
  tc.win_to.resize(tc.types.size());
  tc.s.resize(tc.types.size());
  for (std::size_t i = 0; i < tc.types.size(); ++i) {
    const StateType& t = tc.types[i];
    tc.s[i] = success_probability(t.m, params.tau1, params.tau2);
    tc.fail_to[i] = index.at(type_key(advance_type(t, params.gamma, false)));
    tc.win_to[i] =
        t.m > 0 ? index.at(type_key(advance_type(t, params.gamma, true))) : static_cast<int>(i);
  }
  return tc;
}

inline void normalize(std::vector<long double>& x) {
  long double z = 0.0L;
  for (long double v : x) z += v;
  for (long double& v : x) v /= z;
}

// stationary vector by dense elimination of (P^T - I) pi = 0 with sum(pi) = 1
inline std::vector<long double> solve_dense(const TypeChain& tc) {
  const int T = static_cast<int>(tc.types.size());
  std::vector<long double> A(static_cast<std::size_t>(T) * T, 0.0L);
  auto at = [&](int r, int c) -> long double& {
    return A[static_cast<std::size_t>(r) * T + c];
  };
  for (int j = 0; j < T; ++j) {
    at(tc.fail_to[j], j) += 1.0L - tc.s[j];
    if (tc.s[j] > 0.0L) at(tc.win_to[j], j) += tc.s[j];
    at(j, j) -= 1.0L;
  }
  std::vector<long double> b(static_cast<std::size_t>(T), 0.0L);
  for (int j = 0; j < T; ++j) at(T - 1, j) = 1.0L;  // replace last eq with sum = 1
  b[static_cast<std::size_t>(T - 1)] = 1.0L;

  // partial-pivot gaussian elimination
  for (int col = 0; col < T; ++col) {
    int piv = col;
    for (int r = col + 1; r < T; ++r)
      if (std::fabs(at(r, col)) > std::fabs(at(piv, col))) piv = r;
    if (at(piv, col) == 0.0L) throw SolverError("singular oracle system");
    if (piv != col) {
      for (int c = col; c < T; ++c) std::swap(at(piv, c), at(col, c));
      std::swap(b[static_cast<std::size_t>(piv)], b[static_cast<std::size_t>(col)]);
    }
    const long double d = at(col, col);
    for (int r = col + 1; r < T; ++r) {
      const long double factor = at(r, col) / d;
      if (factor == 0.0L) continue;
      for (int c = col; c < T; ++c) at(r, c) -= factor * at(col, c);
      b[static_cast<std::size_t>(r)] -= factor * b[static_cast<std::size_t>(col)];
    }
  }
  std::vector<long double> x(static_cast<std::size_t>(T), 0.0L);
  for (int r = T - 1; r >= 0; --r) {
    long double v = b[static_cast<std::size_t>(r)];
    for (int c = r + 1; c < T; ++c) v -= at(r, c) * x[static_cast<std::size_t>(c)];
    x[static_cast<std::size_t>(r)] = v / at(r, r);
  }
  for (long double& v : x) v = std::max(v, 0.0L);
  normalize(x);
  return x;
}

}  // namespace detail

// exact stationary distribution of the type-level chain; power iteration with
// periodic Aitken acceleration, dense elimination fallback for small systems
inline StationaryResult exact_stationary(const PolicyParams& params) {
  params.validate();
  const auto tc = detail::build_type_chain(params);
  const std::size_t T = tc.types.size();

  std::vector<long double> x(T, 0.0L);
  // start from the all-active type (always present, self-looping on failure)
  for (std::size_t i = 0; i < T; ++i)
    if (tc.types[i].m == params.n) x[i] = 1.0L;
  detail::normalize(x);

  StationaryResult res;
  const int max_iters = 400000;
  std::vector<long double> prev2, prev1;
  int it = 0;
  for (; it < max_iters; ++it) {
    std::vector<long double> y = tc.apply(x);
    if ((it & 63) == 63) detail::normalize(y);
    long double diff = 0.0L;
    for (std::size_t i = 0; i < T; ++i) diff = std::max(diff, std::fabs(y[i] - x[i]));
    if ((it & 127) == 126 && !prev2.empty()) {
      // componentwise Aitken extrapolation, adopted only when it helps
      std::vector<long double> acc(T);
      bool ok = true;
      for (std::size_t i = 0; i < T; ++i) {
        const long double den = y[i] - 2.0L * prev1[i] + prev2[i];
        acc[i] = std::fabs(den) > 1e-300L
                     ? y[i] - (y[i] - prev1[i]) * (y[i] - prev1[i]) / den
                     : y[i];
        if (!(acc[i] >= -1e-9L)) ok = false;
        acc[i] = std::max(acc[i], 0.0L);
      }
      if (ok) {
        detail::normalize(acc);
        if (tc.residual_inf(acc) < tc.residual_inf(y)) y = std::move(acc);
      }
    }
    prev2 = std::move(prev1);
    prev1 = x;
    x = std::move(y);
    if (diff < 1e-18L) break;
  }
  detail::normalize(x);
  res.iterations = it;
  res.residual = static_cast<double>(tc.residual_inf(x));

  if (res.residual >= 1e-12) {
    if (T <= 1200) {
      x = detail::solve_dense(tc);
      res.direct_solve = true;
      res.residual = static_cast<double>(tc.residual_inf(x));
    }
    if (res.residual >= 1e-12)
      throw SolverError("stationary solve residual above 1e-12");
  }

  res.types = tc.types;
  res.type_probs.assign(T, 0.0);
  std::vector<long double> pm(static_cast<std::size_t>(params.n) + 1, 0.0L);
  for (std::size_t i = 0; i < T; ++i) {
    res.type_probs[i] = static_cast<double>(x[i]);
    pm[static_cast<std::size_t>(res.types[i].m)] += x[i];
  }
  res.P_m.assign(pm.size(), 0.0);
  for (std::size_t m = 0; m < pm.size(); ++m)
    res.P_m[m] = static_cast<double>(pm[m]);
  return res;
}

// labeled-state stationary solve (small n only); state = per-source age with
// gamma acting as the "active" marker
struct LabeledStationary {
  std::vector<std::vector<int>> states;
  std::vector<double> probs;
};

inline LabeledStationary exact_stationary_labeled(const PolicyParams& params) {
  params.validate();
  if (params.n > 4) throw SizeError("labeled solve limited to n <= 4");
  const int n = params.n, gamma = params.gamma;
  if (gamma < 2) throw DomainError("labeled solve requires gamma >= 2");
  if (recurrent_state_count(n, gamma, pmf_support_min(n, gamma)) > 2e5)
    throw SizeError("labeled state space too large");

  std::vector<std::vector<int>> states;
  std::unordered_map<std::vector<int>, int, detail::IntVecHash> index;
  // enumerate: each source gets gamma (active) or a distinct passive age
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  std::vector<bool> used(static_cast<std::size_t>(gamma), false);
  auto rec = [&](auto&& self, int i) -> void {
    if (i == n) {
      index.emplace(cur, static_cast<int>(states.size()));
      states.push_back(cur);
      return;
    }
    cur[static_cast<std::size_t>(i)] = gamma;
    self(self, i + 1);
    for (int a = 1; a < gamma; ++a) {
      if (used[static_cast<std::size_t>(a)]) continue;
      used[static_cast<std::size_t>(a)] = true;
      cur[static_cast<std::size_t>(i)] = a;
      self(self, i + 1);
      used[static_cast<std::size_t>(a)] = false;
    }
  };
  rec(rec, 0);

  const std::size_t T = states.size();
  auto advance = [&](const std::vector<int>& st, int winner) {
    std::vector<int> nxt(st.size());
    for (std::size_t i = 0; i < st.size(); ++i)
      nxt[i] = (static_cast<int>(i) == winner) ? 1 : std::min(st[i] + 1, gamma);
    return nxt;
  };

  std::vector<long double> x(T, 0.0L);
  x[static_cast<std::size_t>(
      index.at(std::vector<int>(static_cast<std::size_t>(n), gamma)))] = 1.0L;
  auto apply = [&](const std::vector<long double>& v) {
    std::vector<long double> y(T, 0.0L);
    for (std::size_t i = 0; i < T; ++i) {
      if (v[i] == 0.0L) continue;
      int m = 0;
      for (int a : states[i]) m += (a == gamma);
      const long double s = success_probability(m, params.tau1, params.tau2);
      y[static_cast<std::size_t>(index.at(advance(states[i], -1)))] += v[i] * (1.0L - s);
      if (m > 0) {
        const long double per = s / m;
        for (std::size_t j = 0; j < states[i].size(); ++j)
          if (states[i][j] == gamma)
            y[static_cast<std::size_t>(
                index.at(advance(states[i], static_cast<int>(j))))] += v[i] * per;
      }
    }
    return y;
  };

  for (int it = 0; it < 400000; ++it) {
    auto y = apply(x);
    long double diff = 0.0L;
    for (std::size_t i = 0; i < T; ++i) diff = std::max(diff, std::fabs(y[i] - x[i]));
    x = std::move(y);
    if (diff < 1e-18L) break;
  }
  detail::normalize(x);
  auto y = apply(x);
  long double resid = 0.0L;
  for (std::size_t i = 0; i < T; ++i) resid = std::max(resid, std::fabs(y[i] - x[i]));
  if (resid >= 1e-12L) throw SolverError("labeled stationary solve did not converge");
  std::vector<double> probs(T);
  for (std::size_t i = 0; i < T; ++i) probs[i] = static_cast<double>(x[i]);
  return LabeledStationary{std::move(states), std::move(probs)};
}

struct PivotRatio {
  double ratio = 0.0;  // pi(state with m active) / (n * pi(state with m-1 active))
  double limit = 0.0;  // 1/q0_limit(k) - k at k = m/n
};

// finite-n check of the scaled pivot-state ratio against its limit
inline PivotRatio pivot_ratio_check(const PolicyParams& params, int s, int m) {
  params.validate();
  if (params.gamma < 2) throw DomainError("pivot check requires gamma >= 2");
  if (s < 1 || s > params.gamma - 1) throw DomainError("pivot age s must be in [1, gamma-1]");
  const int smin = pmf_support_min(params.n, params.gamma);
  if (m <= smin || m > params.n) throw DomainError("m outside (support_min, n]");

  const auto st = exact_stationary(params);
  const double hi = st.per_state(params.n, params.gamma, m);
  const double lo = st.per_state(params.n, params.gamma, m - 1);
  if (lo <= 0.0) throw DomainError("reference state has zero mass");

  const double k = static_cast<double>(m) / params.n;
  const ScaledParams sp = to_scaled(params);
  return PivotRatio{hi / (params.n * lo), 1.0 / q0_limit(sp, k) - k};
}

}  // namespace mista
