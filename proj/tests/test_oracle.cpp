#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "mista/analytic.hpp"
#include "mista/oracle.hpp"
#include "mista/protocol.hpp"
#include "mista/rng.hpp"
#include "mista/sim.hpp"

using namespace mista;

namespace {

PolicyParams mista_params(int n, int gamma, double t1, double t2) {
  PolicyParams p;
  p.policy = PolicyKind::Mista;
  p.n = n;
  p.gamma = gamma;
  p.tau1 = t1;
  p.tau2 = t2;
  return p;
}

}  // namespace

TEST_CASE("recurrent state counts") {
  CHECK(recurrent_state_count(3, 5, 3) == 1.0);
  CHECK(recurrent_state_count(3, 5, 2) == 12.0);
  CHECK(recurrent_state_count(3, 5, 1) == 36.0);
  CHECK(recurrent_state_count(3, 5, 0) == 24.0);

  // gamma = 2: only passive age 1 exists, so at most one passive source
  CHECK(recurrent_state_count(2, 2, 2) == 1.0);
  CHECK(recurrent_state_count(2, 2, 1) == 2.0);
  CHECK(recurrent_state_count(2, 2, 0) == 0.0);

  // below the support minimum the count is zero
  CHECK(recurrent_state_count(5, 3, 1) == 0.0);
}

TEST_CASE("type enumeration matches counts") {
  const int n = 3, gamma = 5;
  const auto types = enumerate_recurrent_types(n, gamma);
  CHECK(types.size() == 15);

  std::vector<int> per_m(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& t : types) {
    CHECK(static_cast<int>(t.passive_ages.size()) == n - t.m);
    CHECK(std::is_sorted(t.passive_ages.begin(), t.passive_ages.end()));
    // distinct ages within {1..gamma-1}
    for (std::size_t i = 0; i < t.passive_ages.size(); ++i) {
      CHECK(t.passive_ages[i] >= 1);
      CHECK(t.passive_ages[i] <= gamma - 1);
      if (i > 0) CHECK(t.passive_ages[i] > t.passive_ages[i - 1]);
    }
    per_m[static_cast<std::size_t>(t.m)] += 1;
  }
  CHECK(per_m[3] == 1);
  CHECK(per_m[2] == 4);
  CHECK(per_m[1] == 6);
  CHECK(per_m[0] == 4);

  // types times per-type multiplicity n!/m! reproduce the labeled counts
  for (int m = 0; m <= n; ++m)
    CHECK(per_m[static_cast<std::size_t>(m)] * state_multiplicity(n, m) ==
          recurrent_state_count(n, gamma, m));

  CHECK_THROWS_AS(enumerate_recurrent_types(0, 5), DomainError);
  CHECK_THROWS_AS(enumerate_recurrent_types(3, 1), DomainError);
  CHECK_THROWS_AS(enumerate_recurrent_types(30, 33), SizeError);
}

TEST_CASE("stationary fixture n=3 gamma=5") {
  const auto p = mista_params(3, 5, 0.3, 0.5);
  const auto st = exact_stationary(p);

  CHECK(st.types.size() == 15);
  CHECK(st.residual < 1e-12);

  CHECK_THAT(st.P_m[0], Catch::Matchers::WithinAbs(0.081646164088, 1e-9));
  CHECK_THAT(st.P_m[1], Catch::Matchers::WithinAbs(0.408230820441, 1e-9));
  CHECK_THAT(st.P_m[2], Catch::Matchers::WithinAbs(0.409694013345, 1e-9));
  CHECK_THAT(st.P_m[3], Catch::Matchers::WithinAbs(0.100429002126, 1e-9));

  // mass ratios against the closed-form recursion
  for (int m = 1; m <= 3; ++m) {
    const double got = st.P_m[static_cast<std::size_t>(m)] / st.P_m[static_cast<std::size_t>(m - 1)];
    CHECK_THAT(got, Catch::Matchers::WithinRel(pm_ratio(m, p), 1e-10));
  }
}

TEST_CASE("stationary equals closed-form pmf on small instances") {
  std::mt19937_64 gen(20240817);
  std::uniform_real_distribution<double> U(0.15, 0.85);

  for (int n = 1; n <= 6; ++n) {
    for (int gamma = 2; gamma <= n + 3; ++gamma) {
      const auto p = mista_params(n, gamma, U(gen), U(gen));
      CAPTURE(n, gamma, p.tau1, p.tau2);
      const auto st = exact_stationary(p);
      const auto pmf = active_count_pmf(p);
      CHECK(st.residual < 1e-12);
      const int smin = pmf_support_min(n, gamma);
      for (int m = 0; m <= n; ++m) {
        const double exact = st.P_m[static_cast<std::size_t>(m)];
        if (m < smin)
          CHECK(exact < 1e-15);
        else
          CHECK(std::fabs(exact - pmf.at(m)) < 1e-10);
      }
    }
  }
}

TEST_CASE("tau2=1 collapses to the no-second-round chain") {
  auto p = mista_params(4, 6, 0.35, 1.0);
  const auto st_mista = exact_stationary(p);
  p.policy = PolicyKind::ThresholdAloha;
  const auto st_ta = exact_stationary(p);
  for (int m = 0; m <= 4; ++m)
    CHECK(st_mista.P_m[static_cast<std::size_t>(m)] ==
          st_ta.P_m[static_cast<std::size_t>(m)]);

  const auto pmf = active_count_pmf(p);
  for (int m = pmf.support_min; m <= 4; ++m)
    CHECK(std::fabs(st_ta.P_m[static_cast<std::size_t>(m)] - pmf.at(m)) < 1e-10);
}

TEST_CASE("transition map conserves probability mass") {
  const auto p = mista_params(4, 6, 0.25, 0.7);
  const auto tc = detail::build_type_chain(p);

  for (std::size_t i = 0; i < tc.types.size(); ++i) {
    CHECK(tc.s[i] >= 0.0L);
    CHECK(tc.s[i] <= 1.0L);
  }

  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<long double> x(tc.types.size());
  long double total = 0.0L;
  for (auto& v : x) {
    v = U(gen);
    total += v;
  }
  const auto y = tc.apply(x);
  long double total_after = 0.0L;
  for (long double v : y) total_after += v;
  CHECK(std::fabs(static_cast<double>(total_after - total)) < 1e-15);
}

TEST_CASE("labeled states: symmetry and type merge") {
  const auto p = mista_params(3, 5, 0.3, 0.5);
  const auto lab = exact_stationary_labeled(p);
  CHECK(lab.states.size() == 73);

  // group labeled states by type (sorted passive ages + active count)
  std::map<std::vector<int>, std::vector<double>> by_type;
  for (std::size_t i = 0; i < lab.states.size(); ++i) {
    int m = 0;
    std::vector<int> key;
    for (int a : lab.states[i]) {
      if (a == p.gamma)
        ++m;
      else
        key.push_back(a);
    }
    std::sort(key.begin(), key.end());
    key.insert(key.begin(), m);
    by_type[key].push_back(lab.probs[i]);
  }
  CHECK(by_type.size() == 15);

  const auto st = exact_stationary(p);
  for (std::size_t i = 0; i < st.types.size(); ++i) {
    std::vector<int> key = st.types[i].passive_ages;
    key.insert(key.begin(), st.types[i].m);
    const auto it = by_type.find(key);
    REQUIRE(it != by_type.end());
    // same-type states carry equal probability...
    const double first = it->second.front();
    double merged = 0.0;
    for (double v : it->second) {
      CHECK(std::fabs(v - first) < 1e-12);
      merged += v;
    }
    // ...and the expected multiplicity, summing to the type mass
    CHECK(static_cast<double>(it->second.size()) ==
          state_multiplicity(p.n, st.types[i].m));
    CHECK(std::fabs(merged - st.type_probs[i]) < 1e-12);
  }

  CHECK_THROWS_AS(exact_stationary_labeled(mista_params(5, 4, 0.3, 0.5)), SizeError);
}

TEST_CASE("equal-age states are transient") {
  // full truncated chain at n=3, gamma=4: every age vector in {1..4}^3,
  // including states with repeated below-threshold ages that the recurrent
  // enumeration excludes; iterate from a uniform start and check those
  // states drain to zero while the rest match the labeled solve
  const auto p = mista_params(3, 4, 0.3, 0.5);
  const int n = p.n, gamma = p.gamma;

  std::vector<std::vector<int>> states;
  for (int a = 1; a <= gamma; ++a)
    for (int b = 1; b <= gamma; ++b)
      for (int c = 1; c <= gamma; ++c) states.push_back({a, b, c});
  REQUIRE(states.size() == 64);

  auto idx = [&](const std::vector<int>& v) {
    return ((v[0] - 1) * gamma + (v[1] - 1)) * gamma + (v[2] - 1);
  };
  auto advance = [&](std::vector<int> v, int winner) {
    for (int i = 0; i < n; ++i)
      v[static_cast<std::size_t>(i)] =
          (i == winner) ? 1 : std::min(v[static_cast<std::size_t>(i)] + 1, gamma);
    return v;
  };

  std::vector<long double> x(states.size(), 1.0L / states.size());
  for (int it = 0; it < 20000; ++it) {
    std::vector<long double> y(states.size(), 0.0L);
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (x[i] == 0.0L) continue;
      int m = 0;
      for (int a : states[i]) m += (a == gamma);
      const long double s = success_probability(m, p.tau1, p.tau2);
      y[static_cast<std::size_t>(idx(advance(states[i], -1)))] += x[i] * (1.0L - s);
      for (int j = 0; j < n && m > 0; ++j)
        if (states[i][static_cast<std::size_t>(j)] == gamma)
          y[static_cast<std::size_t>(idx(advance(states[i], j)))] += x[i] * s / m;
    }
    x = std::move(y);
  }

  const auto lab = exact_stationary_labeled(p);
  std::map<std::vector<int>, double> expected;
  for (std::size_t i = 0; i < lab.states.size(); ++i) expected[lab.states[i]] = lab.probs[i];

  long double transient_mass = 0.0L;
  for (std::size_t i = 0; i < states.size(); ++i) {
    std::vector<int> passive;
    for (int a : states[i])
      if (a < gamma) passive.push_back(a);
    std::sort(passive.begin(), passive.end());
    const bool duplicated =
        std::adjacent_find(passive.begin(), passive.end()) != passive.end();
    if (duplicated) {
      transient_mass += x[i];
      CHECK(expected.find(states[i]) == expected.end());
    } else {
      const auto it = expected.find(states[i]);
      REQUIRE(it != expected.end());
      CHECK(std::fabs(static_cast<double>(x[i]) - it->second) < 1e-10);
    }
  }
  CHECK(static_cast<double>(transient_mass) < 1e-12);
}

TEST_CASE("pivot ratio: positivity and limit trend") {
  {
    const auto pr = pivot_ratio_check(mista_params(3, 5, 0.3, 0.5), 2, 2);
    CHECK(pr.ratio > 0.0);
    CHECK(std::isfinite(pr.ratio));
    CHECK(std::isfinite(pr.limit));
  }

  // fixed scaled point, growing n: the finite-n ratio approaches the limit
  ScaledParams sp;
  sp.alpha = 1.2;
  sp.r = 1.0;
  sp.tau2 = 0.5;
  const double ratios[3] = {0.752688172, 0.758620690, 0.764717217};
  double prev_gap = 1e9;
  int idx = 0;
  for (int n : {4, 6, 8}) {
    const auto pr = pivot_ratio_check(sp.to_policy(n), 1, n / 2);
    CHECK_THAT(pr.ratio, Catch::Matchers::WithinAbs(ratios[idx], 1e-6));
    CHECK_THAT(pr.limit, Catch::Matchers::WithinAbs(0.792360485, 1e-6));
    const double gap = pr.limit - pr.ratio;
    CHECK(gap > 0.0);
    CHECK(gap < prev_gap);
    prev_gap = gap;
    ++idx;
  }

  const auto p = mista_params(3, 5, 0.3, 0.5);
  CHECK_THROWS_AS(pivot_ratio_check(p, 0, 2), DomainError);
  CHECK_THROWS_AS(pivot_ratio_check(p, 5, 2), DomainError);
  CHECK_THROWS_AS(pivot_ratio_check(p, 2, 0), DomainError);
  CHECK_THROWS_AS(pivot_ratio_check(p, 2, 4), DomainError);
}

TEST_CASE("pivot age decouples from the active count") {
  // long run at n=300; correlate the pivot's age with the number of other
  // active sources over slots where the pivot is below threshold (only
  // there does it carry an age; at threshold it is pinned until it wins)
  ScaledParams sp;
  sp.alpha = 10.0;
  sp.r = 1.59;
  sp.tau2 = 0.38;
  const int n = 300;
  const PolicyParams p = sp.to_policy(n);

  NetworkState st;
  st.ages.assign(static_cast<std::size_t>(n), p.gamma);
  st.t = 0;
  Xoshiro256pp rng(7);

  const long long T = 600000, W = T / 10;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  long long cnt = 0;
  for (long long t = 0; t < T; ++t) {
    if (t >= W && st.ages[0] < p.gamma) {
      const double x = st.ages[0];
      int m = 0;
      for (int i = 1; i < n; ++i) m += (st.ages[static_cast<std::size_t>(i)] >= p.gamma);
      sx += x;
      sy += m;
      sxx += x * x;
      syy += static_cast<double>(m) * m;
      sxy += x * m;
      ++cnt;
    }
    st = step(st, p, rng).first;
  }
  REQUIRE(cnt > 100000);
  const double c = static_cast<double>(cnt);
  const double cov = sxy / c - (sx / c) * (sy / c);
  const double vx = sxx / c - (sx / c) * (sx / c);
  const double vy = syy / c - (sy / c) * (sy / c);
  const double corr = cov / std::sqrt(vx * vy);
  CHECK(std::fabs(corr) < 0.05);
}
