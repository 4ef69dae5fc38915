#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "mista/protocol.hpp"
#include "mista/rng.hpp"
#include "mista/sim.hpp"

using namespace mista;

namespace {

RunConfig base_config(PolicyKind kind, int n, int gamma, double t1, double t2,
                      std::int64_t slots, std::uint64_t seed) {
  RunConfig c;
  c.params.policy = kind;
  c.params.n = n;
  c.params.gamma = gamma;
  c.params.tau1 = t1;
  c.params.tau2 = t2;
  c.slots = slots;
  c.seed = seed;
  return c;
}

// straight step() loop over the same rng stream; the state age at slot start
// is charged for that slot, winners counted after warmup
RunMetrics reference_run(const RunConfig& config) {
  const PolicyParams& P = config.params;
  const int n = P.n;
  const std::int64_t T = config.slots, W = config.effective_warmup();
  const int gamma = P.effective_gamma();

  NetworkState st = config.init == InitMode::AllGamma ? NetworkState::all_gamma(n, gamma)
                                                      : NetworkState::all_ones(n);
  Xoshiro256pp rng(config.seed);

  std::vector<std::int64_t> src_sum(static_cast<std::size_t>(n), 0);
  std::vector<std::int64_t> hist(static_cast<std::size_t>(n) + 1, 0);
  const std::int64_t stride = std::max<std::int64_t>(1, T / 10000);
  RunMetrics met;
  std::int64_t succ = 0;

  for (std::int64_t t = 0; t < T; ++t) {
    int m = 0;
    for (int i = 0; i < n; ++i) m += (st.ages[static_cast<std::size_t>(i)] >= gamma);
    if (t >= W) {
      ++hist[static_cast<std::size_t>(m)];
      for (int i = 0; i < n; ++i) src_sum[static_cast<std::size_t>(i)] += st.ages[static_cast<std::size_t>(i)];
    }
    if (t % stride == 0) met.k_trajectory.emplace_back(t, static_cast<double>(m) / n);
    auto [nxt, out] = step(st, P, rng);
    if (out.winner >= 0 && t >= W) ++succ;
    st = std::move(nxt);
  }

  const double denom = static_cast<double>(T - W);
  met.avg_aoi_per_source.resize(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    met.avg_aoi_per_source[static_cast<std::size_t>(i)] =
        static_cast<double>(src_sum[static_cast<std::size_t>(i)]) / denom;
    total += met.avg_aoi_per_source[static_cast<std::size_t>(i)];
  }
  met.network_avg_aoi = total / n;
  met.successes = succ;
  met.throughput = static_cast<double>(succ) / denom;
  for (int mm = 0; mm <= n; ++mm)
    if (hist[static_cast<std::size_t>(mm)] > 0)
      met.active_count_histogram[mm] = static_cast<double>(hist[static_cast<std::size_t>(mm)]) / denom;
  return met;
}

void check_metrics_equal(const RunMetrics& a, const RunMetrics& b) {
  CHECK(a.successes == b.successes);
  CHECK(a.throughput == b.throughput);
  CHECK(a.active_count_histogram == b.active_count_histogram);
  CHECK(a.k_trajectory == b.k_trajectory);
  REQUIRE(a.avg_aoi_per_source.size() == b.avg_aoi_per_source.size());
  for (std::size_t i = 0; i < a.avg_aoi_per_source.size(); ++i)
    CHECK_THAT(a.avg_aoi_per_source[i], Catch::Matchers::WithinRel(b.avg_aoi_per_source[i], 1e-12));
  CHECK_THAT(a.network_avg_aoi, Catch::Matchers::WithinRel(b.network_avg_aoi, 1e-12));
}

}  // namespace

TEST_CASE("run matches a plain per-slot loop") {
  for (auto kind : {PolicyKind::SlottedAloha, PolicyKind::ThresholdAloha, PolicyKind::Mista,
                    PolicyKind::MuMista}) {
    for (auto init : {InitMode::AllGamma, InitMode::AllOnes}) {
      RunConfig c = base_config(kind, 5, 4, 0.3, 0.6, 20000, 42);
      c.init = init;
      if (kind == PolicyKind::MuMista) c.params.num_minislots = 3;
      CAPTURE(static_cast<int>(kind), static_cast<int>(init));
      check_metrics_equal(run(c), reference_run(c));
    }
  }
}

TEST_CASE("single source closed form") {
  // one source: ramp of gamma-1 passive slots, then geometric dwell at the
  // threshold until an attempt lands; tau2 never enters (a sole attempter
  // wins in the first round)
  const int gamma = 10;
  const double t1 = 0.3;
  RunConfig c = base_config(PolicyKind::Mista, 1, gamma, t1, 0.9, 2000000, 3);
  const RunMetrics met = run(c);

  const double expected = gamma * (gamma - 1.0) / (2.0 * (gamma - 1.0 + 1.0 / t1)) + 1.0 / t1;
  CHECK_THAT(expected, Catch::Matchers::WithinAbs(6.98198, 1e-5));
  CHECK_THAT(met.network_avg_aoi, Catch::Matchers::WithinRel(expected, 0.01));

  // throughput = 1 / mean cycle length
  CHECK_THAT(met.throughput, Catch::Matchers::WithinRel(1.0 / (gamma - 1.0 + 1.0 / t1), 0.01));
}

TEST_CASE("same seed reproduces the run") {
  const RunConfig c = base_config(PolicyKind::Mista, 20, 15, 0.2, 0.5, 50000, 2024);
  const RunMetrics a = run(c), b = run(c);
  CHECK(a.successes == b.successes);
  CHECK(a.throughput == b.throughput);
  CHECK(a.network_avg_aoi == b.network_avg_aoi);
  CHECK(a.avg_aoi_per_source == b.avg_aoi_per_source);

  RunConfig d = c;
  d.seed = 2025;
  CHECK(run(d).network_avg_aoi != a.network_avg_aoi);
}

TEST_CASE("replications run on consecutive seeds") {
  RunConfig c = base_config(PolicyKind::Mista, 8, 6, 0.25, 0.5, 30000, 100);
  c.replications = 3;
  const ReplicatedMetrics rep = run_replicated(c);
  REQUIRE(rep.per_replication.size() == 3);

  for (int i = 0; i < 3; ++i) {
    RunConfig single = c;
    single.replications = 1;
    single.seed = c.seed + static_cast<std::uint64_t>(i);
    const RunMetrics solo = run(single);
    CHECK(rep.per_replication[static_cast<std::size_t>(i)].throughput == solo.throughput);
    CHECK(rep.per_replication[static_cast<std::size_t>(i)].network_avg_aoi == solo.network_avg_aoi);
  }

  double mean = 0.0;
  for (const auto& r : rep.per_replication) mean += r.throughput / 3.0;
  CHECK_THAT(rep.throughput_mean, Catch::Matchers::WithinRel(mean, 1e-12));
  CHECK_THAT(rep.aggregate.throughput, Catch::Matchers::WithinRel(mean, 1e-12));

  RunConfig one = c;
  one.replications = 1;
  const ReplicatedMetrics ro = run_replicated(one);
  CHECK(ro.throughput_std == 0.0);
  check_metrics_equal(ro.aggregate, run(one));
}

TEST_CASE("replication spread stays small at the stable operating point") {
  ScaledParams sp;
  sp.alpha = 9.8;
  sp.r = 1.59;
  sp.tau2 = 0.37;
  RunConfig c;
  c.params = sp.to_policy(100);
  c.slots = 1000000;
  c.seed = 1;
  c.replications = 8;
  const ReplicatedMetrics rep = run_replicated(c);
  CHECK(rep.throughput_std < 0.01);
  CHECK(rep.throughput_mean > 0.4);
}

TEST_CASE("threshold 1 behaves like plain aloha") {
  RunConfig ta = base_config(PolicyKind::ThresholdAloha, 10, 1, 0.3, 1.0, 100000, 11);
  RunConfig sa = base_config(PolicyKind::SlottedAloha, 10, 1, 0.3, 1.0, 100000, 11);
  const RunMetrics a = run(ta), b = run(sa);
  CHECK(a.network_avg_aoi == b.network_avg_aoi);
  CHECK(a.throughput == b.throughput);
  CHECK(a.successes == b.successes);
  CHECK(a.avg_aoi_per_source == b.avg_aoi_per_source);
  CHECK_THAT(a.network_avg_aoi, Catch::Matchers::WithinAbs(82.591674, 1e-5));
  CHECK_THAT(a.throughput, Catch::Matchers::WithinAbs(0.121456, 1e-5));
}

TEST_CASE("bookkeeping identities") {
  const RunConfig c = base_config(PolicyKind::Mista, 30, 20, 0.15, 0.4, 40000, 7);
  const RunMetrics met = run(c);
  const double denom = static_cast<double>(c.slots - c.effective_warmup());

  CHECK(met.successes == std::llround(met.throughput * denom));

  double hist_total = 0.0;
  for (const auto& [m, fr] : met.active_count_histogram) {
    CHECK(m >= 0);
    CHECK(m <= 30);
    hist_total += fr;
  }
  CHECK_THAT(hist_total, Catch::Matchers::WithinAbs(1.0, 1e-12));

  const std::int64_t stride = std::max<std::int64_t>(1, c.slots / 10000);
  REQUIRE(!met.k_trajectory.empty());
  CHECK(met.k_trajectory.front().first == 0);
  CHECK(met.k_trajectory.size() == static_cast<std::size_t>((c.slots + stride - 1) / stride));
  for (const auto& [t, k] : met.k_trajectory) {
    CHECK(t % stride == 0);
    CHECK(k >= 0.0);
    CHECK(k <= 1.0);
  }
}

TEST_CASE("all-ones start delays the first activation wave") {
  RunConfig c = base_config(PolicyKind::Mista, 50, 20, 0.1, 0.5, 25, 5);
  c.init = InitMode::AllOnes;
  c.warmup_slots = 0;
  const RunMetrics met = run(c);
  // stride is 1 here, so the trajectory covers every slot
  REQUIRE(met.k_trajectory.size() == 25);
  for (int t = 0; t < 19; ++t) CHECK(met.k_trajectory[static_cast<std::size_t>(t)].second == 0.0);
  CHECK(met.k_trajectory[19].second == 1.0);
}

TEST_CASE("degenerate and invalid configs") {
  RunConfig c = base_config(PolicyKind::Mista, 3, 2, 0.4, 0.5, 1, 1);
  const RunMetrics met = run(c);  // one slot, zero warmup
  CHECK(met.k_trajectory.size() == 1);
  CHECK(met.network_avg_aoi >= 1.0);

  CHECK(base_config(PolicyKind::Mista, 3, 2, 0.4, 0.5, 40, 1).effective_warmup() == 4);

  RunConfig bad = c;
  bad.slots = 0;
  CHECK_THROWS_AS(run(bad), DomainError);
  bad = c;
  bad.slots = 100;
  bad.warmup_slots = 100;
  CHECK_THROWS_AS(run(bad), DomainError);
  bad = c;
  bad.replications = 0;
  CHECK_THROWS_AS(run_replicated(bad), DomainError);
  bad = base_config(PolicyKind::Mista, 1000, 1000, 0.01, 0.5, 4000000000LL, 1);
  CHECK_THROWS_AS(run(bad), SizeError);
}

TEST_CASE("empirical pmf renormalizes the histogram") {
  const RunConfig c = base_config(PolicyKind::Mista, 12, 8, 0.2, 0.5, 60000, 9);
  const RunMetrics met = run(c);
  const ActiveCountPmf pmf = empirical_active_pmf(met);

  CHECK(pmf.n == 12);
  CHECK_THAT(pmf.total(), Catch::Matchers::WithinAbs(1.0, 1e-12));

  int arg = -1;
  double best = -1.0;
  for (const auto& [m, fr] : met.active_count_histogram)
    if (fr > best) {
      best = fr;
      arg = m;
    }
  CHECK(pmf.mode() == arg);

  CHECK_THROWS_AS(empirical_active_pmf(RunMetrics{}), DomainError);
}
