#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "analytic.hpp"
#include "errors.hpp"
#include "protocol.hpp"
#include "rng.hpp"
#include "threads.hpp"

namespace mista {

enum class InitMode { AllGamma, AllOnes };

struct RunConfig {
  PolicyParams params;
  std::int64_t slots = 0;
  std::int64_t warmup_slots = -1;  // -1: slots / 10
  std::uint64_t seed = 1;
  int replications = 1;
  InitMode init = InitMode::AllGamma;

  std::int64_t effective_warmup() const {
    return warmup_slots < 0 ? slots / 10 : warmup_slots;
  }

  void validate() const {
    params.validate();
    if (slots < 1) throw DomainError("slots must be >= 1");
    if (effective_warmup() >= slots) throw DomainError("warmup must be < slots");
    if (replications < 1) throw DomainError("replications must be >= 1");
    // worst-case AoI accumulator: ages stay <= gamma + t
    const long double worst = static_cast<long double>(params.n) *
                              (static_cast<long double>(params.effective_gamma()) + slots) *
                              static_cast<long double>(slots);
    if (worst > 8e18L) throw SizeError("AoI accumulator would overflow int64");
  }
};

struct RunMetrics {
  std::vector<double> avg_aoi_per_source;
  double network_avg_aoi = 0.0;
  double throughput = 0.0;  // successes per slot, post-warmup
  std::map<int, double> active_count_histogram;  // m -> fraction of slots
  std::vector<std::pair<std::int64_t, double>> k_trajectory;  // (slot, m/n)
  std::int64_t successes = 0;
};

// single-trajectory run; bit-compatible with iterating step() on the same rng
// stream (same draw order), but with O(1) bookkeeping per slot
inline RunMetrics run(const RunConfig& config) {
  config.validate();
  const PolicyParams& P = config.params;
  const int n = P.n;
  const std::int64_t T = config.slots;
  const std::int64_t W = config.effective_warmup();
  const std::int64_t gamma = P.effective_gamma();

  // ages via birth slots: age_i(t) = t - b[i] + 1
  std::vector<std::int64_t> b(static_cast<std::size_t>(n),
                              config.init == InitMode::AllGamma ? 1 - gamma : 0);
  std::vector<std::int64_t> seg_begin(static_cast<std::size_t>(n), 0);
  std::vector<std::int64_t> src_sum(static_cast<std::size_t>(n), 0);
  std::vector<std::uint8_t> active(static_cast<std::size_t>(n),
                                   config.init == InitMode::AllGamma ? 1 : 0);
  int m = config.init == InitMode::AllGamma ? n : 0;

  // activation calendar: slot index mod gamma -> sources turning active there
  std::vector<std::vector<int>> ring(static_cast<std::size_t>(gamma));
  if (config.init == InitMode::AllOnes) {
    auto& cell = ring[static_cast<std::size_t>((gamma - 1) % gamma)];
    for (int i = 0; i < n; ++i) cell.push_back(i);
  }

  // exact arithmetic-series charge for slots [max(seg_begin, W), t]
  auto charge = [&](int i, std::int64_t t) {
    const std::int64_t a = std::max(seg_begin[static_cast<std::size_t>(i)], W);
    if (a > t) return;
    const std::int64_t len = t - a + 1;
    const std::int64_t ends = a + t;
    const std::int64_t tri = (len % 2 == 0) ? (len / 2) * ends : len * (ends / 2);
    src_sum[static_cast<std::size_t>(i)] +=
        tri + len * (1 - b[static_cast<std::size_t>(i)]);
  };

  const std::vector<double> sched =
      P.policy == PolicyKind::MuMista ? P.retention_schedule() : std::vector<double>{};
  const double p0 = P.policy == PolicyKind::MuMista ? sched[0] : P.tau1;

  Xoshiro256pp rng(config.seed);
  RunMetrics met;
  std::vector<std::int64_t> hist(static_cast<std::size_t>(n) + 1, 0);
  const std::int64_t stride = std::max<std::int64_t>(1, T / 10000);
  std::int64_t succ = 0;
  std::vector<int> buf, round_hits, pool;
  buf.reserve(static_cast<std::size_t>(n));
  round_hits.reserve(static_cast<std::size_t>(n));

  for (std::int64_t t = 0; t < T; ++t) {
    auto& cell = ring[static_cast<std::size_t>(t % gamma)];
    for (int i : cell) {
      active[static_cast<std::size_t>(i)] = 1;
      ++m;
    }
    cell.clear();

    if (t >= W) ++hist[static_cast<std::size_t>(m)];
    if (t % stride == 0)
      met.k_trajectory.emplace_back(t, static_cast<double>(m) / n);

    buf.clear();
    for (int i = 0; i < n; ++i)
      if (active[static_cast<std::size_t>(i)] && rng.bernoulli(p0)) buf.push_back(i);

    int winner = -1;
    if (buf.size() == 1) {
      winner = buf[0];
    } else if (buf.size() >= 2) {
      switch (P.policy) {
        case PolicyKind::SlottedAloha:
        case PolicyKind::ThresholdAloha:
          break;  // collision, no resolution round
        case PolicyKind::Mista:
          round_hits.clear();
          for (int i : buf)
            if (rng.bernoulli(P.tau2)) round_hits.push_back(i);
          if (round_hits.size() == 1) winner = round_hits[0];
          break;
        case PolicyKind::MuMista: {
          pool = buf;
          for (int stage = 1; stage < P.num_minislots && winner < 0; ++stage) {
            round_hits.clear();
            for (int i : pool)
              if (rng.bernoulli(sched[static_cast<std::size_t>(stage)]))
                round_hits.push_back(i);
            if (round_hits.size() == 1)
              winner = round_hits[0];
            else if (round_hits.size() >= 2)
              pool = round_hits;
          }
          break;
        }
      }
    }

    if (winner >= 0) {
      charge(winner, t);
      b[static_cast<std::size_t>(winner)] = t + 1;
      seg_begin[static_cast<std::size_t>(winner)] = t + 1;
      active[static_cast<std::size_t>(winner)] = 0;
      --m;
      ring[static_cast<std::size_t>((t + gamma) % gamma)].push_back(winner);
      if (t >= W) ++succ;
    }
  }
  for (int i = 0; i < n; ++i) charge(i, T - 1);

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
      met.active_count_histogram[mm] =
          static_cast<double>(hist[static_cast<std::size_t>(mm)]) / denom;
  return met;
}

struct ReplicatedMetrics {
  RunMetrics aggregate;  // per-field means across replications
  std::vector<RunMetrics> per_replication;
  double throughput_mean = 0.0, throughput_std = 0.0;
  double aoi_mean = 0.0, aoi_std = 0.0;
};

// replication i runs on seed + i; workers pull indices from a shared counter
inline ReplicatedMetrics run_replicated(const RunConfig& config) {
  config.validate();
  const int R = config.replications;
  ReplicatedMetrics out;
  out.per_replication.resize(static_cast<std::size_t>(R));

  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&]() {
    for (int i; (i = next.fetch_add(1)) < R;) {
      try {
        RunConfig c = config;
        c.seed = config.seed + static_cast<std::uint64_t>(i);
        c.replications = 1;
        out.per_replication[static_cast<std::size_t>(i)] = run(c);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };

  const int tc = std::min(default_thread_count(), R);
  if (tc <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(tc));
    for (int i = 0; i < tc; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);

  const int n = config.params.n;
  auto& agg = out.aggregate;
  agg.avg_aoi_per_source.assign(static_cast<std::size_t>(n), 0.0);
  double sum_thr = 0.0, sum_thr2 = 0.0, sum_aoi = 0.0, sum_aoi2 = 0.0;
  double sum_succ = 0.0;
  for (const auto& rep : out.per_replication) {
    for (int i = 0; i < n; ++i)
      agg.avg_aoi_per_source[static_cast<std::size_t>(i)] +=
          rep.avg_aoi_per_source[static_cast<std::size_t>(i)] / R;
    agg.network_avg_aoi += rep.network_avg_aoi / R;
    agg.throughput += rep.throughput / R;
    sum_succ += static_cast<double>(rep.successes);
    for (const auto& [mm, fr] : rep.active_count_histogram)
      agg.active_count_histogram[mm] += fr / R;
    sum_thr += rep.throughput;
    sum_thr2 += rep.throughput * rep.throughput;
    sum_aoi += rep.network_avg_aoi;
    sum_aoi2 += rep.network_avg_aoi * rep.network_avg_aoi;
  }
  agg.successes = std::llround(sum_succ / R);
  agg.k_trajectory = out.per_replication[0].k_trajectory;

  out.throughput_mean = sum_thr / R;
  out.aoi_mean = sum_aoi / R;
  if (R > 1) {
    out.throughput_std =
        std::sqrt(std::max(0.0, (sum_thr2 - sum_thr * sum_thr / R) / (R - 1)));
    out.aoi_std = std::sqrt(std::max(0.0, (sum_aoi2 - sum_aoi * sum_aoi / R) / (R - 1)));
  }
  return out;
}

// normalized empirical PMF of the active count; n inferred from per-source data
inline ActiveCountPmf empirical_active_pmf(const RunMetrics& metrics) {
  if (metrics.active_count_histogram.empty())
    throw DomainError("empty active-count histogram");
  const int n = static_cast<int>(metrics.avg_aoi_per_source.size());
  const int lo = metrics.active_count_histogram.begin()->first;
  const int hi = metrics.active_count_histogram.rbegin()->first;
  ActiveCountPmf pmf{n, lo, std::vector<double>(static_cast<std::size_t>(hi - lo + 1), 0.0)};
  double z = 0.0;
  for (const auto& [mm, fr] : metrics.active_count_histogram) z += fr;
  for (const auto& [mm, fr] : metrics.active_count_histogram)
    pmf.probabilities[static_cast<std::size_t>(mm - lo)] = fr / z;
  return pmf;
}

}  // namespace mista
