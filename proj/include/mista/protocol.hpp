#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace mista {

enum class PolicyKind { SlottedAloha, ThresholdAloha, Mista, MuMista };

inline const char* policy_name(PolicyKind p) {
  switch (p) {
    case PolicyKind::SlottedAloha: return "slotted_aloha";
    case PolicyKind::ThresholdAloha: return "threshold_aloha";
    case PolicyKind::Mista: return "mista";
    case PolicyKind::MuMista: return "mumista";
  }
  return "?";
}

namespace detail {

// base^e for base in [0,1]; evaluated in log space once e*|ln base| > 30
inline double pow01(double base, double e) {
  if (e == 0.0) return 1.0;
  if (base <= 0.0) return 0.0;
  if (base >= 1.0) return 1.0;
  const double le = e * std::log(base);
  return le < -30.0 ? std::exp(le) : std::pow(base, e);
}

}  // namespace detail

// finite-n protocol configuration
struct PolicyParams {
  PolicyKind policy = PolicyKind::Mista;
  int n = 1;           // number of sources
  int gamma = 2;       // age threshold: sources with age >= gamma contend
  double tau1 = 0.5;   // minislot attempt probability
  double tau2 = 1.0;   // post-collision data attempt probability
  int num_minislots = 1;           // MuMista only
  std::vector<double> retention;   // MuMista per-minislot attempt probs; empty = default

  // SlottedAloha ignores gamma: everyone contends every slot
  int effective_gamma() const {
    return policy == PolicyKind::SlottedAloha ? 1 : gamma;
  }

  // advisory only; callers may warn but the configuration is legal
  bool tau2_exceeds_tau1() const { return tau2 > tau1; }

  // default MuMista schedule: tau1 for the opening minislot, tau2 afterwards
  std::vector<double> retention_schedule() const {
    if (!retention.empty()) return retention;
    std::vector<double> sched(static_cast<std::size_t>(num_minislots), tau2);
    sched[0] = tau1;
    return sched;
  }

  void validate() const {
    if (n < 1) throw DomainError("n must be >= 1");
    if (gamma < 1) throw DomainError("gamma must be >= 1");
    if (!(tau1 > 0.0) || tau1 > 1.0) throw DomainError("tau1 must be in (0,1]");
    if (!(tau2 > 0.0) || tau2 > 1.0) throw DomainError("tau2 must be in (0,1]");
    if (policy == PolicyKind::MuMista) {
      if (num_minislots < 1) throw DomainError("num_minislots must be >= 1");
      if (!retention.empty() &&
          retention.size() != static_cast<std::size_t>(num_minislots))
        throw DomainError("retention length must equal num_minislots");
      for (double p : retention)
        if (!(p > 0.0) || p > 1.0)
          throw DomainError("retention probabilities must be in (0,1]");
    }
  }
};

// asymptotic configuration: alpha = n*tau1, r = gamma/n
struct ScaledParams {
  double alpha = 1.0;
  double r = 1.0;
  double tau2 = 1.0;

  void validate() const {
    if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
    if (!(r > 0.0)) throw DomainError("r must be > 0");
    if (!(tau2 > 0.0) || tau2 > 1.0) throw DomainError("tau2 must be in (0,1]");
  }

  // gamma rounds to the nearest integer; caller validates the result
  PolicyParams to_policy(int n, PolicyKind kind = PolicyKind::Mista) const {
    PolicyParams p;
    p.policy = kind;
    p.n = n;
    p.gamma = static_cast<int>(std::lround(r * static_cast<double>(n)));
    p.tau1 = alpha / static_cast<double>(n);
    p.tau2 = tau2;
    return p;
  }
};

inline ScaledParams to_scaled(const PolicyParams& p) {
  return ScaledParams{p.tau1 * static_cast<double>(p.n),
                      static_cast<double>(p.gamma) / static_cast<double>(p.n),
                      p.tau2};
}

struct NetworkState {
  std::vector<std::int64_t> ages;  // true (untruncated) ages, all >= 1
  std::int64_t t = 0;

  static NetworkState all_gamma(int n, int gamma) {
    return NetworkState{std::vector<std::int64_t>(static_cast<std::size_t>(n),
                                                  static_cast<std::int64_t>(gamma)),
                        0};
  }
  static NetworkState all_ones(int n) {
    return NetworkState{std::vector<std::int64_t>(static_cast<std::size_t>(n), 1), 0};
  }
};

enum class OutcomeKind {
  Idle,                  // no attempter in the opening minislot
  MiniSuccess,           // sole attempter, delivered without a collision round
  CollisionThenSuccess,  // collision resolved to a single transmitter
  CollisionThenFail,     // collision, >= 2 data transmitters
  CollisionThenSilent    // collision, no data transmitter
};

inline const char* outcome_name(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Idle: return "idle";
    case OutcomeKind::MiniSuccess: return "mini_success";
    case OutcomeKind::CollisionThenSuccess: return "collision_then_success";
    case OutcomeKind::CollisionThenFail: return "collision_then_fail";
    case OutcomeKind::CollisionThenSilent: return "collision_then_silent";
  }
  return "?";
}

struct SlotOutcome {
  OutcomeKind kind = OutcomeKind::Idle;
  int winner = -1;                     // successful source, -1 if none
  std::vector<int> attempters;         // opening-round attempters, ascending
  std::vector<int> data_transmitters;  // sources that occupied the data slot

  bool success() const { return winner >= 0; }
};

inline std::vector<int> active_set(const NetworkState& state,
                                   const PolicyParams& params) {
  std::vector<int> out;
  const auto gate = static_cast<std::int64_t>(params.effective_gamma());
  for (int i = 0; i < params.n; ++i)
    if (state.ages[static_cast<std::size_t>(i)] >= gate) out.push_back(i);
  return out;
}

// slot success probability with m contenders: sole-attempter term plus the
// collision-then-single-transmitter term in closed form
inline double success_probability(int m, double tau1, double tau2) {
  if (m <= 0) return 0.0;
  const double md = m;
  return md * tau1 * (1.0 - tau2) * detail::pow01(1.0 - tau1, md - 1.0) +
         md * tau1 * tau2 * detail::pow01(1.0 - tau1 * tau2, md - 1.0);
}

namespace detail {

inline NetworkState advance_ages(const NetworkState& state, int n, int winner) {
  NetworkState nxt;
  nxt.t = state.t + 1;
  nxt.ages.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    nxt.ages[static_cast<std::size_t>(i)] =
        (i == winner) ? 1 : state.ages[static_cast<std::size_t>(i)] + 1;
  return nxt;
}

// draw the opening round: Bernoulli(p) over active sources in ascending index order
template <class Rng>
std::vector<int> draw_attempters(const NetworkState& state, const PolicyParams& params,
                                 double p, Rng& rng) {
  std::vector<int> out;
  const auto gate = static_cast<std::int64_t>(params.effective_gamma());
  for (int i = 0; i < params.n; ++i)
    if (state.ages[static_cast<std::size_t>(i)] >= gate && rng.bernoulli(p))
      out.push_back(i);
  return out;
}

}  // namespace detail

// MuMista slot: sequential minislots, each with its own retention probability.
// A sole attempter at any stage wins immediately. A collision at stage j narrows
// the pool to the stage-j attempters; total silence keeps the pool. Pool still
// ambiguous after the last minislot -> no data transmission.
template <class Rng>
std::pair<NetworkState, SlotOutcome> mumista_step(const NetworkState& state,
                                                  const PolicyParams& params,
                                                  Rng& rng) {
  const std::vector<double> sched = params.retention_schedule();
  SlotOutcome out;
  out.attempters = detail::draw_attempters(state, params, sched[0], rng);

  if (out.attempters.empty()) {
    out.kind = OutcomeKind::Idle;
  } else if (out.attempters.size() == 1) {
    out.kind = OutcomeKind::MiniSuccess;
    out.winner = out.attempters[0];
    out.data_transmitters = out.attempters;
  } else {
    std::vector<int> pool = out.attempters, stage_hits;
    int sole = -1;
    for (int stage = 1; stage < params.num_minislots && sole < 0; ++stage) {
      stage_hits.clear();
      for (int i : pool)
        if (rng.bernoulli(sched[static_cast<std::size_t>(stage)]))
          stage_hits.push_back(i);
      if (stage_hits.size() == 1)
        sole = stage_hits[0];
      else if (stage_hits.size() >= 2)
        pool = stage_hits;
      // total silence: pool unchanged
    }
    if (sole >= 0) {
      out.kind = OutcomeKind::CollisionThenSuccess;
      out.winner = sole;
      out.data_transmitters = {sole};
    } else {
      out.kind = OutcomeKind::CollisionThenSilent;
    }
  }
  return {detail::advance_ages(state, params.n, out.winner), std::move(out)};
}

// one slot transition; consumes rng draws in ascending source-index order
// (opening round over active sources, then tau2 round over attempters)
template <class Rng>
std::pair<NetworkState, SlotOutcome> step(const NetworkState& state,
                                          const PolicyParams& params, Rng& rng) {
  if (params.policy == PolicyKind::MuMista) return mumista_step(state, params, rng);

  SlotOutcome out;
  out.attempters = detail::draw_attempters(state, params, params.tau1, rng);

  if (out.attempters.empty()) {
    out.kind = OutcomeKind::Idle;
  } else if (out.attempters.size() == 1) {
    out.kind = OutcomeKind::MiniSuccess;
    out.winner = out.attempters[0];
    out.data_transmitters = out.attempters;
  } else if (params.policy != PolicyKind::Mista) {
    // aloha variants: the attempt is the data transmission; >= 2 collide
    out.kind = OutcomeKind::CollisionThenFail;
    out.data_transmitters = out.attempters;
  } else {
    for (int i : out.attempters)
      if (rng.bernoulli(params.tau2)) out.data_transmitters.push_back(i);
    if (out.data_transmitters.size() == 1) {
      out.kind = OutcomeKind::CollisionThenSuccess;
      out.winner = out.data_transmitters[0];
    } else if (out.data_transmitters.empty()) {
      out.kind = OutcomeKind::CollisionThenSilent;
    } else {
      out.kind = OutcomeKind::CollisionThenFail;
    }
  }
  return {detail::advance_ages(state, params.n, out.winner), std::move(out)};
}

}  // namespace mista
