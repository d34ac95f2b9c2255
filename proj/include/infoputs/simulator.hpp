#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "infoputs/contagion.hpp"
#include "infoputs/game.hpp"
#include "infoputs/policy.hpp"

namespace infoputs {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// splitmix64 of (seed, stream); one independent generator per trial.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

enum class EventKind { start, silence_segment, injection, jump, clock_tick, end };

const char* to_string(EventKind k);

struct TrajEvent {
  double t = 0.0;
  Belief mu;
  double A = 0.0;
  double Z = 0.0;
  EventKind kind = EventKind::start;
};

struct Trajectory {
  std::vector<TrajEvent> events;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::size_t N = 0;  // 0 in continuum mode
  APath path{0.0, 1.0};
  std::size_t injections = 0;
  std::size_t jumps = 0;

  void write_csv(const std::string& path) const;
};

struct SimState {
  double t;
  const Belief& mu;
  double A;
  double Z;
};

// How agents who get to move choose: compliant agents pick 1; adversarial ones
// pick 0 until the predicate first holds, then 1 for good; scripted windows
// override with a fixed flow.
struct AgentProfile {
  enum class Kind { compliant, adversarial_until, scripted };
  struct Window {
    double t0, t1;
    Flow flow;  // down or hold
  };

  Kind kind = Kind::compliant;
  std::function<bool(const SimState&)> until;
  std::vector<Window> windows;
  std::string label = "compliant";
  // finite mode: optional per-agent initial actions (sum must equal N·A0)
  std::vector<int> initial_actions;

  static AgentProfile compliant();
  static AgentProfile adversarial_until(std::function<bool(const SimState&)> pred, std::string label);
  static AgentProfile scripted(std::vector<Window> windows);

  // Flow of the agents who move at this state.
  Flow flow(const SimState& s) const;
  // Next time after t at which flow() can change for a reason other than the state.
  double next_boundary(double t) const;
};

// Region presets for adversarial_until.
AgentProfile until_upper_dominance(std::shared_ptr<const DominanceModel> model);
AgentProfile until_certified(std::shared_ptr<const DominanceModel> model, double epsilon);

struct SimOptions {
  double scan_step = 0.01;
  double epsilon = 1e-3;        // certified-region margin used for tail extrapolation
  std::size_t max_events = 2'000'000;
  bool record_ticks = true;
  // Stop running the policy once play no longer depends on beliefs; the A-path
  // law is unchanged and the injection cascade near Ψ_LD is skipped.
  bool detach_when_belief_free = false;
  // Count tolerance triggers (and reset Z) without moving beliefs.
  bool freeze_beliefs = false;
};

Trajectory simulate_continuum(const Policy& policy, const Belief& mu0, double A0,
                              const AgentProfile& profile, double horizon, std::uint64_t seed,
                              const SimOptions& opt = {});

Trajectory simulate_finite(const Policy& policy, std::size_t N, const Belief& mu0, double A0,
                           const AgentProfile& profile, double horizon, std::uint64_t seed,
                           const SimOptions& opt = {});

struct ConcentrationResult {
  std::size_t N = 0;
  double delta = 0.0;
  std::size_t trials = 0;
  double tail_probability = 0.0;  // P(sup_t |Ā^N_t - Ā_t| > δ)
  double analytic_bound = 0.0;     // min(1, 337 δ^-4 / N)
  double median_sup = 0.0;
  double mean_sup = 0.0;
};

double concentration_bound(std::size_t N, double delta);

ConcentrationResult concentration_experiment(double lambda, double A0, std::size_t N, double delta,
                                             std::size_t trials, std::uint64_t seed);

struct ValueEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

// Closed-form worst-case value. Refuses (DomainError) when the starting belief or
// the post-jump belief is outside Ψ_LD but within ε of it.
double adversarial_value_analytic(const Policy& policy, const Belief& mu0, double A0,
                                  const PayoffFunctional& phi, double epsilon);

// Monte Carlo under adversarial_until(certified ε).
ValueEstimate adversarial_value_mc(const Policy& policy, const Belief& mu0, double A0,
                                   const PayoffFunctional& phi, std::size_t trials,
                                   std::uint64_t seed, double horizon = 10.0,
                                   double epsilon = 1e-3);

enum class HistoryKind { on_path, triggering, inside_ld, absorbed };

const char* to_string(HistoryKind k);

struct AuditEntry {
  HistoryKind kind;
  double mu, A, Z;
  SplitLabel action;
  double sup;    // re-optimised supremum at the pre-state
  double value;  // continuation value under the policy
  double gap;
  double bound;  // allowed gap
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  double max_gap_outside = 0.0;
  double max_gap_inside = 0.0;
  double min_gap = 0.0;
  std::size_t failures = 0;
  bool passed = true;
  AuditEntry worst{};
};

struct AuditOptions {
  std::size_t histories = 1000;
  std::uint64_t seed = 1;
  double tolerance = 1e-6;
};

AuditReport sequential_optimality_audit(const Policy& policy, const PayoffFunctional& phi,
                                        const AuditOptions& opt = {});

struct MultiplicityGap {
  std::size_t N = 0;
  double opt = 0.0, adv = 0.0, gap = 0.0;
  double se_opt = 0.0, se_adv = 0.0, se_gap = 0.0;
  std::size_t trials = 0;
};

// opt_N under compliant play, adv_N under adversarial_until(certified ε), paired seeds.
MultiplicityGap estimate_multiplicity_gap(const Policy& policy, std::size_t N, const Belief& mu0,
                                          double A0, const PayoffFunctional& phi,
                                          std::size_t trials, std::uint64_t seed,
                                          double horizon = 10.0, double epsilon = 1e-3);

}  // namespace infoputs
