#pragma once

#include <limits>
#include <memory>
#include <string>

#include "infoputs/dominance.hpp"
#include "infoputs/types.hpp"

namespace infoputs {

enum class TolRule { exact_appendix, quadratic_maintext };

struct PolicyParams {
  GameConstants k;
  double eta = 0.01;
  TolRule tol_rule = TolRule::exact_appendix;
  double m = 0.0;  // quadratic_maintext coefficient
  double W = 0.0;  // stopping-game gap floor; 0 for flow games
  bool finite_mode = false;
  double finite_delta_bar = 0.1;

  double delta_bar() const { return finite_mode ? finite_delta_bar : k.delta_bar; }
  // η in (0,1), TOL < 1 and M·TOL(D) <= D on a D-grid.
  void validate() const;
};

PolicyParams make_params(const GameConstants& k, double eta = 0.01);

double tol(const PolicyParams& p, double D);
double down(const PolicyParams& p, double D);

// The D-dependent coefficient m(D) with m(D)·D² equal to the exact schedule.
double maintext_coefficient(const PolicyParams& p, double D);

// Up-move probability DOWN/(DOWN + M·TOL) of the injection split.
double injection_up_probability(const PolicyParams& p, double D);

double target_drift(double Z, double lambda, double dt);

struct PolicyState {
  double t = 0.0;
  Belief mu_prev;   // μ_{t-}
  double Z_prev = 0.0;  // Z_{t-}
  double A = 0.0;   // A_t
};

enum class ZUpdate { drift, reset_to_A };

struct PolicyDecision {
  SignalSplit split;
  ZUpdate z_update = ZUpdate::drift;
};

enum class PolicyKind { puts, no_information, conclusive_bad_news, delayed_jump };

const char* to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& s);

// Stateless decision rule; the caller samples from the returned split.
class Policy {
 public:
  Policy(std::shared_ptr<const DominanceModel> model, PolicyParams params);
  virtual ~Policy() = default;

  virtual PolicyDecision step(const PolicyState& s) const = 0;
  virtual PolicyKind kind() const = 0;
  // Earliest time after s.t at which the rule changes with everything else frozen.
  virtual double next_scheduled_time(const PolicyState&) const {
    return std::numeric_limits<double>::infinity();
  }
  bool is_silent(const PolicyState& s) const {
    return step(s).split.label == SplitLabel::silence;
  }

  const DominanceModel& model() const { return *model_; }
  std::shared_ptr<const DominanceModel> model_ptr() const { return model_; }
  const PolicyParams& params() const { return params_; }

 protected:
  std::shared_ptr<const DominanceModel> model_;
  PolicyParams params_;
};

// The informational-puts rule: silence, injection, or jump.
PolicyDecision policy_step(const PolicyParams& params, const DominanceModel& model,
                           const PolicyState& s);

std::unique_ptr<Policy> make_puts_policy(std::shared_ptr<const DominanceModel> model,
                                         PolicyParams params);
std::unique_ptr<Policy> make_alternative_policy(PolicyKind kind,
                                                std::shared_ptr<const DominanceModel> model,
                                                PolicyParams params, double t_delay = 0.0);

}  // namespace infoputs
