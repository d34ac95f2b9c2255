#include "infoputs/policy.hpp"

#include <algorithm>
#include <cmath>

namespace infoputs {

namespace {

std::vector<double> axpy(const Belief& mu, double a, const std::vector<double>& d) {
  std::vector<double> w(mu.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = mu[k] + a * d[k];
  return w;
}

Belief simplex_point(std::vector<double> w) {
  for (double x : w)
    if (x < -1e-12 || x > 1.0 + 1e-12)
      throw DomainError("injection posterior leaves the simplex; parameter schedule violated");
  return Belief(std::move(w));
}

std::vector<double> injection_direction(const DominanceModel& model, const Belief& mu) {
  if (model.binary()) {
    std::vector<double> d(2, -1.0);
    d[model.dominant()] = 1.0;
    return d;
  }
  return belief_direction(mu, model.dominant());
}

PolicyDecision silence(const Belief& mu) {
  PolicyDecision d;
  d.split.label = SplitLabel::silence;
  d.split.posteriors = {mu};
  d.split.probs = {1.0};
  d.z_update = ZUpdate::drift;
  return d;
}

PolicyDecision jump(const PolicyParams& params, const DominanceModel& model, const PolicyState& s) {
  // D <= 0 with ΔŪ > 0 only happens through rounding at the boundary
  if (!model.in_lower_region(s.mu_prev, s.A)) return silence(s.mu_prev);
  double pstar = model.escape_probability(s.mu_prev, s.A);
  if (!(pstar > 0.0)) return silence(s.mu_prev);
  // when p* <= η no split with margin η exists; half of p* keeps the atom outside
  double eta = std::min(params.eta, 0.5 * pstar);
  PolicyDecision d;
  d.split = model.escape_split(s.mu_prev, s.A, eta);
  d.z_update = ZUpdate::reset_to_A;
  return d;
}

enum class Branch { face, lower, silent, inject };

Branch classify(const PolicyParams& params, const DominanceModel& model, const PolicyState& s,
                double* D_out) {
  if (model.on_face(s.mu_prev)) return Branch::face;
  if (model.in_lower_region(s.mu_prev, s.A)) return Branch::lower;
  double D = model.distance(s.mu_prev, s.A);
  if (!(D > 0.0)) return Branch::lower;
  *D_out = D;
  if (std::abs(s.A - s.Z_prev) < tol(params, D)) return Branch::silent;
  // No room for the up-move: only harmless when action 1 is already dominant.
  if (model.in_upper_region(s.mu_prev, s.A)) {
    auto d = injection_direction(model, s.mu_prev);
    for (double x : axpy(s.mu_prev, params.k.M * tol(params, D), d))
      if (x < -1e-12 || x > 1.0 + 1e-12) return Branch::silent;
  }
  return Branch::inject;
}

class PutsPolicy : public Policy {
 public:
  using Policy::Policy;
  PolicyDecision step(const PolicyState& s) const override {
    return policy_step(params_, *model_, s);
  }
  PolicyKind kind() const override { return PolicyKind::puts; }
};

class NoInformationPolicy : public Policy {
 public:
  using Policy::Policy;
  PolicyDecision step(const PolicyState& s) const override { return silence(s.mu_prev); }
  PolicyKind kind() const override { return PolicyKind::no_information; }
};

class ConclusiveBadNewsPolicy : public Policy {
 public:
  using Policy::Policy;
  PolicyDecision step(const PolicyState& s) const override {
    double D = 0.0;
    if (classify(params_, *model_, s, &D) != Branch::inject) return policy_step(params_, *model_, s);
    const std::size_t dom = model_->dominant();
    auto d = injection_direction(*model_, s.mu_prev);
    Belief up = simplex_point(axpy(s.mu_prev, params_.k.M * tol(params_, D), d));
    double q = s.mu_prev[dom] / up[dom];
    std::vector<double> bad(s.mu_prev.size());
    for (std::size_t k = 0; k < bad.size(); ++k) bad[k] = (s.mu_prev[k] - q * up[k]) / (1.0 - q);
    bad[dom] = 0.0;
    double sb = 0.0;
    for (double& x : bad) sb += (x = std::max(0.0, x));
    for (double& x : bad) x /= sb;
    PolicyDecision out;
    out.split.label = SplitLabel::injection;
    out.split.posteriors = {up, Belief(bad)};
    out.split.probs = {q, 1.0 - q};
    out.z_update = ZUpdate::reset_to_A;
    return out;
  }
  PolicyKind kind() const override { return PolicyKind::conclusive_bad_news; }
};

class DelayedJumpPolicy : public Policy {
 public:
  DelayedJumpPolicy(std::shared_ptr<const DominanceModel> model, PolicyParams params, double t_delay)
      : Policy(std::move(model), params), t_delay_(t_delay) {}
  PolicyDecision step(const PolicyState& s) const override {
    if (s.t < t_delay_ && !model_->on_face(s.mu_prev) && model_->in_lower_region(s.mu_prev, s.A))
      return silence(s.mu_prev);
    return policy_step(params_, *model_, s);
  }
  double next_scheduled_time(const PolicyState& s) const override {
    if (s.t < t_delay_ && !model_->on_face(s.mu_prev) && model_->in_lower_region(s.mu_prev, s.A))
      return t_delay_;
    return std::numeric_limits<double>::infinity();
  }
  PolicyKind kind() const override { return PolicyKind::delayed_jump; }

 private:
  double t_delay_;
};

}  // namespace

void PolicyParams::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("eta must lie in (0,1)");
  if (tol_rule == TolRule::quadratic_maintext && !(m > 0.0))
    throw DomainError("quadratic tolerance needs m > 0");
  if (W < 0.0) throw DomainError("gap floor W must be nonnegative");
  if (!(k.L > 0.0 && k.M > 0.0 && k.C > 0.0 && delta_bar() > 0.0))
    throw DomainError("policy constants must be positive");
  for (int i = 1; i <= 1000; ++i) {
    double D = i / 1000.0;
    double t = tol(*this, D);
    if (!(t < 1.0) || k.M * t > D * (1.0 + 1e-12))
      throw DomainError("tolerance schedule violates M*TOL(D) <= D");
  }
}

PolicyParams make_params(const GameConstants& k, double eta) {
  PolicyParams p;
  p.k = k;
  p.eta = eta;
  return p;
}

double tol(const PolicyParams& p, double D) {
  if (!(D >= 0.0)) throw DomainError("TOL needs D >= 0");
  if (D == 0.0) return 0.0;
  if (p.tol_rule == TolRule::quadratic_maintext) return p.m * D * D;
  const double num = p.delta_bar() * p.k.lambda * p.k.C * D;
  return num / (4.0 * (p.k.L + p.W) * (1.0 + p.k.M / D));
}

double down(const PolicyParams&, double D) {
  if (!(D >= 0.0)) throw DomainError("DOWN needs D >= 0");
  return 0.5 * D;
}

double maintext_coefficient(const PolicyParams& p, double D) {
  if (!(D > 0.0)) throw DomainError("coefficient needs D > 0");
  return p.delta_bar() * p.k.lambda * p.k.C / (4.0 * (p.k.L + p.W) * (D + p.k.M));
}

double injection_up_probability(const PolicyParams& p, double D) {
  double dn = down(p, D), up = p.k.M * tol(p, D);
  return dn / (dn + up);
}

double target_drift(double Z, double lambda, double dt) {
  if (!(dt >= 0.0)) throw DomainError("drift step must be nonnegative");
  return 1.0 - (1.0 - Z) * std::exp(-lambda * dt);
}

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::puts: return "puts";
    case PolicyKind::no_information: return "no_information";
    case PolicyKind::conclusive_bad_news: return "conclusive_bad_news";
    case PolicyKind::delayed_jump: return "delayed_jump";
  }
  return "?";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "puts") return PolicyKind::puts;
  if (s == "no_information") return PolicyKind::no_information;
  if (s == "conclusive_bad_news") return PolicyKind::conclusive_bad_news;
  if (s == "delayed_jump") return PolicyKind::delayed_jump;
  throw ConfigError("unknown policy kind '" + s + "'");
}

Policy::Policy(std::shared_ptr<const DominanceModel> model, PolicyParams params)
    : model_(std::move(model)), params_(params) {
  if (!model_) throw DomainError("policy needs a dominance model");
  params_.validate();
}

PolicyDecision policy_step(const PolicyParams& params, const DominanceModel& model,
                           const PolicyState& s) {
  if (!(s.A >= 0.0 && s.A <= 1.0) || !(s.Z_prev >= 0.0 && s.Z_prev <= 1.0))
    throw DomainError("policy state out of range");
  double D = 0.0;
  switch (classify(params, model, s, &D)) {
    case Branch::face: return silence(s.mu_prev);
    case Branch::lower: return jump(params, model, s);
    case Branch::silent: return silence(s.mu_prev);
    case Branch::inject: break;
  }
  const double mt = params.k.M * tol(params, D), dn = down(params, D);
  auto d = injection_direction(model, s.mu_prev);
  PolicyDecision out;
  out.split.label = SplitLabel::injection;
  out.split.posteriors = {simplex_point(axpy(s.mu_prev, mt, d)),
                          simplex_point(axpy(s.mu_prev, -dn, d))};
  out.split.probs = {dn / (dn + mt), mt / (dn + mt)};
  out.z_update = ZUpdate::reset_to_A;
  return out;
}

std::unique_ptr<Policy> make_puts_policy(std::shared_ptr<const DominanceModel> model,
                                         PolicyParams params) {
  return std::make_unique<PutsPolicy>(std::move(model), params);
}

std::unique_ptr<Policy> make_alternative_policy(PolicyKind kind,
                                                std::shared_ptr<const DominanceModel> model,
                                                PolicyParams params, double t_delay) {
  switch (kind) {
    case PolicyKind::puts: return make_puts_policy(std::move(model), params);
    case PolicyKind::no_information:
      return std::make_unique<NoInformationPolicy>(std::move(model), params);
    case PolicyKind::conclusive_bad_news:
      return std::make_unique<ConclusiveBadNewsPolicy>(std::move(model), params);
    case PolicyKind::delayed_jump:
      return std::make_unique<DelayedJumpPolicy>(std::move(model), params, t_delay);
  }
  throw DomainError("unknown policy kind");
}

}  // namespace infoputs
