#include "infoputs/applications.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "infoputs/contagion.hpp"
#include "infoputs/simulator.hpp"

namespace infoputs {

namespace {

// ∫_0^h of the flow started at a0.
double flow_area(Flow f, double a0, double lam, double h) {
  switch (f) {
    case Flow::up: return h - (1.0 - a0) * -std::expm1(-lam * h) / lam;
    case Flow::down: return a0 * -std::expm1(-lam * h) / lam;
    case Flow::hold: return a0 * h;
  }
  return 0.0;
}

// Segment boundaries of the path inside (0, s), then s.
std::vector<double> cut_points(const APath& path, double s) {
  std::vector<double> cuts;
  for (const auto& seg : path.segments())
    if (seg.t1 > 0.0 && seg.t1 < s) cuts.push_back(seg.t1);
  cuts.push_back(s);
  return cuts;
}

double piecewise_integral(const std::function<double(double)>& f, const APath& path, double s) {
  double v = 0.0, a = 0.0;
  for (double b : cut_points(path, s)) {
    if (b > a) v += integrate(f, a, b, 1e-9);
    a = b;
  }
  return v;
}

double path_area(const APath& path, double s) {
  const double lam = path.lambda();
  double v = 0.0;
  for (const auto& seg : path.segments()) {
    if (seg.t0 >= s) return v;
    v += flow_area(seg.flow, seg.a0, lam, std::min(seg.t1, s) - seg.t0);
  }
  if (s > path.end_time())
    v += flow_area(path.tail(), path.end_value(), lam, s - path.end_time());
  return v;
}

void check_state(const RegimeChangeSpec& spec, std::size_t k) {
  if (k >= spec.size()) throw DomainError("state index out of range");
}

}  // namespace

void RegimeChangeSpec::validate(std::size_t grid) const {
  if (states.size() < 2) throw DomainError("regime change needs at least two states");
  for (std::size_t k = 1; k < states.size(); ++k)
    if (!(states[k] > states[k - 1])) throw DomainError("states must be strictly increasing");
  if (!hazard) throw DomainError("hazard is not set");
  if (affine() && (slope.size() != size() || intercept.size() != size()))
    throw DomainError("one affine hazard row per state");
  if (!(cost > 0.0)) throw DomainError("attack cost must be positive");
  if (!(r > 0.0) || !(lambda > 0.0)) throw DomainError("discount_rate and switch_rate must be positive");
  if (grid < 2) throw DomainError("grid needs at least two points");
  for (std::size_t i = 0; i < grid; ++i) {
    double A = static_cast<double>(i) / static_cast<double>(grid - 1);
    for (std::size_t k = 0; k < size(); ++k) {
      double g = hazard(A, k);
      if (!(g >= 0.0)) throw DomainError("hazard must be nonnegative");
      if (k > 0 && !(g < hazard(A, k - 1))) throw DomainError("hazard must decrease in the state");
      if (i > 0) {
        double Ap = static_cast<double>(i - 1) / static_cast<double>(grid - 1);
        if (!(g < hazard(Ap, k))) throw DomainError("hazard must decrease in A");
      }
    }
  }
  if (!(hazard(0.0, size() - 1) < cost))
    throw DomainError("dominant state needs hazard(0, strongest state) < cost");
}

RegimeChangeSpec affine_regime(std::vector<double> states, std::vector<double> intercept,
                               std::vector<double> slope, double cost, double r, double lambda) {
  RegimeChangeSpec s;
  s.states = std::move(states);
  s.intercept = std::move(intercept);
  s.slope = std::move(slope);
  s.cost = cost;
  s.r = r;
  s.lambda = lambda;
  s.hazard = [a = s.intercept, b = s.slope](double A, std::size_t k) { return a[k] + b[k] * A; };
  s.validate();
  return s;
}

RegimeChangeSpec product_affine_regime(std::vector<double> states, double kappa, double beta,
                                       double cost, double r, double lambda) {
  std::vector<double> a, b;
  for (double th : states) {
    a.push_back(kappa - th);
    b.push_back(-(kappa - th) * beta);
  }
  return affine_regime(std::move(states), std::move(a), std::move(b), cost, r, lambda);
}

RegimeChangeSpec regime_r1() { return product_affine_regime({0.0, 1.0}, 1.5, 0.5, 0.6, 1.0, 1.0); }

double regime_hazard_integral(const RegimeChangeSpec& spec, std::size_t k, const APath& path,
                              double s) {
  check_state(spec, k);
  if (!(s >= 0.0)) throw DomainError("time must be nonnegative");
  if (s == 0.0) return 0.0;
  if (spec.affine()) return spec.intercept[k] * s + spec.slope[k] * path_area(path, s);
  return piecewise_integral([&](double v) { return spec.hazard(path.at(v), k); }, path, s);
}

double regime_failure_pdf(const RegimeChangeSpec& spec, std::size_t k, const APath& path, double s) {
  return spec.hazard(path.at(s), k) * std::exp(-regime_hazard_integral(spec, k, path, s));
}

double regime_delta_fixed(const RegimeChangeSpec& spec, std::size_t k, const APath& path,
                          double tau) {
  check_state(spec, k);
  if (!(tau >= 0.0)) throw DomainError("tau must be nonnegative");
  if (tau == 0.0) return 0.0;
  double fail = piecewise_integral(
      [&](double s) { return std::exp(-spec.r * s) * regime_failure_pdf(spec, k, path, s); }, path, tau);
  return spec.cost * -std::expm1(-spec.r * tau) / spec.r - fail;
}

double regime_delta_expected(const RegimeChangeSpec& spec, std::size_t k, const APath& path) {
  check_state(spec, k);
  const double rate = spec.r + spec.lambda;
  double gmax = 0.0;
  for (double A : {0.0, 1.0}) gmax = std::max(gmax, spec.hazard(A, k));
  double fail = discounted_integral([&](double s) { return regime_failure_pdf(spec, k, path, s); },
                                    rate, std::max(gmax, 1e-300));
  return spec.cost / rate - fail;
}

double regime_delta_value(const RegimeChangeSpec& spec, const Belief& mu, double A) {
  if (mu.size() != spec.size()) throw DomainError("belief and state space differ in size");
  APath path = APath::from_spec(PathSpec{A, PathSpec::Regime::all_up, {}, {}}, spec.lambda);
  double v = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k)
    if (mu[k] != 0.0) v += mu[k] * regime_delta_expected(spec, k, path);
  return v;
}

double regime_psi_ld(const RegimeChangeSpec& spec, double A) {
  if (spec.size() != 2) throw DomainError("scalar threshold requested for a multi-state game");
  APath path = APath::from_spec(PathSpec{A, PathSpec::Regime::all_up, {}, {}}, spec.lambda);
  double lo = regime_delta_expected(spec, 0, path), hi = regime_delta_expected(spec, 1, path);
  if (lo >= 0.0) return 0.0;
  if (hi <= 0.0) return 1.0;
  return -lo / (hi - lo);
}

RegimeLipschitz regime_lipschitz_check(const RegimeChangeSpec& spec, std::size_t pairs,
                                       std::uint64_t seed, std::size_t grid) {
  spec.validate();
  if (grid < 2) throw DomainError("grid needs at least two points");
  RegimeLipschitz out;
  const double h = 1.0 / static_cast<double>(grid - 1);
  for (std::size_t k = 0; k < spec.size(); ++k)
    for (std::size_t i = 0; i < grid; ++i) {
      double A = static_cast<double>(i) * h, g = spec.hazard(A, k);
      out.gamma_max = std::max(out.gamma_max, g);
      if (i > 0) out.L_gamma = std::max(out.L_gamma, std::abs(g - spec.hazard(A - h, k)) / h);
    }
  auto lstar = [&](double L) { return L * L / (spec.r * spec.r) + L / spec.r; };
  out.L_star = lstar(out.L_gamma);
  out.L_star_full = lstar(std::max(out.L_gamma, out.gamma_max));

  auto rng = make_rng(seed, 0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto random_flow = [&] { return static_cast<Flow>(std::uniform_int_distribution<int>(0, 2)(rng)); };
  auto build = [&](double A0, const std::vector<double>& bps, const std::vector<Flow>& flows) {
    return APath::from_spec(PathSpec{A0, PathSpec::Regime::piecewise, bps, flows}, spec.lambda);
  };
  for (std::size_t n = 0; n < pairs; ++n) {
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, spec.size() - 1)(rng);
    const double tau = 0.2 + 5.8 * U(rng);
    const double A0 = U(rng);
    std::vector<double> bps;
    for (int b = std::uniform_int_distribution<int>(0, 3)(rng); b > 0; --b) bps.push_back(tau * U(rng));
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    std::vector<Flow> flows;
    for (std::size_t i = 0; i <= bps.size(); ++i) flows.push_back(random_flow());

    // 0: shifted start (pointwise ordered), 1: moved switch times, 2: unrelated path
    const int kind = static_cast<int>(n % 3);
    double A1 = A0;
    std::vector<double> bps1 = bps;
    std::vector<Flow> flows1 = flows;
    if (kind == 0) A1 = std::clamp(A0 + 0.4 * (U(rng) - 0.5), 0.0, 1.0);
    if (kind == 1) {
      for (double& b : bps1) b = std::max(1e-3, b + 0.6 * (U(rng) - 0.5));
      std::sort(bps1.begin(), bps1.end());
      bps1.erase(std::unique(bps1.begin(), bps1.end()), bps1.end());
      flows1.resize(bps1.size() + 1, flows.back());
    }
    if (kind == 2) {
      A1 = U(rng);
      for (Flow& f : flows1) f = random_flow();
    }
    APath p = build(A0, bps, flows), q = build(A1, bps1, flows1);

    double sup = 0.0;
    const int samples = 2000;
    for (int i = 0; i <= samples; ++i) {
      double t = tau * i / samples;
      sup = std::max(sup, std::abs(p.at(t) - q.at(t)));
    }
    for (double b : bps) sup = std::max(sup, std::abs(p.at(b) - q.at(b)));
    for (double b : bps1) sup = std::max(sup, std::abs(p.at(b) - q.at(b)));
    ++out.pairs;
    const double dp = regime_delta_fixed(spec, k, p, tau), dq = regime_delta_fixed(spec, k, q, tau);
    if (sup > 1e-9) out.max_ratio = std::max(out.max_ratio, std::abs(dp - dq) / sup);
    if (kind == 0 && std::abs(A1 - A0) > 1e-6) {
      ++out.monotone_pairs;
      if (!((A1 > A0) ? dq > dp : dp > dq)) ++out.monotone_violations;
    }
  }
  return out;
}

StoppingSetup stopping_adapter(const StoppingSpec& spec, double A0,
                               std::optional<GameConstants> constants, double eta) {
  if (A0 != 0.0) throw DomainError("stopping games start from A0 = 0");
  spec.base.validate();
  const GameConstants k = constants ? *constants : game_constants(spec.base);
  StoppingSetup out;
  out.W = 0.0;
  if (spec.irreversible) out.W = spec.W >= 0.0 ? spec.W : k.Delta_bar / k.r;
  if (!std::isfinite(out.W)) throw DomainError("gap floor W must be finite");

  if (spec.irreversible) {
    // nobody else ever invests: A holds, and investing now beats waiting iff the flow gain is positive
    const GameSpec& g = spec.base;
    auto hold = [du = g.delta_u, rate = g.r + g.lambda](double A, std::size_t s) {
      return du(A, s) / rate;
    };
    out.model = std::make_shared<const DominanceModel>(g, hold);
  } else {
    out.model = std::make_shared<const DominanceModel>(spec.base);
  }
  const auto& m = *out.model;
  for (double A : m.grid()) {
    if (!(m.down_values(A)[m.dominant()] > 0.0))
      throw DomainError("upper dominance region is empty at some A");
  }
  out.params = make_params(k, eta);
  out.params.W = out.W;
  out.params.validate();
  out.initial_radius = initial_radius(m);
  return out;
}

PrivateInfoBound private_info_bound(const DominanceModel& model, const Belief& mu0, double A0,
                                    const PayoffFunctional& phi) {
  PrivateInfoBound out;
  out.p_star_A0 = model.escape_probability(mu0, A0);
  out.p_star_one = model.escape_probability(mu0, 1.0);
  if (!model.on_face(mu0) && !model.in_lower_region(mu0, A0)) return out;
  const double lam = model.game().lambda;
  const double spread =
      functional_of_flow(phi, Flow::up, A0, lam) - functional_of_flow(phi, Flow::down, A0, lam);
  out.bound = std::abs(out.p_star_one - out.p_star_A0) * spread;
  return out;
}

}  // namespace infoputs
