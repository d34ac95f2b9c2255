#include "infoputs/game.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace infoputs {

namespace {

constexpr int kValidationGrid = 101;

double max_abs_payoff(const GameSpec& g) {
  double m = 0.0;
  for (int i = 0; i < kValidationGrid; ++i) {
    double A = static_cast<double>(i) / (kValidationGrid - 1);
    for (std::size_t k = 0; k < g.size(); ++k) m = std::max(m, std::abs(g.delta_u(A, k)));
  }
  return m;
}

void check_fraction(double A, const char* name) {
  if (!(A >= 0.0 && A <= 1.0)) throw DomainError(std::string(name) + " must lie in [0,1]");
}

// ∫_0^Δ e^{-r s} A_s ds for a single flow starting at a.
double segment_discounted(Flow flow, double a, double r, double lambda, double delta) {
  double er = std::isinf(delta) ? 1.0 : -std::expm1(-r * delta);
  double erl = std::isinf(delta) ? 1.0 : -std::expm1(-(r + lambda) * delta);
  switch (flow) {
    case Flow::up: return er / r - (1.0 - a) * erl / (r + lambda);
    case Flow::down: return a * erl / (r + lambda);
    case Flow::hold: return a * er / r;
  }
  return 0.0;
}

}  // namespace

double GameSpec::flow_payoff(int action, double A, std::size_t k) const {
  return action == 1 ? delta_u(A, k) : 0.0;
}

void GameSpec::validate() const {
  if (states.size() < 2) throw DomainError("game needs at least two states");
  if (!(r > 0.0)) throw DomainError("discount_rate must be positive");
  if (!(lambda > 0.0)) throw DomainError("switch_rate must be positive");
  if (dominant >= states.size()) throw DomainError("dominant_state out of range");
  if (!delta_u) throw DomainError("payoff_diff missing");
  if (!(delta_u(0.0, dominant) > 0.0))
    throw DomainError("payoff_diff at A=0 must be positive in the dominant state");
  for (std::size_t k = 0; k < states.size(); ++k) {
    double prev = delta_u(0.0, k);
    for (int i = 1; i < kValidationGrid; ++i) {
      double cur = delta_u(static_cast<double>(i) / (kValidationGrid - 1), k);
      if (!(cur > prev)) throw DomainError("payoff_diff must be strictly increasing in A");
      prev = cur;
    }
  }
}

GameSpec affine_game(std::vector<double> states, double a, double b, double c, double r,
                     double lambda, std::size_t dominant) {
  GameSpec g;
  g.family = "affine";
  g.states = std::move(states);
  std::vector<double> th = g.states;
  g.delta_u = [a, b, c, th](double A, std::size_t k) { return a * A + b * th[k] + c; };
  g.r = r;
  g.lambda = lambda;
  g.dominant = dominant;
  g.validate();
  g.u_bound = max_abs_payoff(g);
  return g;
}

GameSpec tabulated_game(std::vector<double> states, std::vector<double> A_grid,
                        std::vector<std::vector<double>> table, double r, double lambda,
                        std::size_t dominant) {
  if (A_grid.size() < 2 || A_grid.front() > 0.0 || A_grid.back() < 1.0)
    throw DomainError("tabulated A-grid must cover [0,1]");
  for (std::size_t i = 1; i < A_grid.size(); ++i)
    if (!(A_grid[i] > A_grid[i - 1])) throw DomainError("tabulated A-grid must be increasing");
  if (table.size() != states.size()) throw DomainError("one payoff row per state required");
  for (const auto& row : table)
    if (row.size() != A_grid.size()) throw DomainError("payoff row length mismatch");
  GameSpec g;
  g.family = "tabulated";
  g.states = std::move(states);
  g.delta_u = [grid = std::move(A_grid), tab = std::move(table)](double A, std::size_t k) {
    auto it = std::upper_bound(grid.begin(), grid.end(), A);
    std::size_t i = it == grid.begin() ? 1 : static_cast<std::size_t>(it - grid.begin());
    if (i >= grid.size()) i = grid.size() - 1;
    double w = (A - grid[i - 1]) / (grid[i] - grid[i - 1]);
    return (1.0 - w) * tab[k][i - 1] + w * tab[k][i];
  };
  g.r = r;
  g.lambda = lambda;
  g.dominant = dominant;
  g.validate();
  g.u_bound = max_abs_payoff(g);
  return g;
}

GameSpec canonical_game() { return affine_game({0.0, 1.0}, 1.0, 2.0, -1.0, 1.0, 1.0, 1); }

double upper_play_path(double A0, double lambda, double t) {
  check_fraction(A0, "A0");
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  return 1.0 - (1.0 - A0) * std::exp(-lambda * t);
}

double lower_play_path(double A0, double lambda, double t) {
  check_fraction(A0, "A0");
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  return A0 * std::exp(-lambda * t);
}

double flow_path(Flow flow, double A0, double lambda, double t) {
  switch (flow) {
    case Flow::up: return upper_play_path(A0, lambda, t);
    case Flow::down: return lower_play_path(A0, lambda, t);
    case Flow::hold: return A0;
  }
  return A0;
}

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  double err = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12,
                                                                           &err);
  if (!std::isfinite(v) || err > abs_tol)
    throw NumericalError("quadrature did not converge", err);
  return v;
}

double discounted_integral(const std::function<double(double)>& f, double k, double bound) {
  if (bound <= 0.0) return 0.0;
  double T = std::max(1.0, std::log(bound / (k * 1e-12)) / k);
  auto g = [&](double s) { return std::exp(-k * s) * f(s); };
  // splitting at 1/k keeps the adaptive pass away from the flat tail
  double knee = std::min(T, 1.0 / k);
  return integrate(g, 0.0, knee) + integrate(g, knee, T);
}

double exp_horizon_value(const GameSpec& game, std::size_t k, double A, Flow flow) {
  check_fraction(A, "A");
  double lam = game.lambda;
  auto f = [&](double s) { return game.delta_u(flow_path(flow, A, lam, s), k); };
  return discounted_integral(f, lam + game.r, std::max(game.u_bound, 1e-300));
}

double discounted_delta_value(const GameSpec& game, const Belief& mu, double A) {
  double v = 0.0;
  for (std::size_t k = 0; k < game.size(); ++k)
    if (mu[k] != 0.0) v += mu[k] * exp_horizon_value(game, k, A, Flow::up);
  return v;
}

double discounted_down_value(const GameSpec& game, const Belief& mu, double A) {
  double v = 0.0;
  for (std::size_t k = 0; k < game.size(); ++k)
    if (mu[k] != 0.0) v += mu[k] * exp_horizon_value(game, k, A, Flow::down);
  return v;
}

APath::APath(double A0, double lambda) : lambda_(lambda), start_a_(A0), end_a_(A0) {
  check_fraction(A0, "A0");
  if (!(lambda > 0.0)) throw DomainError("switch_rate must be positive");
}

APath APath::from_spec(const PathSpec& spec, double lambda) {
  APath p(spec.A0, lambda);
  switch (spec.regime) {
    case PathSpec::Regime::all_up: p.set_tail(Flow::up); break;
    case PathSpec::Regime::all_down: p.set_tail(Flow::down); break;
    case PathSpec::Regime::piecewise: {
      if (spec.pieces.size() != spec.breakpoints.size() + 1)
        throw DomainError("piecewise path needs one more flow than breakpoints");
      double prev = 0.0;
      for (std::size_t i = 0; i < spec.breakpoints.size(); ++i) {
        if (!(spec.breakpoints[i] > prev)) throw DomainError("breakpoints must be increasing");
        p.extend(spec.breakpoints[i], spec.pieces[i]);
        prev = spec.breakpoints[i];
      }
      p.set_tail(spec.pieces.back());
      break;
    }
  }
  return p;
}

void APath::extend(double t_end, Flow flow) {
  if (t_end < end_t_) throw DomainError("path segments must be time-ordered");
  if (t_end == end_t_) return;
  segs_.push_back({end_t_, t_end, end_a_, flow});
  end_a_ = flow_path(flow, end_a_, lambda_, t_end - end_t_);
  end_t_ = t_end;
}

void APath::step_to(double A) {
  check_fraction(A, "A");
  end_a_ = A;
}

double APath::at(double t) const {
  if (t >= end_t_) return flow_path(tail_, end_a_, lambda_, t - end_t_);
  auto it = std::upper_bound(segs_.begin(), segs_.end(), t,
                             [](double x, const PathSegment& s) { return x < s.t0; });
  if (it == segs_.begin()) return start_a_;
  const PathSegment& s = *(it - 1);
  return flow_path(s.flow, s.a0, lambda_, t - s.t0);
}

PayoffFunctional PayoffFunctional::discounted_mean(double rate) {
  if (!(rate > 0.0)) throw ConfigError("discounted_mean rate must be positive");
  PayoffFunctional p;
  p.kind = Kind::discounted_mean;
  p.rate = rate;
  return p;
}

PayoffFunctional PayoffFunctional::terminal_level(double time) {
  if (!(time >= 0.0)) throw ConfigError("terminal_level time must be nonnegative");
  PayoffFunctional p;
  p.kind = Kind::terminal_level;
  p.time = time;
  return p;
}

PayoffFunctional PayoffFunctional::user_supplied(std::function<double(const APath&)> fn,
                                                 double bound) {
  if (!std::isfinite(bound)) throw ConfigError("user functional must declare a finite bound");
  PayoffFunctional p;
  p.kind = Kind::user_supplied;
  p.user = std::move(fn);
  p.bound = bound;
  return p;
}

double evaluate_functional(const PayoffFunctional& phi, const APath& path) {
  switch (phi.kind) {
    case PayoffFunctional::Kind::discounted_mean: {
      double r = phi.rate, lam = path.lambda();
      double v = 0.0;
      for (const auto& s : path.segments())
        v += std::exp(-r * s.t0) * segment_discounted(s.flow, s.a0, r, lam, s.t1 - s.t0);
      v += std::exp(-r * path.end_time()) *
           segment_discounted(path.tail(), path.end_value(), r, lam,
                              std::numeric_limits<double>::infinity());
      return v;
    }
    case PayoffFunctional::Kind::terminal_level: return path.at(phi.time);
    case PayoffFunctional::Kind::user_supplied: {
      if (!phi.user || !std::isfinite(phi.bound))
        throw ConfigError("user functional must declare a finite bound");
      double v = phi.user(path);
      if (!(std::abs(v) <= phi.bound)) throw ConfigError("user functional exceeded its bound");
      return v;
    }
  }
  return 0.0;
}

double functional_of_flow(const PayoffFunctional& phi, Flow flow, double A0, double lambda) {
  APath p(A0, lambda);
  p.set_tail(flow);
  return evaluate_functional(phi, p);
}

}  // namespace infoputs
