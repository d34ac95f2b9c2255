#include "infoputs/dominance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "infoputs/format.hpp"

namespace infoputs {

namespace {

constexpr double kRootTol = 1e-12;

std::vector<double> binary_direction(std::size_t dominant) {
  std::vector<double> d(2, -1.0);
  d[dominant] = 1.0;
  return d;
}

void check_direction(const std::vector<double>& d, std::size_t dominant) {
  if (dominant >= d.size() || std::abs(d[dominant] - 1.0) > 1e-12)
    throw DomainError("direction must have unit dominant component");
  double s = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    s += d[k];
    if (k != dominant && d[k] > 1e-15) throw DomainError("direction must be nonpositive off the dominant state");
  }
  if (std::abs(s) > 1e-12) throw DomainError("direction components must sum to 0");
}

// Σ_k μ(α)_k v_k with μ(α) = δ_θ* - (1-α) d.
double slice_value(const std::vector<double>& v, const std::vector<double>& d, std::size_t dom,
                   double alpha) {
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    double m = (k == dom ? 1.0 : 0.0) - (1.0 - alpha) * d[k];
    s += m * v[k];
  }
  return s;
}

double slice_root(const std::vector<double>& v, const std::vector<double>& d, std::size_t dom,
                  bool clamp_top) {
  if (slice_value(v, d, dom, 0.0) >= 0.0) return 0.0;
  if (!(slice_value(v, d, dom, 1.0) > 0.0)) {
    if (clamp_top) return 1.0;
    throw NumericalError("dominance root not bracketed; value not monotone along slice",
                         slice_value(v, d, dom, 1.0));
  }
  double lo = 0.0, hi = 1.0;
  while (hi - lo > kRootTol) {
    double mid = 0.5 * (lo + hi);
    if (slice_value(v, d, dom, mid) > 0.0) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> exact_values(const GameSpec& g, double A, Flow flow) {
  std::vector<double> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = exp_horizon_value(g, k, A, flow);
  return v;
}

}  // namespace

double lower_dominance_threshold(const GameSpec& game, double A, const std::vector<double>& d) {
  check_direction(d, game.dominant);
  return slice_root(exact_values(game, A, Flow::up), d, game.dominant, false);
}

double lower_dominance_threshold(const GameSpec& game, double A) {
  if (game.size() != 2) throw DomainError("binary threshold requested for a multi-state game");
  return lower_dominance_threshold(game, A, binary_direction(game.dominant));
}

double upper_dominance_threshold(const GameSpec& game, double A, const std::vector<double>& d) {
  check_direction(d, game.dominant);
  return slice_root(exact_values(game, A, Flow::down), d, game.dominant, true);
}

double upper_dominance_threshold(const GameSpec& game, double A) {
  if (game.size() != 2) throw DomainError("binary threshold requested for a multi-state game");
  return upper_dominance_threshold(game, A, binary_direction(game.dominant));
}

std::vector<double> belief_direction(const Belief& mu, std::size_t dominant) {
  double top = mu[dominant];
  if (!(top < 1.0)) throw DomainError("direction undefined at the dominant point mass");
  std::vector<double> d(mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k)
    d[k] = ((k == dominant ? 1.0 : 0.0) - mu[k]) / (1.0 - top);
  d[dominant] = 1.0;
  return d;
}

GameConstants game_constants(const GameSpec& game, std::size_t grid, double safety) {
  if (grid < 64) throw DomainError("constants grid needs at least 64 points");
  game.validate();
  const std::size_t n = game.size(), dom = game.dominant;
  std::vector<std::vector<double>> g(n, std::vector<double>(grid));
  const double h = 1.0 / static_cast<double>(grid - 1);
  for (std::size_t i = 0; i < grid; ++i) {
    double A = static_cast<double>(i) * h;
    for (std::size_t k = 0; k < n; ++k) g[k][i] = exp_horizon_value(game, k, A, Flow::up);
  }
  GameConstants c;
  c.lambda = game.lambda;
  c.r = game.r;
  c.l = std::numeric_limits<double>::infinity();
  double gmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (i + 1 < grid) {
        double slope = (g[k][i + 1] - g[k][i]) / h;
        if (!(slope > 0.0)) throw DomainError("exponential-horizon value not increasing in A");
        c.L = std::max(c.L, slope);
      }
      if (k != dom) c.l = std::min(c.l, g[dom][i] - g[k][i]);
      c.Delta_bar = std::max(c.Delta_bar, std::abs(game.delta_u(static_cast<double>(i) * h, k)));
    }
    gmin = std::min(gmin, g[dom][i]);
  }
  if (!(c.l > 0.0)) throw DomainError("value not increasing toward the dominant state");
  if (!(gmin > 0.0)) throw DomainError("dominant-state value must be positive");
  c.L_psi = c.L / c.l;
  c.M = 2.0 * c.L_psi;
  c.C = safety * gmin;
  return with_overrides(c, -1.0, -1.0);
}

GameConstants with_overrides(GameConstants k, double C, double delta_bar) {
  if (C > 0.0) k.C = C;
  const double lc = k.lambda * k.C;
  k.c_aux = lc / (2.0 * k.L);
  k.e_hi = lc / (4.0 * k.L);
  k.e_lo = lc / (4.0 * k.L * (1.0 + k.M));
  k.delta_bar = delta_bar > 0.0
                    ? delta_bar
                    : std::min({1.0, 4.0 * k.L / lc, 4.0 * k.L / (lc * k.M)});
  return k;
}

DominanceModel::DominanceModel(GameSpec game, std::size_t threshold_grid, std::size_t dense_grid)
    : game_(std::move(game)) {
  build(threshold_grid, dense_grid);
}

DominanceModel::DominanceModel(GameSpec game, StateValueFn down_value,
                               std::size_t threshold_grid, std::size_t dense_grid)
    : game_(std::move(game)), down_override_(std::move(down_value)) {
  build(threshold_grid, dense_grid);
}

void DominanceModel::build(std::size_t threshold_grid, std::size_t dense_grid) {
  game_.validate();
  if (threshold_grid < 2 || dense_grid < 2) throw DomainError("grids need at least two points");
  const std::size_t n = game_.size();
  dense_n_ = dense_grid;
  up_tab_.assign(n, std::vector<double>(dense_grid));
  down_tab_.assign(n, std::vector<double>(dense_grid));
  for (std::size_t i = 0; i < dense_grid; ++i) {
    double A = static_cast<double>(i) / static_cast<double>(dense_grid - 1);
    for (std::size_t k = 0; k < n; ++k) {
      up_tab_[k][i] = exp_horizon_value(game_, k, A, Flow::up);
      down_tab_[k][i] =
          down_override_ ? down_override_(A, k) : exp_horizon_value(game_, k, A, Flow::down);
    }
  }
  grid_.resize(threshold_grid);
  for (std::size_t i = 0; i < threshold_grid; ++i)
    grid_[i] = static_cast<double>(i) / static_cast<double>(threshold_grid - 1);
  if (!binary()) return;
  const auto d = binary_direction(dominant());
  psi_ld_tab_.resize(threshold_grid);
  psi_ud_tab_.resize(threshold_grid);
  for (std::size_t i = 0; i < threshold_grid; ++i) {
    double A = grid_[i];
    psi_ld_tab_[i] = slice_root(exact_values(game_, A, Flow::up), d, dominant(), false);
    std::vector<double> dv(2);
    for (std::size_t k = 0; k < 2; ++k)
      dv[k] = down_override_ ? down_override_(A, k) : exp_horizon_value(game_, k, A, Flow::down);
    psi_ud_tab_[i] = slice_root(dv, d, dominant(), true);
  }
}

double DominanceModel::interp(const std::vector<double>& tab, double A) const {
  if (!(A >= 0.0 && A <= 1.0)) throw DomainError("A must lie in [0,1]");
  double x = A * static_cast<double>(dense_n_ - 1);
  std::size_t i = std::min(static_cast<std::size_t>(x), dense_n_ - 2);
  double w = x - static_cast<double>(i);
  return (1.0 - w) * tab[i] + w * tab[i + 1];
}

std::vector<double> DominanceModel::up_values(double A) const {
  std::vector<double> v(game_.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = interp(up_tab_[k], A);
  return v;
}

std::vector<double> DominanceModel::down_values(double A) const {
  std::vector<double> v(game_.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = interp(down_tab_[k], A);
  return v;
}

double DominanceModel::delta_value(const Belief& mu, double A) const {
  return dot(up_values(A), mu.weights());
}

double DominanceModel::down_value(const Belief& mu, double A) const {
  return dot(down_values(A), mu.weights());
}

double DominanceModel::psi_ld(double A) const {
  if (!binary()) throw DomainError("scalar threshold requested for a multi-state game");
  auto g = up_values(A);
  double gs = g[dominant()], go = g[1 - dominant()];
  if (go >= 0.0) return 0.0;
  return -go / (gs - go);
}

double DominanceModel::psi_ud(double A) const {
  if (!binary()) throw DomainError("scalar threshold requested for a multi-state game");
  auto h = down_values(A);
  double hs = h[dominant()], ho = h[1 - dominant()];
  if (ho >= 0.0) return 0.0;
  if (hs <= 0.0) return 1.0;
  return std::min(1.0, -ho / (hs - ho));
}

bool DominanceModel::in_lower_region(const Belief& mu, double A) const {
  return delta_value(mu, A) <= 0.0;
}

double DominanceModel::distance(const Belief& mu, double A) const {
  if (on_face(mu) || in_lower_region(mu, A))
    throw DomainError("distance undefined inside the lower dominance region");
  const std::size_t dom = dominant();
  if (binary()) return mu[dom] - psi_ld(A);
  auto g = up_values(A);
  double gm = dot(g, mu.weights());
  auto ray = [&](const std::vector<double>& d) {
    double gd = dot(g, d);
    return gd > 0.0 ? std::min(mu[dom], gm / gd) : mu[dom];
  };
  if (mu[dom] < 1.0) return ray(belief_direction(mu, dom));
  double best = 1.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (k == dom) continue;
    std::vector<double> d(mu.size(), 0.0);
    d[dom] = 1.0;
    d[k] = -1.0;
    best = std::min(best, ray(d));
  }
  return best;
}

std::vector<double> DominanceModel::escape_mass(const Belief& mu, double A,
                                                std::vector<std::size_t>* neg_order) const {
  auto g = up_values(A);
  const std::size_t n = mu.size();
  std::vector<double> nu(n, 0.0);
  double budget = 0.0;
  std::vector<std::size_t> neg;
  for (std::size_t k = 0; k < n; ++k) {
    if (g[k] >= 0.0) {
      nu[k] = mu[k];
      budget += mu[k] * g[k];
    } else {
      neg.push_back(k);
    }
  }
  // cheapest budget use first: smallest |g| buys the most mass
  std::stable_sort(neg.begin(), neg.end(), [&](std::size_t a, std::size_t b) { return -g[a] < -g[b]; });
  std::vector<std::size_t> used;
  for (std::size_t k : neg) {
    if (budget <= 0.0 || mu[k] <= 0.0) continue;
    double take = std::min(mu[k], budget / -g[k]);
    nu[k] = take;
    budget -= take * -g[k];
    used.push_back(k);
  }
  if (neg_order) *neg_order = std::move(used);
  return nu;
}

double DominanceModel::escape_probability(const Belief& mu, double A) const {
  if (on_face(mu)) return 0.0;
  if (!in_lower_region(mu, A) || delta_value(mu, A) == 0.0) return 1.0;
  auto nu = escape_mass(mu, A, nullptr);
  return std::min(1.0, std::accumulate(nu.begin(), nu.end(), 0.0));
}

SignalSplit DominanceModel::escape_split(const Belief& mu, double A, double eta) const {
  if (on_face(mu) || !in_lower_region(mu, A))
    throw DomainError("escape split requires a belief inside the lower dominance region");
  std::vector<std::size_t> order;
  auto nu = escape_mass(mu, A, &order);
  double pstar = std::min(1.0, std::accumulate(nu.begin(), nu.end(), 0.0));
  if (!(eta > 0.0) || !(eta < pstar)) throw DomainError("escape margin eta must lie in (0, p*)");
  double excess = eta;
  for (auto it = order.rbegin(); it != order.rend() && excess > 0.0; ++it) {
    double cut = std::min(nu[*it], excess);
    nu[*it] -= cut;
    excess -= cut;
  }
  if (excess > 0.0) {
    double s = std::accumulate(nu.begin(), nu.end(), 0.0);
    for (double& x : nu) x *= (s - excess) / s;
  }
  const double p_up = pstar - eta, p_dn = 1.0 - p_up;
  std::vector<double> up(nu.size()), dn(nu.size());
  for (std::size_t k = 0; k < nu.size(); ++k) {
    up[k] = nu[k] / p_up;
    dn[k] = (mu[k] - nu[k]) / p_dn;
  }
  // renormalise rounding residue so the atoms stay on the simplex
  double su = std::accumulate(up.begin(), up.end(), 0.0);
  double sd = std::accumulate(dn.begin(), dn.end(), 0.0);
  for (double& x : up) x /= su;
  for (double& x : dn) x = std::max(0.0, x) / sd;
  SignalSplit s;
  s.label = SplitLabel::jump;
  s.posteriors = {Belief(up), Belief(dn)};
  s.probs = {p_up, p_dn};
  return s;
}

void DominanceModel::write_csv(const std::string& path) const {
  if (!binary()) throw DomainError("threshold table export is binary-only");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "A,psi_ld,psi_ud\n";
  for (std::size_t i = 0; i < grid_.size(); ++i)
    out << num(grid_[i]) << ',' << num(psi_ld_tab_[i]) << ',' << num(psi_ud_tab_[i]) << '\n';
}

DirectionalSlice make_slice(const DominanceModel& model, const std::vector<double>& d) {
  DirectionalSlice s;
  s.direction = d;
  s.A = model.grid();
  s.alpha_bar.reserve(s.A.size());
  for (double A : s.A) s.alpha_bar.push_back(lower_dominance_threshold(model.game(), A, d));
  return s;
}

}  // namespace infoputs
