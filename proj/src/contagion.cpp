#include "infoputs/contagion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

#include <boost/math/quadrature/gauss.hpp>

#include "infoputs/format.hpp"
#include "infoputs/parallel.hpp"

namespace infoputs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class F>
double bisect_increasing(F f, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Up-move probability of the injection split at radius c for the given rule.
double up_probability(const DominanceModel& model, const PolicyParams& params, PolicyKind kind,
                      const Belief& mu, double c) {
  if (kind == PolicyKind::conclusive_bad_news) {
    double w = mu[model.dominant()];
    return w / (w + params.k.M * tol(params, c));
  }
  return injection_up_probability(params, c);
}

double interp_grid(const std::vector<double>& x, const std::vector<double>& y, double v) {
  if (v <= x.front()) return y.front();
  if (v >= x.back()) return y.back();
  auto it = std::upper_bound(x.begin(), x.end(), v);
  std::size_t j = static_cast<std::size_t>(it - x.begin());
  double w = (v - x[j - 1]) / (x[j] - x[j - 1]);
  return (1 - w) * y[j - 1] + w * y[j];
}

}  // namespace

double initial_radius(const DominanceModel& model) {
  double c0 = 0.0;
  if (model.binary()) {
    const auto& lo = model.psi_ld_table();
    const auto& hi = model.psi_ud_table();
    for (std::size_t i = 0; i < lo.size(); ++i) {
      double gap = hi[i] - lo[i];
      if (gap < -1e-12) throw DomainError("upper threshold below lower threshold");
      c0 = std::max(c0, gap);
    }
    return c0;
  }
  // edge slices toward each face vertex; both values are linear in the slice weight
  auto root = [](double at_vertex, double at_dom) {
    if (at_vertex >= 0.0) return 0.0;
    if (at_dom <= 0.0) return 1.0;
    return -at_vertex / (at_dom - at_vertex);
  };
  const std::size_t n = model.game().size(), dom = model.dominant();
  for (double A : model.grid()) {
    auto up = model.up_values(A), dn = model.down_values(A);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == dom) continue;
      double gap = root(dn[k], dn[dom]) - root(up[k], up[dom]);
      if (gap < -1e-12) throw DomainError("upper threshold below lower threshold");
      c0 = std::max(c0, gap);
    }
  }
  return c0;
}

double contagion_step(const PolicyParams& params, double c) {
  if (!(c >= 0.0)) throw DomainError("contagion radius must be nonnegative");
  if (c == 0.0) return 0.0;
  const double half_M = 0.5 * params.k.M;
  return bisect_increasing([&](double x) { return x + half_M * tol(params, x) - c; }, 0.0, c,
                           1e-12);
}

ContagionSequence contagion_sequence(const PolicyParams& params, double c0, double stop_tol,
                                     std::size_t max_iter) {
  if (!(c0 > 0.0)) throw DomainError("initial radius must be positive");
  ContagionSequence s;
  s.radii.push_back(c0);
  while (s.radii.back() >= stop_tol && s.iterations < max_iter) {
    double next = contagion_step(params, s.radii.back());
    if (!(next < s.radii.back())) throw DomainError("contagion radii stopped decreasing");
    s.radii.push_back(next);
    ++s.iterations;
  }
  s.converged = s.radii.back() < stop_tol;
  return s;
}

std::vector<std::vector<double>> contagion_functions(const DominanceModel& model,
                                                     const PolicyParams& params,
                                                     std::size_t rounds) {
  if (!model.binary()) throw DomainError("function-valued recursion is binary only");
  const auto& A = model.grid();
  const double half_M = 0.5 * params.k.M;
  std::vector<std::vector<double>> psi{model.psi_ud_table()};
  for (std::size_t n = 0; n < rounds; ++n) {
    const auto& prev = psi.back();
    std::vector<double> next(A.size());
    for (std::size_t j = 0; j < A.size(); ++j) {
      double lo = model.psi_ld(A[j]);
      auto f = [&](double mu) {
        double D = mu > lo ? model.distance(model.belief(mu), A[j]) : 0.0;
        return mu + half_M * tol(params, D) - prev[j];
      };
      next[j] = f(lo) >= 0.0 ? lo : bisect_increasing(f, lo, prev[j], 1e-13);
    }
    psi.push_back(std::move(next));
  }
  return psi;
}

double lb_margin(const DominanceModel& model, const PolicyParams& params, PolicyKind kind,
                 const Belief& mu, double A, double c_n) {
  if (model.in_lower_region(mu, A)) throw DomainError("margin needs a belief outside the lower region");
  if (!(c_n >= 0.0)) throw DomainError("round radius must be nonnegative");
  const double down_v = model.down_value(mu, A);
  if (kind == PolicyKind::no_information) return down_v;
  const double L = params.k.L, W = params.W, lam = params.k.lambda;
  const double p = c_n > 0.0 ? up_probability(model, params, kind, mu, c_n) : 1.0;
  double lb = model.delta_value(mu, A) - (tol(params, c_n) * L * (1 + p) + (L + W) * (1 - p)) / lam;
  if (down_v > 0.0) lb = std::max(lb, down_v);
  return lb;
}

const char* to_string(CellStatus s) {
  switch (s) {
    case CellStatus::certified_one: return "certified_one";
    case CellStatus::certified_zero: return "certified_zero";
    case CellStatus::undetermined: return "undetermined";
    case CellStatus::outside: return "outside";
  }
  return "?";
}

bool Certificate::covers(double mu, double A, const DominanceModel& model) const {
  if (!certified) return false;
  Belief b = model.belief(mu);
  return !model.in_lower_region(b, A) && model.distance(b, A) >= epsilon;
}

nlohmann::json Certificate::to_json() const {
  nlohmann::json j;
  j["grid"] = {{"n_mu", grid.n_mu}, {"n_A", grid.n_A}};
  j["epsilon"] = epsilon;
  j["policy"] = to_string(policy);
  j["certified"] = certified;
  j["min_margin"] = min_margin;
  j["min_step_margin"] = min_step_margin;
  j["cells_checked"] = cells_checked;
  j["failures"] = failures;
  j["worst_cell"] = {{"mu", worst_mu}, {"A", worst_A}};
  j["sequence"] = {{"c0", sequence.radii.front()},
                   {"last", sequence.radii.back()},
                   {"length", sequence.radii.size()},
                   {"converged", sequence.converged}};
  j["parameters"] = {{"eta", params.eta},
                     {"tol_rule", params.tol_rule == TolRule::exact_appendix ? "exact_appendix"
                                                                             : "quadratic_maintext"},
                     {"m", params.m},
                     {"W", params.W},
                     {"C", params.k.C},
                     {"delta_bar", params.delta_bar()},
                     {"L", params.k.L},
                     {"M", params.k.M},
                     {"lambda", params.k.lambda},
                     {"r", params.k.r}};
  nlohmann::json m = nlohmann::json::array();
  for (double v : margins) m.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
  j["margins"] = std::move(m);
  return j;
}

void Certificate::write_region_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "mu,A,margin\n";
  for (std::size_t i = 0; i < grid.n_mu; ++i)
    for (std::size_t j = 0; j < grid.n_A; ++j) {
      double v = margins[i * grid.n_A + j];
      out << num(grid.mu(i)) << ',' << num(grid.A(j)) << ',' << (std::isnan(v) ? "" : num(v))
          << '\n';
    }
}

Certificate certify_full_implementation(const DominanceModel& model, const PolicyParams& params,
                                        PolicyKind kind, const GridSpec& grid, double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (!model.binary()) throw DomainError("grid certification is binary only");
  params.validate();
  Certificate cert;
  cert.grid = grid;
  cert.epsilon = epsilon;
  cert.policy = kind;
  cert.params = params;
  const double c0 = initial_radius(model);
  cert.sequence = c0 > 0.0 ? contagion_sequence(params, c0, epsilon, 10'000'000)
                           : ContagionSequence{{0.0}, true, 0};
  const auto& c = cert.sequence.radii;

  // A cell at distance D in [c_n, c_{n-1}) joins at round n using the round n-1 radius.
  auto radius_for = [&](double D) {
    if (D >= c.front()) return c.front();
    auto it = std::upper_bound(c.rbegin(), c.rend(), D);  // first radius > D
    return it == c.rend() ? c.front() : *it;
  };

  cert.margins.assign(grid.n_mu * grid.n_A, kNaN);
  parallel_for(grid.n_mu, [&](std::size_t i) {
    Belief b = model.belief(grid.mu(i));
    for (std::size_t j = 0; j < grid.n_A; ++j) {
      double A = grid.A(j);
      if (model.in_lower_region(b, A)) continue;
      double D = model.distance(b, A);
      if (D < epsilon) continue;
      cert.margins[i * grid.n_A + j] = lb_margin(model, params, kind, b, A, radius_for(D));
    }
  });

  cert.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.n_mu; ++i)
    for (std::size_t j = 0; j < grid.n_A; ++j) {
      double v = cert.margins[i * grid.n_A + j];
      if (std::isnan(v)) continue;
      ++cert.cells_checked;
      if (!(v > 0.0)) ++cert.failures;
      if (v < cert.min_margin) {
        cert.min_margin = v;
        cert.worst_mu = grid.mu(i);
        cert.worst_A = grid.A(j);
      }
    }

  // Every recursion step: the margin at the new boundary ψ^{n+1} under the round-n radius
  // must clear C(1-δ̄)/2·c_n.
  cert.min_step_margin = std::numeric_limits<double>::infinity();
  if (kind != PolicyKind::no_information && c.size() > 1) {
    const auto& Agrid = model.grid();
    std::vector<double> worst(c.size() - 1, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> bad(c.size() - 1, 0);
    parallel_for(c.size() - 1, [&](std::size_t n) {
      double floor = params.k.C * (1.0 - params.delta_bar()) / 2.0 * c[n];
      for (double A : Agrid) {
        double mu = model.psi_ld(A) + c[n + 1];
        if (mu > 1.0) continue;
        double m = lb_margin(model, params, kind, model.belief(mu), A, c[n]);
        worst[n] = std::min(worst[n], m);
        if (!(m > 0.0) || m < floor - 1e-12) ++bad[n];
      }
    });
    for (std::size_t n = 0; n < worst.size(); ++n) {
      cert.min_step_margin = std::min(cert.min_step_margin, worst[n]);
      cert.failures += bad[n];
    }
  }
  if (cert.cells_checked == 0) cert.min_margin = 0.0;
  cert.certified = cert.failures == 0;
  return cert;
}

FiniteThreshold finite_threshold(const GameConstants& k, std::size_t N, double finite_delta_bar) {
  if (N < 1) throw DomainError("N must be at least 1");
  FiniteThreshold f;
  f.N = N;
  f.delta_bar = finite_delta_bar;
  f.e_hi = k.lambda * k.C / (4 * k.L);
  f.e_lo = k.lambda * k.C / (4 * k.L * (1 + k.M));
  f.c_aux = k.lambda * k.C / (2 * k.L);
  f.delta_bar_cap = k.C * k.r / (4 * (f.e_hi * k.L + f.c_aux));
  if (!(finite_delta_bar > 0.0 && finite_delta_bar < f.delta_bar_cap))
    throw DomainError("finite-mode delta_bar must lie in (0, Cr/(4(e_hi L + c_aux)))");
  const double db = finite_delta_bar;
  f.G_first = std::pow(k.M * db * f.e_lo / (2 * k.L_psi), 4.5);
  f.G_second = k.r * std::pow(f.e_lo * db, 4) / (2 * 337.0) *
               (k.C / 2 - 2 * db * (f.e_hi * k.L + f.c_aux) / k.r);
  f.G = std::min(f.G_first, f.G_second);
  if (!(f.G > 0.0)) throw DomainError("finite threshold constant G is not positive");
  f.offset = std::pow(f.G * static_cast<double>(N), -1.0 / 9.0);
  return f;
}

void RegionMap::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "mu,A,status\n";
  for (std::size_t i = 0; i < grid.n_mu; ++i)
    for (std::size_t j = 0; j < grid.n_A; ++j)
      out << num(grid.mu(i)) << ',' << num(grid.A(j)) << ',' << to_string(at(i, j)) << '\n';
}

namespace {

// Payoff difference for one agent at (μ, A) who assumes everyone else plays 0 until
// the policy speaks, and after that plays 1 exactly when the posterior lies above r.
class EliminationValue {
 public:
  EliminationValue(const DominanceModel& model, const Policy& policy, const DpOptions& opt,
                   const std::vector<double>& Agrid)
      : model_(model), policy_(policy), opt_(opt), Agrid_(Agrid) {
    const auto& g = model.game();
    k_ = g.lambda + g.r;
    lambda_ = g.lambda;
  }

  double operator()(double mu, double A, const std::vector<double>& r) const {
    Belief b = model_.belief(mu);
    double s = trigger_time(b, A);
    double As = A * std::exp(-lambda_ * s);
    double pre = pre_trigger(b, A, s);
    double disc = std::exp(-k_ * s);
    if (!(s < opt_.horizon)) return pre + disc * model_.down_value(b, As);
    PolicyDecision d = policy_.step(state(b, A, s));
    double cont = 0.0;
    for (std::size_t i = 0; i < d.split.posteriors.size(); ++i)
      cont += d.split.probs[i] * continuation(d.split.posteriors[i], As, r);
    return pre + disc * cont;
  }

 private:
  PolicyState state(const Belief& b, double A, double s) const {
    // others at 0 since time 0 with Z_0 = A: Z - A = 1 - e^{-λs}
    return PolicyState{s, b, 1.0 - (1.0 - A) * std::exp(-lambda_ * s), A * std::exp(-lambda_ * s)};
  }

  double trigger_time(const Belief& b, double A) const {
    auto silent = [&](double s) { return policy_.is_silent(state(b, A, s)); };
    if (!silent(0.0)) return 0.0;
    double prev = 0.0;
    for (double s = opt_.h; s <= opt_.horizon + 1e-12; s += opt_.h) {
      if (!silent(s)) {
        double lo = prev, hi = s;
        for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
          double mid = 0.5 * (lo + hi);
          (silent(mid) ? lo : hi) = mid;
        }
        return hi;
      }
      prev = s;
    }
    return opt_.horizon;
  }

  double pre_trigger(const Belief& b, double A, double s) const {
    if (s <= 0.0) return 0.0;
    const auto& g = model_.game();
    auto f = [&](double t) {
      double At = A * std::exp(-lambda_ * t), v = 0.0;
      for (std::size_t k = 0; k < b.size(); ++k)
        if (b[k] > 0.0) v += b[k] * g.delta_u(At, k);
      return std::exp(-k_ * t) * v;
    };
    double total = 0.0;
    int pieces = std::max(1, static_cast<int>(std::ceil(s)));
    for (int p = 0; p < pieces; ++p)
      total += boost::math::quadrature::gauss<double, 20>::integrate(f, s * p / pieces,
                                                                     s * (p + 1) / pieces);
    return total;
  }

  double continuation(const Belief& b, double A, const std::vector<double>& r) const {
    if (b[model_.dominant()] > interp_grid(Agrid_, r, A)) return model_.delta_value(b, A);
    return model_.down_value(b, A);
  }

  const DominanceModel& model_;
  const Policy& policy_;
  DpOptions opt_;
  const std::vector<double>& Agrid_;
  double k_ = 2.0, lambda_ = 1.0;
};

}  // namespace

RegionMap dp_oracle(const DominanceModel& model, const PolicyParams& params, PolicyKind kind,
                    const GridSpec& grid, const DpOptions& opt) {
  if (!model.binary()) throw DomainError("DP oracle is binary only");
  if (!(opt.h > 0.0 && opt.horizon > 0.0)) throw DomainError("DP step and horizon must be positive");
  if (grid.n_mu < 2 || grid.n_A < 2) throw DomainError("DP grids need at least two points");
  const auto& g = model.game();
  const double tail = params.k.Delta_bar * std::exp(-g.r * opt.horizon) / g.r;
  if (tail > opt.tail_tol) throw ConfigError("DP horizon too short: tail bound exceeds tolerance");

  std::shared_ptr<const DominanceModel> ref(&model, [](const DominanceModel*) {});
  std::unique_ptr<Policy> policy = kind == PolicyKind::puts
                                       ? make_puts_policy(ref, params)
                                       : make_alternative_policy(kind, ref, params);

  RegionMap map;
  map.grid = grid;
  map.tail_bound = tail;
  std::vector<double> Agrid(grid.n_A), lo(grid.n_A);
  for (std::size_t j = 0; j < grid.n_A; ++j) {
    Agrid[j] = grid.A(j);
    lo[j] = model.psi_ld(Agrid[j]);
  }
  std::vector<double> r(grid.n_A);
  for (std::size_t j = 0; j < grid.n_A; ++j) r[j] = model.psi_ud(Agrid[j]);

  // Once r sits below the first grid belief above ψ_LD in every column, no cell can change.
  auto settled = [&](const std::vector<double>& rr) {
    for (std::size_t j = 0; j < grid.n_A; ++j) {
      double first = std::ceil(lo[j] * (grid.n_mu - 1) + 1e-9) / (grid.n_mu - 1);
      if (first <= lo[j]) first += 1.0 / (grid.n_mu - 1);
      if (first <= 1.0 && rr[j] >= first) return false;
    }
    return true;
  };

  EliminationValue V(model, *policy, opt, Agrid);
  while (map.rounds < opt.max_rounds && !settled(r)) {
    std::vector<double> next(r);
    parallel_for(grid.n_A, [&](std::size_t j) {
      double A = Agrid[j];
      auto f = [&](double mu) { return V(mu, A, r); };
      double a = lo[j], b = r[j];
      if (!(b > a)) return;
      if (f(b) <= 0.0) return;
      double fa = a > 0.0 ? f(a) : -1.0;
      if (fa > 0.0) {
        next[j] = a;
        return;
      }
      while (b - a > 1e-10) {
        double mid = 0.5 * (a + b);
        (f(mid) > 0.0 ? b : a) = mid;
      }
      next[j] = std::min(r[j], b);
    });
    double move = 0.0;
    for (std::size_t j = 0; j < grid.n_A; ++j) move = std::max(move, r[j] - next[j]);
    r = std::move(next);
    ++map.rounds;
    if (move < opt.move_tol) break;
  }
  map.threshold = r;

  map.cells.assign(grid.n_mu * grid.n_A, CellStatus::undetermined);
  for (std::size_t i = 0; i < grid.n_mu; ++i)
    for (std::size_t j = 0; j < grid.n_A; ++j) {
      double mu = grid.mu(i), A = Agrid[j];
      Belief b = model.belief(mu);
      CellStatus& c = map.cells[i * grid.n_A + j];
      if (model.delta_value(b, A) < 0.0)
        c = CellStatus::certified_zero;
      else if (mu > r[j])
        c = CellStatus::certified_one;
    }
  return map;
}

}  // namespace infoputs
