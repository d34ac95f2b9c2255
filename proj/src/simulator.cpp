#include "infoputs/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "infoputs/format.hpp"
#include "infoputs/parallel.hpp"

namespace infoputs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t sample_branch(const SignalSplit& split, std::mt19937_64& rng) {
  double u = uniform01(rng), acc = 0.0;
  for (std::size_t i = 0; i + 1 < split.probs.size(); ++i) {
    acc += split.probs[i];
    if (u < acc) return i;
  }
  return split.probs.size() - 1;
}

// Final state certified for the policy in force: the compliant tail applies.
bool tail_certified(const Policy& policy, const Belief& mu, double A, double epsilon) {
  const auto& m = policy.model();
  if (m.on_face(mu) || m.in_lower_region(mu, A)) return false;
  if (policy.kind() == PolicyKind::no_information) return m.in_upper_region(mu, A);
  return m.distance(mu, A) >= epsilon;
}

struct Sim {
  const Policy& policy;
  const AgentProfile& profile;
  const SimOptions& opt;
  Trajectory& traj;
  std::mt19937_64 rng;
  double t = 0.0, A = 0.0, Z = 0.0;
  Belief mu;
  bool latched = false;
  bool detached = false;

  // adversarial_until stops deviating for good once its predicate first holds
  Flow flow() {
    if (latched) return Flow::up;
    Flow f = profile.flow(SimState{t, mu, A, Z});
    if (profile.kind == AgentProfile::Kind::adversarial_until && f == Flow::up) latched = true;
    return f;
  }

  // Play no longer reads beliefs, so the A-path is independent of the policy.
  bool belief_free() const { return latched || profile.kind != AgentProfile::Kind::adversarial_until; }

  void record(EventKind k) {
    if (traj.events.size() >= opt.max_events) throw SimulationError("event budget exhausted");
    traj.events.push_back(TrajEvent{t, mu, A, Z, k});
  }

  // Apply every policy event due at the current instant.
  void fire_policy() {
    if (!detached && opt.detach_when_belief_free && belief_free()) detached = true;
    if (detached) return;
    for (int rep = 0;; ++rep) {
      PolicyDecision d = policy.step(PolicyState{t, mu, Z, A});
      if (d.split.label == SplitLabel::silence) return;
      if (rep > 64) throw SimulationError("policy keeps firing at a single instant");
      if (opt.freeze_beliefs) {
        if (d.split.label != SplitLabel::injection)
          throw DomainError("frozen beliefs cannot leave the lower dominance region");
      } else {
        mu = d.split.posteriors[sample_branch(d.split, rng)];
      }
      if (d.z_update == ZUpdate::reset_to_A) Z = A;
      if (d.split.label == SplitLabel::injection) {
        ++traj.injections;
        record(EventKind::injection);
        if (opt.freeze_beliefs) return;
      } else {
        ++traj.jumps;
        record(EventKind::jump);
      }
    }
  }

  void finish(double horizon) {
    record(EventKind::end);
    bool up = detached ? latched || profile.flow(SimState{t, mu, A, Z}) == Flow::up
                       : tail_certified(policy, mu, A, opt.epsilon);
    traj.path.set_tail(up ? Flow::up : Flow::down);
    traj.horizon = horizon;
  }
};

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(stream_seed(seed, stream));
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::start: return "start";
    case EventKind::silence_segment: return "silence";
    case EventKind::injection: return "injection";
    case EventKind::jump: return "jump";
    case EventKind::clock_tick: return "tick";
    case EventKind::end: return "end";
  }
  return "?";
}

void Trajectory::write_csv(const std::string& file) const {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file);
  out << "t,mu,A,Z,event\n";
  for (const auto& e : events) {
    // binary games report the dominant-state weight; larger games the full vector
    std::string m;
    if (e.mu.size() == 2) {
      m = num(e.mu[1]);
    } else {
      for (std::size_t k = 0; k < e.mu.size(); ++k) m += (k ? ";" : "") + num(e.mu[k]);
    }
    out << num(e.t) << ',' << m << ',' << num(e.A) << ',' << num(e.Z) << ',' << to_string(e.kind)
        << '\n';
  }
}

AgentProfile AgentProfile::compliant() { return AgentProfile{}; }

AgentProfile AgentProfile::adversarial_until(std::function<bool(const SimState&)> pred,
                                             std::string label) {
  AgentProfile p;
  p.kind = Kind::adversarial_until;
  p.until = std::move(pred);
  p.label = std::move(label);
  return p;
}

AgentProfile AgentProfile::scripted(std::vector<Window> windows) {
  for (const auto& w : windows) {
    if (!(w.t1 > w.t0 && w.t0 >= 0.0)) throw DomainError("scripted window must have t1 > t0 >= 0");
    if (w.flow == Flow::up) throw DomainError("scripted windows deviate downward or hold");
  }
  AgentProfile p;
  p.kind = Kind::scripted;
  p.windows = std::move(windows);
  p.label = "scripted";
  return p;
}

Flow AgentProfile::flow(const SimState& s) const {
  switch (kind) {
    case Kind::compliant: return Flow::up;
    case Kind::adversarial_until: return until(s) ? Flow::up : Flow::down;
    case Kind::scripted:
      for (const auto& w : windows)
        if (s.t >= w.t0 && s.t < w.t1) return w.flow;
      return Flow::up;
  }
  return Flow::up;
}

double AgentProfile::next_boundary(double t) const {
  double next = kInf;
  for (const auto& w : windows) {
    if (w.t0 > t) next = std::min(next, w.t0);
    if (w.t1 > t) next = std::min(next, w.t1);
  }
  return next;
}

AgentProfile until_upper_dominance(std::shared_ptr<const DominanceModel> model) {
  return AgentProfile::adversarial_until(
      [model](const SimState& s) { return model->in_upper_region(s.mu, s.A); }, "upper_dominance");
}

AgentProfile until_certified(std::shared_ptr<const DominanceModel> model, double epsilon) {
  return AgentProfile::adversarial_until(
      [model, epsilon](const SimState& s) {
        if (model->on_face(s.mu) || model->in_lower_region(s.mu, s.A)) return false;
        return model->distance(s.mu, s.A) >= epsilon;
      },
      "certified");
}

Trajectory simulate_continuum(const Policy& policy, const Belief& mu0, double A0,
                              const AgentProfile& profile, double horizon, std::uint64_t seed,
                              const SimOptions& opt) {
  if (!(horizon > 0.0 && std::isfinite(horizon))) throw DomainError("horizon must be finite and positive");
  if (!(A0 >= 0.0 && A0 <= 1.0)) throw DomainError("A0 must lie in [0,1]");
  const double lam = policy.model().game().lambda;
  Trajectory traj;
  traj.seed = seed;
  traj.path = APath(A0, lam);
  Sim sim{policy, profile, opt, traj, make_rng(seed, 0), 0.0, A0, A0, mu0};
  sim.record(EventKind::start);

  int stalls = 0;
  while (true) {
    sim.fire_policy();
    if (sim.t >= horizon) break;
    const double t0 = sim.t, a0 = sim.A, z0 = sim.Z;
    const Flow f = sim.flow();
    auto at = [&](double s, double* A, double* Z) {
      *A = flow_path(f, a0, lam, s - t0);
      *Z = target_drift(z0, lam, s - t0);
    };
    double cap = std::min(horizon, profile.next_boundary(t0));
    if (!sim.detached)
      cap = std::min(cap, policy.next_scheduled_time(PolicyState{t0, sim.mu, z0, a0}));
    double t_next = cap;
    const bool scripted = profile.kind == AgentProfile::Kind::scripted;
    // an up-flow that starts silent stays silent (Z - A shrinks, D grows); the face is absorbing
    const bool quiet = sim.detached || (!scripted && (f == Flow::up || policy.model().on_face(sim.mu)));
    if (!quiet) {
      auto fires = [&](double s) {
        double A, Z;
        at(s, &A, &Z);
        if (!policy.is_silent(PolicyState{s, sim.mu, Z, A})) return true;
        return !sim.latched && profile.flow(SimState{s, sim.mu, A, Z}) != f;
      };
      double prev = t0;
      for (double s = std::min(cap, t0 + opt.scan_step);; s = std::min(cap, s + opt.scan_step)) {
        if (fires(s)) {
          double lo = prev, hi = s;
          for (int it = 0; it < 80 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
            double mid = 0.5 * (lo + hi);
            (fires(mid) ? hi : lo) = mid;
          }
          t_next = hi;
          break;
        }
        prev = s;
        if (s >= cap) break;
      }
    }
    if (t_next - t0 <= 0.0) {
      if (++stalls > 64) throw SimulationError("time step underflow");
    } else {
      stalls = 0;
    }
    traj.path.extend(t_next, f);
    at(t_next, &sim.A, &sim.Z);
    sim.t = t_next;
    sim.record(EventKind::silence_segment);
  }
  sim.finish(horizon);
  return traj;
}

Trajectory simulate_finite(const Policy& policy, std::size_t N, const Belief& mu0, double A0,
                           const AgentProfile& profile, double horizon, std::uint64_t seed,
                           const SimOptions& opt) {
  if (N < 1) throw DomainError("N must be at least 1");
  if (!(horizon > 0.0 && std::isfinite(horizon))) throw DomainError("horizon must be finite and positive");
  const double scaled = A0 * static_cast<double>(N);
  long k = std::lround(scaled);
  if (std::abs(scaled - static_cast<double>(k)) > 1e-9) throw DomainError("N*A0 must be an integer");
  if (!profile.initial_actions.empty()) {
    if (profile.initial_actions.size() != N) throw DomainError("one initial action per agent");
    long s = std::accumulate(profile.initial_actions.begin(), profile.initial_actions.end(), 0L);
    if (s != k) throw DomainError("initial actions do not match A0");
  }
  const auto& model = policy.model();
  const auto& params = policy.params();
  const double lam = model.game().lambda, invN = 1.0 / static_cast<double>(N);
  Trajectory traj;
  traj.seed = seed;
  traj.N = N;
  traj.path = APath(A0, lam);
  Sim sim{policy, profile, opt, traj, make_rng(seed, 0), 0.0, k * invN, k * invN, mu0};
  sim.record(EventKind::start);

  // With A frozen the silent branch ends once |A - Z| reaches TOL(D); Z drifts up.
  auto policy_time = [&]() -> double {
    if (sim.detached) return kInf;
    const Belief& mu = sim.mu;
    double sched = policy.next_scheduled_time(PolicyState{sim.t, mu, sim.Z, sim.A});
    if (model.on_face(mu) || model.in_lower_region(mu, sim.A)) return sched;
    double T = tol(params, model.distance(mu, sim.A));
    if (!(sim.A + T < 1.0)) return sched;
    double s = std::log((1.0 - sim.Z) / (1.0 - sim.A - T)) / lam;
    double cand = sim.t + std::max(0.0, s);
    for (int i = 0; i < 8; ++i) {
      double Zc = target_drift(sim.Z, lam, cand - sim.t);
      if (!policy.is_silent(PolicyState{cand, mu, Zc, sim.A})) return std::min(sched, cand);
      cand = std::nextafter(cand, kInf) + 1e-15 * std::max(1.0, cand) * (1 << i);
    }
    return sched;  // a rule that never speaks here
  };

  std::exponential_distribution<double> unit(1.0);
  while (true) {
    sim.fire_policy();
    if (sim.t >= horizon) break;
    const Flow f = sim.flow();
    double rate = 0.0;
    if (f == Flow::up) rate = lam * static_cast<double>(static_cast<long>(N) - k);
    if (f == Flow::down) rate = lam * static_cast<double>(k);
    double t_tick = rate > 0.0 ? sim.t + unit(sim.rng) / rate : kInf;
    double t_other = std::min({horizon, policy_time(), profile.next_boundary(sim.t)});
    double t_next = std::min(t_tick, t_other);
    traj.path.extend(t_next, Flow::hold);
    sim.Z = target_drift(sim.Z, lam, t_next - sim.t);
    sim.t = t_next;
    if (t_tick <= t_other) {
      k += f == Flow::up ? 1 : -1;
      sim.A = static_cast<double>(k) * invN;
      traj.path.step_to(sim.A);
      if (opt.record_ticks) sim.record(EventKind::clock_tick);
    }
  }
  sim.finish(horizon);
  return traj;
}

double concentration_bound(std::size_t N, double delta) {
  if (N < 1 || !(delta > 0.0)) throw DomainError("bound needs N >= 1 and delta > 0");
  return std::min(1.0, 337.0 / std::pow(delta, 4) / static_cast<double>(N));
}

ConcentrationResult concentration_experiment(double lambda, double A0, std::size_t N, double delta,
                                             std::size_t trials, std::uint64_t seed) {
  if (trials < 100) throw DomainError("concentration needs at least 100 trials");
  if (!(lambda > 0.0)) throw DomainError("switch_rate must be positive");
  const double scaled = A0 * static_cast<double>(N);
  const long k0 = std::lround(scaled);
  if (std::abs(scaled - k0) > 1e-9) throw DomainError("N*A0 must be an integer");
  const std::size_t n0 = N - static_cast<std::size_t>(k0);
  std::vector<double> sups(trials, 0.0);
  // Ā^N_t - Ā_t = (n0/N)(F_n(t) - F(t)) for the n0 agents still at 0; F(τ) is uniform,
  // so the sup is a scaled Kolmogorov-Smirnov statistic of n0 uniforms.
  parallel_for(trials, [&](std::size_t tr) {
    if (n0 == 0) return;
    auto rng = make_rng(seed, tr);
    std::exponential_distribution<double> ex(lambda);
    std::vector<double> u(n0);
    for (double& x : u) x = 1.0 - std::exp(-lambda * ex(rng));
    std::sort(u.begin(), u.end());
    double ks = 0.0, n = static_cast<double>(n0);
    for (std::size_t i = 0; i < n0; ++i)
      ks = std::max({ks, (i + 1) / n - u[i], u[i] - i / n});
    sups[tr] = ks * n / static_cast<double>(N);
  });
  ConcentrationResult r;
  r.N = N;
  r.delta = delta;
  r.trials = trials;
  r.analytic_bound = concentration_bound(N, delta);
  std::size_t over = 0;
  for (double s : sups) over += s > delta;
  r.tail_probability = static_cast<double>(over) / static_cast<double>(trials);
  r.mean_sup = std::accumulate(sups.begin(), sups.end(), 0.0) / static_cast<double>(trials);
  std::sort(sups.begin(), sups.end());
  r.median_sup = trials % 2 ? sups[trials / 2] : 0.5 * (sups[trials / 2 - 1] + sups[trials / 2]);
  return r;
}

double adversarial_value_analytic(const Policy& policy, const Belief& mu0, double A0,
                                  const PayoffFunctional& phi, double epsilon) {
  const auto& m = policy.model();
  const double lam = m.game().lambda;
  const double up = functional_of_flow(phi, Flow::up, A0, lam);
  const double dn = functional_of_flow(phi, Flow::down, A0, lam);
  if (m.on_face(mu0)) return dn;
  const PolicyKind kind = policy.kind();
  if (!m.in_lower_region(mu0, A0)) {
    if (kind == PolicyKind::no_information) {
      if (m.in_upper_region(mu0, A0)) return up;
      throw DomainError("no certificate for this belief under the silent policy");
    }
    if (m.distance(mu0, A0) < epsilon) throw DomainError("belief within epsilon of the lower region");
    return up;
  }
  if (kind == PolicyKind::no_information) return dn;
  if (kind == PolicyKind::delayed_jump)
    throw DomainError("analytic value needs the jump at time 0; use Monte Carlo");
  double pstar = m.escape_probability(mu0, A0);
  double eta = std::min(policy.params().eta, 0.5 * pstar);
  SignalSplit s = m.escape_split(mu0, A0, eta);
  if (m.distance(s.posteriors[0], A0) < epsilon)
    throw DomainError("post-jump belief within epsilon of the lower region");
  return s.probs[0] * up + s.probs[1] * dn;
}

ValueEstimate adversarial_value_mc(const Policy& policy, const Belief& mu0, double A0,
                                   const PayoffFunctional& phi, std::size_t trials,
                                   std::uint64_t seed, double horizon, double epsilon) {
  if (trials < 2) throw DomainError("Monte Carlo needs at least two trials");
  AgentProfile prof = until_certified(policy.model_ptr(), epsilon);
  SimOptions opt;
  opt.epsilon = epsilon;
  std::vector<double> v(trials);
  parallel_for(trials, [&](std::size_t tr) {
    Trajectory tj = simulate_continuum(policy, mu0, A0, prof, horizon, stream_seed(seed, tr), opt);
    v[tr] = evaluate_functional(phi, tj.path);
  });
  ValueEstimate e;
  e.trials = trials;
  double n = static_cast<double>(trials);
  e.value = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - e.value) * (x - e.value);
  e.std_error = std::sqrt(ss / (n - 1) / n);
  return e;
}

const char* to_string(HistoryKind k) {
  switch (k) {
    case HistoryKind::on_path: return "on_path";
    case HistoryKind::triggering: return "triggering";
    case HistoryKind::inside_ld: return "inside_ld";
    case HistoryKind::absorbed: return "absorbed";
  }
  return "?";
}

AuditReport sequential_optimality_audit(const Policy& policy, const PayoffFunctional& phi,
                                        const AuditOptions& opt) {
  const auto& m = policy.model();
  if (!m.binary()) throw DomainError("history sampler is binary only");
  const auto& params = policy.params();
  const double lam = m.game().lambda;
  const bool silent_rule = policy.kind() == PolicyKind::no_information;

  auto phis = [&](double A) {
    return std::pair<double, double>{functional_of_flow(phi, Flow::up, A, lam),
                                     functional_of_flow(phi, Flow::down, A, lam)};
  };
  // best value any selection could reach from (μ, A)
  auto supremum = [&](const Belief& mu, double A) {
    auto [up, dn] = phis(A);
    if (m.on_face(mu)) return dn;
    if (!m.in_lower_region(mu, A)) return up;
    double p = m.escape_probability(mu, A);
    return p * up + (1 - p) * dn;
  };
  // worst-case continuation once the posterior is known
  auto continuation = [&](const Belief& mu, double A) {
    auto [up, dn] = phis(A);
    if (m.on_face(mu)) return dn;
    if (m.in_lower_region(mu, A)) {
      if (silent_rule) return dn;
      double p = m.escape_probability(mu, A), eta = std::min(params.eta, 0.5 * p);
      return (p - eta) * up + (1 - p + eta) * dn;
    }
    if (silent_rule && !m.in_upper_region(mu, A)) return dn;
    return up;
  };

  AuditReport rep;
  rep.min_gap = kInf;
  auto rng = make_rng(opt.seed, 0);
  std::size_t h = 0, attempts = 0;
  while (h < opt.histories) {
    if (++attempts > 100 * opt.histories + 1000) throw SimulationError("history sampler starved");
    HistoryKind kind = static_cast<HistoryKind>(h % 4);
    double A = uniform01(rng), psi = m.psi_ld(A), mu = 0.0, Z = A;
    switch (kind) {
      case HistoryKind::on_path:
      case HistoryKind::triggering: {
        mu = psi + (1 - psi) * uniform01(rng);
        Belief b = m.belief(mu);
        if (m.in_lower_region(b, A) || !(m.distance(b, A) > 0.0)) continue;
        if (kind == HistoryKind::triggering) {
          Z = A + tol(params, m.distance(b, A)) * (1 + uniform01(rng));
          if (Z > 1.0) continue;
        }
        break;
      }
      case HistoryKind::inside_ld:
        if (!(psi > 0.0)) continue;
        mu = psi * uniform01(rng);
        if (!(mu > 0.0)) continue;
        Z = uniform01(rng);
        break;
      case HistoryKind::absorbed:
        Z = uniform01(rng);
        break;
    }
    Belief b = m.belief(mu);
    PolicyDecision d;
    try {
      d = policy.step(PolicyState{0.0, b, Z, A});
    } catch (const DomainError&) {
      continue;  // up-move would leave the simplex
    }
    AuditEntry e{kind, mu, A, Z, d.split.label, supremum(b, A), 0.0, 0.0, opt.tolerance};
    const bool inside = !m.on_face(b) && m.in_lower_region(b, A);
    if (d.split.label == SplitLabel::injection) {
      // scored per realised branch
      e.value = kInf;
      for (const auto& post : d.split.posteriors) e.value = std::min(e.value, continuation(post, A));
    } else {
      for (std::size_t i = 0; i < d.split.posteriors.size(); ++i)
        e.value += d.split.probs[i] * continuation(d.split.posteriors[i], A);
    }
    e.gap = e.sup - e.value;
    if (inside) {
      auto [up, dn] = phis(A);
      e.bound = params.eta * (up - dn) + opt.tolerance;
      rep.max_gap_inside = std::max(rep.max_gap_inside, e.gap);
    } else {
      rep.max_gap_outside = std::max(rep.max_gap_outside, e.gap);
    }
    rep.min_gap = std::min(rep.min_gap, e.gap);
    if (e.gap > e.bound || e.gap < -1e-8) {
      if (rep.failures == 0 || e.gap > rep.worst.gap) rep.worst = e;
      ++rep.failures;
    } else if (rep.failures == 0 && (rep.entries.empty() || e.gap > rep.worst.gap)) {
      rep.worst = e;
    }
    rep.entries.push_back(e);
    ++h;
  }
  rep.passed = rep.failures == 0;
  return rep;
}

MultiplicityGap estimate_multiplicity_gap(const Policy& policy, std::size_t N, const Belief& mu0,
                                          double A0, const PayoffFunctional& phi,
                                          std::size_t trials, std::uint64_t seed, double horizon,
                                          double epsilon) {
  if (trials < 2) throw DomainError("Monte Carlo needs at least two trials");
  AgentProfile comp = AgentProfile::compliant();
  AgentProfile adv = until_certified(policy.model_ptr(), epsilon);
  SimOptions opt;
  opt.epsilon = epsilon;
  opt.record_ticks = false;
  opt.detach_when_belief_free = true;
  std::vector<double> vo(trials), va(trials);
  parallel_for(trials, [&](std::size_t tr) {
    std::uint64_t s = stream_seed(seed, tr);
    vo[tr] = evaluate_functional(phi, simulate_finite(policy, N, mu0, A0, comp, horizon, s, opt).path);
    va[tr] = evaluate_functional(phi, simulate_finite(policy, N, mu0, A0, adv, horizon, s, opt).path);
  });
  auto mean_se = [&](const std::vector<double>& v, double* se) {
    double n = static_cast<double>(v.size());
    double mu = std::accumulate(v.begin(), v.end(), 0.0) / n, ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    *se = std::sqrt(ss / (n - 1) / n);
    return mu;
  };
  MultiplicityGap g;
  g.N = N;
  g.trials = trials;
  g.opt = mean_se(vo, &g.se_opt);
  g.adv = mean_se(va, &g.se_adv);
  std::vector<double> d(trials);
  for (std::size_t i = 0; i < trials; ++i) d[i] = vo[i] - va[i];
  g.gap = mean_se(d, &g.se_gap);
  return g;
}

}  // namespace infoputs
