// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "infoputs/applications.hpp"
#include "infoputs/contagion.hpp"
#include "infoputs/simulator.hpp"
#include "oracles.hpp"

using namespace infoputs;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream note;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      note << " [failed: " << what << "]";
    }
  }
};

std::shared_ptr<const DominanceModel> g1() {
  static auto m = std::make_shared<const DominanceModel>(canonical_game());
  return m;
}

GameConstants exact_constants() { return game_constants(canonical_game()); }
GameConstants hand_constants() { return with_overrides(exact_constants(), 2.0 / 3, -1.0); }

const PayoffFunctional kMean = PayoffFunctional::discounted_mean(1.0);

bool within(double x, double target, double tol) { return std::abs(x - target) <= tol; }

void criterion1(Outcome& o) {
  const GameSpec g = canonical_game();
  double worst_ld = 0.0, worst_ud = 0.0;
  for (int i = 0; i < 200; ++i) {
    double A = i / 199.0;
    worst_ld = std::max(worst_ld, std::abs(lower_dominance_threshold(g, A) - oracle::g1_psi_ld(A)));
    worst_ud = std::max(worst_ud, std::abs(upper_dominance_threshold(g, A) - oracle::g1_psi_ud(A)));
  }
  double c0 = initial_radius(*g1());
  o.note << "max|psi_ld err|=" << worst_ld << " max|psi_ud err|=" << worst_ud << " c0=" << c0;
  o.check(worst_ld <= 1e-8, "psi_ld");
  o.check(worst_ud <= 1e-8, "psi_ud");
  o.check(within(c0, 1.0 / 6, 1e-8), "c0");
}

void criterion2(Outcome& o) {
  GameConstants k = exact_constants();
  o.note << "L=" << k.L << " l=" << k.l << " L_psi=" << k.L_psi << " M=" << k.M;
  o.check(within(k.L, 1.0 / 3, 1e-6), "L");
  o.check(within(k.l, 1.0, 1e-6), "l");
  o.check(within(k.L_psi, 1.0 / 3, 1e-6), "L_psi");
  o.check(within(k.M, 2.0 / 3, 1e-6), "M");
}

void criterion3(Outcome& o) {
  PolicyParams p = make_params(hand_constants());
  const double D = 1.0 / 6;
  PolicyState s{0.0, g1()->belief(0.5), 1.0 / 60, 0.0};
  PolicyDecision d = policy_step(p, *g1(), s);
  o.note << "TOL=" << tol(p, D) << " DOWN=" << down(p, D);
  o.check(within(tol(p, D), 1.0 / 60, 1e-12), "TOL");
  o.check(within(down(p, D), 1.0 / 12, 1e-12), "DOWN");
  if (d.split.label != SplitLabel::injection || d.split.posteriors.size() != 2) {
    o.check(false, "injection branch");
    return;
  }
  double res = d.split.martingale_residual(g1()->belief(0.5));
  o.note << " p=" << d.split.probs[0] << "/" << d.split.probs[1] << " post=" << d.split.posteriors[0][1]
         << "/" << d.split.posteriors[1][1] << " residual=" << res;
  o.check(within(d.split.probs[0], 15.0 / 17, 1e-9), "p_up");
  o.check(within(d.split.probs[1], 2.0 / 17, 1e-9), "p_down");
  o.check(within(d.split.posteriors[0][1], 0.5111111, 5e-8), "upper posterior");
  o.check(within(d.split.posteriors[1][1], 0.4166667, 5e-8), "lower posterior");
  o.check(res <= 1e-12, "martingale residual");
}

void criterion4(Outcome& o) {
  const auto& m = *g1();
  PolicyParams p = make_params(exact_constants());
  Certificate full = certify_full_implementation(m, p, PolicyKind::puts, GridSpec{}, 1e-3);
  o.note << "certified=" << full.certified << " min_margin=" << full.min_margin;
  o.check(full.certified && full.min_margin > 0.0, "certificate");

  GridSpec grid{60, 60};
  DpOptions dpo;  // h = 0.02, T = 12
  RegionMap dp = dp_oracle(m, p, PolicyKind::puts, grid, dpo);
  Certificate cert = certify_full_implementation(m, p, PolicyKind::puts, grid, 1e-3);
  // A cell counts as overlapping when the certificate covers it and the whole
  // cell sits more than ε above the lower threshold.
  const double cell = 1.0 / 59;
  int overlap = 0, disagree = 0;
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t j = 0; j < 60; ++j) {
      double mu = grid.mu(i), A = grid.A(j);
      if (std::isnan(cert.margins[i * 60 + j]) || mu - cell <= oracle::g1_psi_ld(A) + 1e-3) continue;
      ++overlap;
      disagree += dp.at(i, j) != CellStatus::certified_one;
    }
  o.note << " dp overlap=" << overlap << " disagreements=" << disagree;
  o.check(cert.certified && overlap > 0 && disagree == 0, "dp agreement");

  RegionMap none = dp_oracle(m, p, PolicyKind::no_information, grid, dpo);
  int middle = 0, resolved = 0;
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t j = 0; j < 60; ++j) {
      double mu = grid.mu(i), A = grid.A(j);
      if (mu <= oracle::g1_psi_ld(A) + 1e-9 || mu >= oracle::g1_psi_ud(A) - 1e-9) continue;
      ++middle;
      resolved += none.at(i, j) != CellStatus::undetermined;
    }
  o.note << " no_information middle cells=" << middle << " resolved=" << resolved;
  o.check(middle > 0 && resolved == 0, "no_information undetermined");
}

void criterion5(Outcome& o) {
  PolicyParams p = make_params(hand_constants());
  // bisection oracle for x + (M/2)·TOL(x) = 1/6 with TOL(x) = 3x²/(6x+4)
  double c1_oracle = oracle::bisect(
      [](double x) { return x + (1.0 / 3) * oracle::g1_tol(x) - 1.0 / 6; }, 0.0, 1.0 / 6);
  ContagionSequence s = contagion_sequence(p, 1.0 / 6, 1e-3, 1'000'000);
  bool decreasing = true;
  for (std::size_t n = 1; n < s.radii.size(); ++n) decreasing &= s.radii[n] < s.radii[n - 1];
  std::size_t n1 = s.radii.size() / 4, n2 = s.radii.size() - 1;
  double slope = std::log(s.radii[n2] / s.radii[n1]) / std::log(double(n2) / double(n1));
  o.note << "c1=" << s.radii[1] << " oracle=" << c1_oracle << " rounds=" << n2
         << " c_last=" << s.radii.back() << " tail slope=" << slope;
  o.check(decreasing, "strictly decreasing");
  o.check(within(s.radii[1], 0.16142, 1e-4) && within(s.radii[1], c1_oracle, 1e-10), "c1");
  o.check(s.converged && s.radii.back() < 1e-3, "converged");
  o.check(slope >= -1.2 && slope <= -0.8, "tail slope");
}

void criterion6(Outcome& o) {
  auto pol = make_puts_policy(g1(), make_params(exact_constants(), 0.01));
  ValueEstimate mc = adversarial_value_mc(*pol, g1()->belief(0.1), 0.0, kMean, 100000, 2024);
  double a = adversarial_value_analytic(*pol, g1()->belief(0.1), 0.0, kMean, 1e-3);
  o.note << "mc=" << mc.value << " se=" << mc.std_error << " analytic=" << a;
  o.check(std::abs(mc.value - 0.145) <= 3 * mc.std_error, "Monte Carlo");
  o.check(within(a, 0.145, 1e-12), "analytic");
  double prev = 0.0;
  bool rising = true;
  for (double eta : {1e-2, 1e-3, 1e-4}) {
    auto p = make_puts_policy(g1(), make_params(exact_constants(), eta));
    double v = adversarial_value_analytic(*p, g1()->belief(0.1), 0.0, kMean, 1e-6);
    o.note << " eta=" << eta << ":" << v;
    rising &= v > prev;
    prev = v;
  }
  o.check(rising && within(prev, 0.15, 1e-4), "eta limit");
}

void criterion7(Outcome& o) {
  auto pol = make_puts_policy(g1(), make_params(exact_constants(), 0.01));
  AuditOptions opt;
  opt.histories = 1000;
  AuditReport r = sequential_optimality_audit(*pol, kMean, opt);
  o.note << "histories=" << r.entries.size() << " max gap outside=" << r.max_gap_outside
         << " inside=" << r.max_gap_inside;
  o.check(r.entries.size() >= 1000, "history count");
  o.check(r.max_gap_outside <= 1e-6, "gap outside");
  o.check(r.max_gap_inside <= 0.01 * 0.5 + 1e-6, "gap inside");
  auto cbn = make_alternative_policy(PolicyKind::conclusive_bad_news, g1(), make_params(exact_constants()));
  AuditReport c = sequential_optimality_audit(*cbn, kMean, opt);
  o.note << " conclusive_bad_news passed=" << c.passed << " max gap=" << c.max_gap_outside;
  o.check(!c.passed && c.max_gap_outside >= 0.4, "conclusive_bad_news fails");
}

void criterion8(Outcome& o) {
  std::vector<double> med;
  for (std::size_t N : {1000ul, 10000ul, 100000ul}) {
    ConcentrationResult r = concentration_experiment(1.0, 0.0, N, 0.5, 1000, 77);
    med.push_back(r.median_sup);
    if (N == 100000) {
      o.note << "tail=" << r.tail_probability << " bound=" << r.analytic_bound;
      o.check(r.tail_probability <= r.analytic_bound, "tail probability");
      o.check(within(r.analytic_bound, 0.05392, 1e-5), "analytic bound");
    }
  }
  // least-squares slope through the three points
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < 3; ++i) {
    double x = std::log(1000.0 * std::pow(10.0, i)), y = std::log(med[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
  o.note << " median slope=" << slope;
  o.check(slope >= -0.6 && slope <= -0.4, "slope");
}

void criterion9(Outcome& o) {
  // G under the hand-checked constants (C = 2/3), as for the policy arithmetic
  FiniteThreshold f = finite_threshold(hand_constants(), 1000, 0.1);
  o.note << "G=" << f.G << " offset(N=1e3)=" << f.offset;
  o.check(within(f.G, 1.2e-10, 0.05e-10), "G");

  PolicyParams p = make_params(exact_constants());
  p.finite_mode = true;
  auto pol = make_puts_policy(g1(), p);
  for (std::size_t N : {1000ul, 10000ul}) {
    MultiplicityGap g = estimate_multiplicity_gap(*pol, N, g1()->belief(0.5), 0.0, kMean, 200, 31);
    o.note << " gap(N=" << N << ")=" << g.gap << "±" << g.se_gap;
    o.check(std::abs(g.gap) <= 3 * g.se_gap + 1e-12, "gap at 0.5");
  }
  std::vector<double> adv, se;
  for (std::size_t N : {100ul, 1000ul, 10000ul}) {
    MultiplicityGap g = estimate_multiplicity_gap(*pol, N, g1()->belief(0.1), 0.0, kMean, 2000, 41);
    adv.push_back(g.adv);
    se.push_back(g.se_adv);
    o.note << " adv(N=" << N << ")=" << g.adv << "±" << g.se_adv;
  }
  o.check(adv[0] < adv[1] && adv[1] < adv[2], "adv_N increasing");
  o.check(adv[2] <= 0.15 + 3 * se[2], "adv_N below 0.15");
}

APath random_path(std::mt19937_64& rng, double T) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> bps;
  for (int i = 0; i < 3; ++i) bps.push_back(T * U(rng));
  std::sort(bps.begin(), bps.end());
  std::vector<Flow> flows;
  for (int i = 0; i < 4; ++i) flows.push_back(static_cast<Flow>(rng() % 3));
  return APath::from_spec(PathSpec{U(rng), PathSpec::Regime::piecewise, bps, flows}, 1.0);
}

void criterion10(Outcome& o) {
  RegimeChangeSpec r1 = regime_r1();
  APath zero = APath::from_spec(PathSpec{0.0, PathSpec::Regime::all_down, {}, {}}, 1.0);
  double dom = regime_delta_expected(r1, 1, zero);
  o.note << "dominant-state value=" << dom;
  o.check(dom > 0.0 && within(dom, 0.1, 1e-9), "dominant state");

  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int n = 0; n < 20; ++n) {
    const double T = 4.0;
    APath p = random_path(rng, T);
    for (int k = 0; k < 2; ++k) {
      double area = 0.0, a = 0.0;
      std::vector<double> cuts;
      for (const auto& s : p.segments()) cuts.push_back(s.t1);
      cuts.push_back(T);
      for (double b : cuts) {
        if (b > a) area += oracle::simpson([&](double s) { return regime_failure_pdf(r1, k, p, s); }, a, b, 400);
        a = b;
      }
      worst = std::max(worst, std::abs(area - (1 - std::exp(-regime_hazard_integral(r1, k, p, T)))));
    }
  }
  o.note << " survival identity err=" << worst;
  o.check(worst <= 1e-9, "survival identity");

  RegimeLipschitz L = regime_lipschitz_check(r1, 1000, 3);
  o.note << " L*=" << L.L_star << " ratio=" << L.max_ratio << " monotone violations=" << L.monotone_violations
         << "/" << L.monotone_pairs;
  o.check(within(L.L_star, 1.3125, 1e-9) && L.pairs == 1000 && L.max_ratio <= L.L_star, "Lipschitz");
  o.check(L.monotone_pairs > 0 && L.monotone_violations == 0, "monotone");

  StoppingSetup st = stopping_adapter(StoppingSpec{canonical_game()}, 0.0, hand_constants());
  double t = tol(st.params, 1.0 / 6);
  o.note << " stopping TOL=" << t;
  o.check(within(t, 0.0023810, 1e-7), "stopping TOL");

  auto pb = private_info_bound(*g1(), g1()->belief(0.1), 0.0, kMean);
  auto out = private_info_bound(*g1(), g1()->belief(0.5), 0.0, kMean);
  o.note << " private bound=" << pb.bound << " outside=" << out.bound;
  o.check(within(pb.bound, 0.35, 1e-9), "private bound");
  o.check(out.bound == 0.0, "private bound outside");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime limit
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> all{
      {1, "canonical closed forms", 5, criterion1},
      {2, "game constants", 5, criterion2},
      {3, "policy arithmetic", 0, criterion3},
      {4, "full-implementation certificate", 600, criterion4},
      {5, "contagion convergence", 0, criterion5},
      {6, "adversarial value inside the lower region", 0, criterion6},
      {7, "sequential optimality audit", 0, criterion7},
      {8, "finite-N concentration", 300, criterion8},
      {9, "finite-N substitute properties", 0, criterion9},
      {10, "applications", 0, criterion10},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("threw: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0) o.check(secs < c.budget_s, "runtime");
    failed += !o.ok;
    std::printf("%s criterion %d (%s): %s (%.1fs)\n", o.ok ? "PASS" : "FAIL", c.id, c.name,
                o.note.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
