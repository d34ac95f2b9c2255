#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "infoputs/policy.hpp"
#include "oracles.hpp"

using namespace infoputs;
using doctest::Approx;

namespace {

std::shared_ptr<const DominanceModel> g1() {
  static auto m = std::make_shared<const DominanceModel>(canonical_game());
  return m;
}

// C = 2/3 without the safety factor, δ̄ = 1.
PolicyParams hand_params(double eta = 0.01) {
  return make_params(with_overrides(game_constants(canonical_game()), 2.0 / 3, -1.0), eta);
}

PolicyState state(double mu, double A, double Z, double t = 0.0) {
  return PolicyState{t, Belief::binary(mu), Z, A};
}

}  // namespace

TEST_CASE("tolerance and down schedules") {
  PolicyParams p = hand_params();
  CHECK(p.delta_bar() == Approx(1.0));
  CHECK(tol(p, 1.0 / 6) == Approx(1.0 / 60).epsilon(1e-6));
  CHECK(tol(p, 0.0) == 0.0);
  CHECK(tol(p, 1.0) == Approx(0.3).epsilon(1e-6));
  for (int i = 1; i <= 100; ++i) {
    double D = i / 100.0;
    CHECK(tol(p, D) == Approx(oracle::g1_tol(D)).epsilon(1e-6));
    CHECK(p.k.M * tol(p, D) <= D);
    if (i > 1) CHECK(tol(p, D) > tol(p, D - 0.01));
  }
  CHECK(down(p, 1.0 / 6) == Approx(1.0 / 12));
  CHECK(down(p, 0.0) == 0.0);
  CHECK(down(p, 0.4) == Approx(0.2));
  CHECK_THROWS_AS(tol(p, -0.1), DomainError);
}

TEST_CASE("quadratic schedule with the matching coefficient reproduces the exact one") {
  PolicyParams p = hand_params();
  for (double D : {0.01, 0.1, 1.0 / 6, 0.5, 1.0}) {
    PolicyParams q = p;
    q.tol_rule = TolRule::quadratic_maintext;
    q.m = maintext_coefficient(p, D);
    CHECK(std::abs(tol(q, D) - tol(p, D)) <= 1e-12);
  }
}

TEST_CASE("parameter validation") {
  PolicyParams p = hand_params();
  p.eta = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.eta = 1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = hand_params();
  p.tol_rule = TolRule::quadratic_maintext;
  p.m = 5.0;  // M·m·D² > D near D = 1
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("policy branches on the canonical game") {
  PolicyParams p = hand_params();
  const auto& m = *g1();

  PolicyDecision s = policy_step(p, m, state(0.5, 0.0, 0.0));
  CHECK(s.split.label == SplitLabel::silence);
  CHECK(s.z_update == ZUpdate::drift);

  PolicyDecision inj = policy_step(p, m, state(0.5, 0.0, 1.0 / 60));
  REQUIRE(inj.split.label == SplitLabel::injection);
  CHECK(inj.z_update == ZUpdate::reset_to_A);
  CHECK(inj.split.posteriors[0][1] == Approx(0.5111111).epsilon(1e-7));
  CHECK(inj.split.posteriors[1][1] == Approx(0.4166667).epsilon(1e-7));
  CHECK(inj.split.probs[0] == Approx(15.0 / 17).epsilon(1e-6));
  CHECK(inj.split.probs[1] == Approx(2.0 / 17).epsilon(1e-6));
  CHECK(inj.split.martingale_residual(Belief::binary(0.5)) <= 1e-12);

  PolicyDecision j = policy_step(p, m, state(0.1, 0.0, 0.7));
  REQUIRE(j.split.label == SplitLabel::jump);
  CHECK(j.split.posteriors[0][1] == Approx(0.3448276).epsilon(1e-7));
  CHECK(j.split.probs[0] == Approx(0.29).epsilon(1e-12));
  CHECK(j.split.posteriors[1][1] == 0.0);

  // absorbed belief: nothing to say
  CHECK(policy_step(p, m, state(0.0, 0.3, 0.9)).split.label == SplitLabel::silence);
  // exactly on the boundary the jump branch is consulted
  CHECK(policy_step(p, m, state(1.0 / 3, 0.0, 0.5)).split.label == SplitLabel::jump);
}

TEST_CASE("injection invariants over random states") {
  PolicyParams p = make_params(game_constants(canonical_game()));
  const auto& m = *g1();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int injections = 0;
  for (int i = 0; i < 2000; ++i) {
    double A = U(rng), mu = U(rng), Z = U(rng);
    PolicyState s = state(mu, A, Z);
    PolicyDecision d = policy_step(p, m, s);
    // near δ_θ* the up move has no room; the state is then upper-dominant and silent
    if (!m.in_lower_region(s.mu_prev, A) && mu + p.k.M * tol(p, m.distance(s.mu_prev, A)) > 1.0) {
      CHECK(m.in_upper_region(s.mu_prev, A));
      CHECK(d.split.label == SplitLabel::silence);
    }
    CHECK(d.split.martingale_residual(s.mu_prev) <= 1e-12);
    if (d.split.label == SplitLabel::injection) {
      ++injections;
      double D = m.distance(s.mu_prev, A);
      CHECK(p.k.M * tol(p, D) <= D);
      CHECK_FALSE(m.in_lower_region(d.split.posteriors[0], A));
      CHECK(m.delta_value(d.split.posteriors[1], A) > 0.0);
      CHECK(d.split.probs[0] == Approx(injection_up_probability(p, D)));
    }
    if (d.split.label == SplitLabel::silence) CHECK(d.split.posteriors[0][1] == mu);
  }
  CHECK(injections > 100);
}

TEST_CASE("target drift") {
  CHECK(target_drift(0.0, 1.0, std::log(2.0)) == Approx(0.5));
  CHECK(target_drift(1.0, 3.0, 0.7) == 1.0);
  CHECK(target_drift(0.5, 1.0, 0.0) == 0.5);
  for (double s : {0.1, 0.5, 2.0})
    for (double t : {0.2, 1.3})
      CHECK(target_drift(0.2, 1.5, s + t) ==
            Approx(target_drift(target_drift(0.2, 1.5, s), 1.5, t)).epsilon(1e-14));
}

TEST_CASE("alternative policies") {
  PolicyParams p = hand_params();
  auto none = make_alternative_policy(PolicyKind::no_information, g1(), p);
  CHECK(none->step(state(0.5, 0.0, 0.9)).split.label == SplitLabel::silence);
  CHECK(none->step(state(0.1, 0.0, 0.9)).split.label == SplitLabel::silence);

  auto cbn = make_alternative_policy(PolicyKind::conclusive_bad_news, g1(), p);
  PolicyDecision d = cbn->step(state(0.5, 0.0, 1.0 / 60));
  REQUIRE(d.split.label == SplitLabel::injection);
  CHECK(d.split.posteriors[0][1] == Approx(0.5111111).epsilon(1e-7));
  CHECK(d.split.probs[0] == Approx(0.9782609).epsilon(1e-7));
  CHECK(d.split.posteriors[1][1] == 0.0);
  CHECK(d.split.probs[1] == Approx(0.0217391).epsilon(1e-6));
  CHECK(d.split.martingale_residual(Belief::binary(0.5)) <= 1e-12);

  auto late = make_alternative_policy(PolicyKind::delayed_jump, g1(), p, 1.0);
  CHECK(late->step(state(0.1, 0.0, 0.0, 0.5)).split.label == SplitLabel::silence);
  CHECK(late->next_scheduled_time(state(0.1, 0.0, 0.0, 0.5)) == 1.0);
  CHECK(late->step(state(0.1, 0.0, 0.0, 1.0)).split.label == SplitLabel::jump);
  CHECK(std::isinf(late->next_scheduled_time(state(0.5, 0.0, 0.0, 0.5))));
}
