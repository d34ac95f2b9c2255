#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "infoputs/dominance.hpp"
#include "infoputs/game.hpp"
#include "infoputs/policy.hpp"

namespace infoputs {

// Dynamic regime change: action 0 attacks at flow cost c, the regime fails at
// hazard γ(A, θ) and an attacker collects 1 when it does.
struct RegimeChangeSpec {
  std::vector<double> states;  // increasing regime strength
  std::function<double(double A, std::size_t k)> hazard;
  // γ(A, θ_k) = intercept[k] + slope[k]·A when filled; ∫γ along a path is then closed form
  std::vector<double> intercept, slope;
  double cost = 0.0;
  double r = 1.0;
  double lambda = 1.0;

  std::size_t size() const { return states.size(); }
  bool affine() const { return !slope.empty(); }
  // γ >= 0, strictly decreasing in A and θ on a grid, γ(0, θ̄) < c.
  void validate(std::size_t grid = 129) const;
};

RegimeChangeSpec affine_regime(std::vector<double> states, std::vector<double> intercept,
                               std::vector<double> slope, double cost, double r, double lambda);

// γ(A, θ) = (κ - θ)(1 - βA).
RegimeChangeSpec product_affine_regime(std::vector<double> states, double kappa, double beta,
                                       double cost, double r, double lambda);

// Θ={0,1}, γ = (1.5-θ)(1-A/2), c = 0.6, r = λ = 1.
RegimeChangeSpec regime_r1();

// ∫_0^s γ(A_v, θ_k) dv along the path.
double regime_hazard_integral(const RegimeChangeSpec& spec, std::size_t k, const APath& path, double s);

// f(A, s | 0) = γ(A_s, θ_k) e^{-∫_0^s γ}.
double regime_failure_pdf(const RegimeChangeSpec& spec, std::size_t k, const APath& path, double s);

// ΔU(A, θ_k, τ | 0) = ∫_0^τ e^{-rs}(c - f(A, s | 0)) ds.
double regime_delta_fixed(const RegimeChangeSpec& spec, std::size_t k, const APath& path, double tau);

// Same, averaged over τ ~ Exp(λ).
double regime_delta_expected(const RegimeChangeSpec& spec, std::size_t k, const APath& path);

// E_{θ~μ} of the τ-averaged value along the all-up path from A.
double regime_delta_value(const RegimeChangeSpec& spec, const Belief& mu, double A);

// Binary only: the θ̄-weight at which the all-up value crosses zero, in [0,1].
double regime_psi_ld(const RegimeChangeSpec& spec, double A);

struct RegimeLipschitz {
  double L_gamma = 0.0;      // max |∂γ/∂A| on the grid
  double gamma_max = 0.0;    // max γ on the grid
  double L_star = 0.0;       // L_γ²/r² + L_γ/r
  double L_star_full = 0.0;  // same with max(L_γ, γ_max), which the derivation also needs
  double max_ratio = 0.0;    // empirical sup of |ΔU(A)-ΔU(A')| / ‖A-A'‖_∞
  std::size_t pairs = 0;
  std::size_t monotone_pairs = 0;
  std::size_t monotone_violations = 0;
};

RegimeLipschitz regime_lipschitz_check(const RegimeChangeSpec& spec, std::size_t pairs = 1000,
                                       std::uint64_t seed = 1, std::size_t grid = 257);

// Irreversible investment on top of a flow game.
struct StoppingSpec {
  GameSpec base;
  bool irreversible = true;
  double W = -1.0;  // gap floor; negative means Δ̄/r
};

struct StoppingSetup {
  std::shared_ptr<const DominanceModel> model;  // upper region from the hold-at-A continuation
  PolicyParams params;                          // W-modified TOL
  double W = 0.0;
  double initial_radius = 0.0;
};

// Requires A0 = 0. Constants default to game_constants(base).
StoppingSetup stopping_adapter(const StoppingSpec& spec, double A0,
                               std::optional<GameConstants> constants = std::nullopt,
                               double eta = 0.01);

struct PrivateInfoBound {
  double bound = 0.0;
  double p_star_A0 = 0.0;
  double p_star_one = 0.0;
};

// |p*(μ0,1) - p*(μ0,A0)|·(φ(Ā) - φ(A̲)) inside Ψ_LD(A0), 0 outside it and off the face.
PrivateInfoBound private_info_bound(const DominanceModel& model, const Belief& mu0, double A0,
                                    const PayoffFunctional& phi);

}  // namespace infoputs
