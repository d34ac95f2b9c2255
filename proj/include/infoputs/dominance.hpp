#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "infoputs/game.hpp"
#include "infoputs/types.hpp"

namespace infoputs {

// Root along the slice μ(α) = δ_θ* - (1-α)·d̂ of the all-up value. Returns 0
// when the value is already positive at α=0. Bisection to 1e-12.
double lower_dominance_threshold(const GameSpec& game, double A, const std::vector<double>& d);
double lower_dominance_threshold(const GameSpec& game, double A);  // binary

// Same root for the all-down value, clamped to [0,1].
double upper_dominance_threshold(const GameSpec& game, double A, const std::vector<double>& d);
double upper_dominance_threshold(const GameSpec& game, double A);

// d̂(μ) = (δ_θ* - μ)/(1 - μ(θ*)); components sum to 0, θ*-component 1.
std::vector<double> belief_direction(const Belief& mu, std::size_t dominant);

struct GameConstants {
  double L = 0.0;      // max ∂ΔŪ/∂A
  double l = 0.0;      // min ∂ΔŪ/∂μ along slices
  double L_psi = 0.0;  // L / l
  double C = 0.0;      // payoff floor at the dominant state, with safety factor
  double c_aux = 0.0;  // λC/(2L)
  double e_hi = 0.0;   // λC/(4L)
  double e_lo = 0.0;   // λC/(4L(1+M))
  double delta_bar = 0.0;
  double M = 0.0;          // 2 L_psi
  double Delta_bar = 0.0;  // max |Δu|
  double lambda = 1.0;
  double r = 1.0;
};

// Finite-difference extremisation over an A-grid with at least 64 points.
GameConstants game_constants(const GameSpec& game, std::size_t grid = 129, double safety = 0.99);

// Recomputes the derived constants after replacing C and/or δ̄ (negative = keep).
GameConstants with_overrides(GameConstants k, double C, double delta_bar);

// Dominance geometry of one game. Per-state exponential-horizon values are
// tabulated on a dense A-grid once; threshold tables on the coarser grid come
// from quadrature plus bisection.
class DominanceModel {
 public:
  using StateValueFn = std::function<double(double A, std::size_t k)>;

  explicit DominanceModel(GameSpec game, std::size_t threshold_grid = 201,
                          std::size_t dense_grid = 4097);
  // Replaces the all-down per-state value that seeds the upper dominance region.
  DominanceModel(GameSpec game, StateValueFn down_value, std::size_t threshold_grid = 201,
                 std::size_t dense_grid = 4097);

  const GameSpec& game() const { return game_; }
  std::size_t dominant() const { return game_.dominant; }
  bool binary() const { return game_.size() == 2; }

  std::vector<double> up_values(double A) const;
  std::vector<double> down_values(double A) const;
  double delta_value(const Belief& mu, double A) const;
  double down_value(const Belief& mu, double A) const;

  // Binary thresholds (interpolated per-state values, exact linear root).
  double psi_ld(double A) const;
  double psi_ud(double A) const;

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& psi_ld_table() const { return psi_ld_tab_; }
  const std::vector<double>& psi_ud_table() const { return psi_ud_tab_; }

  // μ ∈ Ψ_LD(A), boundary included.
  bool in_lower_region(const Belief& mu, double A) const;
  bool on_face(const Belief& mu) const { return mu[dominant()] <= 0.0; }
  bool in_upper_region(const Belief& mu, double A) const { return down_value(mu, A) > 0.0; }

  // Scaled distance along -d̂(μ) to Ψ_LD(A) ∪ Bd_θ*.
  double distance(const Belief& mu, double A) const;

  // sup{p : p·μ' <= μ for some μ' outside int Ψ_LD(A) with μ'(θ*) > 0}.
  double escape_probability(const Belief& mu, double A) const;
  SignalSplit escape_split(const Belief& mu, double A, double eta) const;

  Belief belief(double mu) const { return Belief::binary(mu, dominant()); }

  void write_csv(const std::string& path) const;

 private:
  void build(std::size_t threshold_grid, std::size_t dense_grid);
  double interp(const std::vector<double>& tab, double A) const;
  // greedy fill of the escape program; returns ν and the order negatives were added
  std::vector<double> escape_mass(const Belief& mu, double A,
                                  std::vector<std::size_t>* neg_order) const;

  GameSpec game_;
  StateValueFn down_override_;
  std::vector<double> grid_, psi_ld_tab_, psi_ud_tab_;
  std::size_t dense_n_ = 0;
  std::vector<std::vector<double>> up_tab_, down_tab_;  // [state][dense index]
};

// ᾱ_d̂(A) on the model's threshold grid.
struct DirectionalSlice {
  std::vector<double> direction;
  std::vector<double> A;
  std::vector<double> alpha_bar;
};

DirectionalSlice make_slice(const DominanceModel& model, const std::vector<double>& d);

}  // namespace infoputs
