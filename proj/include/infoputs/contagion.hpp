#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "infoputs/dominance.hpp"
#include "infoputs/policy.hpp"

namespace infoputs {

// max over the threshold grid of ψ_UD(A) - ψ_LD(A). Multi-state games use the
// slices through the face vertices.
double initial_radius(const DominanceModel& model);

// Unique root x in (0, c) of x + (M/2)·TOL(x) = c, bisection to 1e-12.
double contagion_step(const PolicyParams& params, double c);

struct ContagionSequence {
  std::vector<double> radii;  // c_0, c_1, ...
  bool converged = false;
  std::size_t iterations = 0;
};

ContagionSequence contagion_sequence(const PolicyParams& params, double c0, double stop_tol,
                                     std::size_t max_iter);

// Round-n thresholds ψ^n(A) on the model grid, computed column by column:
// ψ^0 = ψ_UD and ψ^{n+1}(A) solves μ + (M/2)·TOL(D(μ,A)) = ψ^n(A). Validation
// mode for the radius recursion; binary games only.
std::vector<std::vector<double>> contagion_functions(const DominanceModel& model,
                                                     const PolicyParams& params,
                                                     std::size_t rounds);

// Lower bound on the payoff difference under the round-n conjecture, for a
// belief whose distance lies below the round radius c_n:
//   ΔŪ(μ,A) - [TOL(c_n)·L·(1+p_n) + (L+W)(1-p_n)]/λ,
// with p_n the up-move probability of the policy at D = c_n.
double lb_margin(const DominanceModel& model, const PolicyParams& params, PolicyKind kind,
                 const Belief& mu, double A, double c_n);

struct GridSpec {
  std::size_t n_mu = 200;
  std::size_t n_A = 200;
  double mu(std::size_t i) const { return n_mu < 2 ? 0.0 : double(i) / double(n_mu - 1); }
  double A(std::size_t j) const { return n_A < 2 ? 0.0 : double(j) / double(n_A - 1); }
};

enum class CellStatus { certified_one, certified_zero, undetermined, outside };

const char* to_string(CellStatus s);

struct Certificate {
  GridSpec grid;
  double epsilon = 0.0;
  PolicyKind policy = PolicyKind::puts;
  bool certified = false;
  double min_margin = 0.0;      // over cells with D >= ε
  double min_step_margin = 0.0;  // lb_margin at μ = ψ^{n+1}(A), over n and A
  std::size_t cells_checked = 0;
  std::size_t failures = 0;
  double worst_mu = 0.0, worst_A = 0.0;
  ContagionSequence sequence;
  PolicyParams params;
  std::vector<double> margins;  // row-major [i_mu * n_A + j_A]; NaN outside the region

  bool covers(double mu, double A, const DominanceModel& model) const;
  nlohmann::json to_json() const;
  void write_region_csv(const std::string& path) const;
};

Certificate certify_full_implementation(const DominanceModel& model, const PolicyParams& params,
                                        PolicyKind kind, const GridSpec& grid, double epsilon);

struct FiniteThreshold {
  std::size_t N = 0;
  double delta_bar = 0.0;  // finite-mode δ̄
  double delta_bar_cap = 0.0;  // Cr/(4(ēL + c_aux))
  double e_hi = 0.0, e_lo = 0.0, c_aux = 0.0;
  double G_first = 0.0, G_second = 0.0, G = 0.0;
  double offset = 0.0;  // (GN)^{-1/9}
};

FiniteThreshold finite_threshold(const GameConstants& k, std::size_t N, double finite_delta_bar);

struct DpOptions {
  double h = 0.02;        // trigger scan step
  double horizon = 12.0;  // T
  double tail_tol = 1e-4;
  std::size_t max_rounds = 20000;
  double move_tol = 1e-12;
};

struct RegionMap {
  GridSpec grid;
  std::vector<CellStatus> cells;  // row-major [i_mu * n_A + j_A]
  std::vector<double> threshold;  // r(A) on the A-grid at the fixed point
  std::size_t rounds = 0;
  double tail_bound = 0.0;

  CellStatus at(std::size_t i_mu, std::size_t j_A) const { return cells[i_mu * grid.n_A + j_A]; }
  void write_csv(const std::string& path) const;
};

// Iterated elimination on a discretised version of the game: the region where
// action 1 is strictly dominant under the conjecture "1 on R_k, 0 elsewhere"
// is grown from the upper dominance region until it stops moving.
RegionMap dp_oracle(const DominanceModel& model, const PolicyParams& params, PolicyKind kind,
                    const GridSpec& grid, const DpOptions& opt = {});

}  // namespace infoputs
