#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "infoputs/types.hpp"

namespace infoputs {

// Payoff difference Δu(A, θ_k) = u(1,A,θ_k) - u(0,A,θ_k).
using PayoffDiff = std::function<double(double A, std::size_t k)>;

// One coordination environment. u(0,·,·) is normalised to zero, so the
// flow payoff of action 1 equals Δu.
struct GameSpec {
  std::string family;
  std::vector<double> states;
  PayoffDiff delta_u;
  double r = 1.0;
  double lambda = 1.0;
  std::size_t dominant = 1;
  double u_bound = 0.0;  // max |u| over the sampled A-grid

  std::size_t size() const { return states.size(); }
  double flow_payoff(int action, double A, std::size_t k) const;

  // Throws DomainError naming the first violated invariant.
  void validate() const;
};

// Δu(A,θ) = a·A + b·θ + c.
GameSpec affine_game(std::vector<double> states, double a, double b, double c, double r,
                     double lambda, std::size_t dominant);

// Δu tabulated on an increasing A-grid, one row per state; linear interpolation
// keeps monotone rows monotone.
GameSpec tabulated_game(std::vector<double> states, std::vector<double> A_grid,
                        std::vector<std::vector<double>> table, double r, double lambda,
                        std::size_t dominant);

// Θ={0,1}, Δu(A,θ)=A+2θ-1, r=λ=1.
GameSpec canonical_game();

double upper_play_path(double A0, double lambda, double t);
double lower_play_path(double A0, double lambda, double t);
double flow_path(Flow flow, double A0, double lambda, double t);

// Adaptive Gauss-Kronrod on [a,b]; throws NumericalError when the error
// estimate exceeds abs_tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10);

// ∫_0^∞ e^{-k s} f(s) ds for |f| <= bound, truncated where the tail
// bound·e^{-kT}/k drops below 1e-12.
double discounted_integral(const std::function<double(double)>& f, double k, double bound);

// ∫_0^∞ e^{-(λ+r)s} Δu(path_s, θ_k) ds along the all-up or all-down path from A.
double exp_horizon_value(const GameSpec& game, std::size_t k, double A, Flow flow);

// ΔŪ(μ,A): exponential-horizon value when everyone switches to 1.
double discounted_delta_value(const GameSpec& game, const Belief& mu, double A);

// Same functional along the all-down path.
double discounted_down_value(const GameSpec& game, const Belief& mu, double A);

struct PathSpec {
  enum class Regime { all_up, all_down, piecewise };
  double A0 = 0.0;
  Regime regime = Regime::all_up;
  std::vector<double> breakpoints;  // piecewise: piece i runs up to breakpoints[i]
  std::vector<Flow> pieces;         // breakpoints.size() + 1 flows, last one is the tail
};

struct PathSegment {
  double t0;
  double t1;
  double a0;
  Flow flow;
};

// Right-continuous aggregate-play path made of exponential-flow and hold
// segments, followed by a closed-form tail.
class APath {
 public:
  APath(double A0, double lambda);
  static APath from_spec(const PathSpec& spec, double lambda);

  void extend(double t_end, Flow flow);
  void step_to(double A);  // discontinuity at the current end time
  void set_tail(Flow flow) { tail_ = flow; }

  double at(double t) const;
  double end_time() const { return end_t_; }
  double end_value() const { return end_a_; }
  double lambda() const { return lambda_; }
  Flow tail() const { return tail_; }
  const std::vector<PathSegment>& segments() const { return segs_; }

 private:
  double lambda_;
  double start_a_;
  double end_t_ = 0.0;
  double end_a_;
  Flow tail_ = Flow::hold;
  std::vector<PathSegment> segs_;
};

struct PayoffFunctional {
  enum class Kind { discounted_mean, terminal_level, user_supplied };
  Kind kind = Kind::discounted_mean;
  double rate = 1.0;  // discounted_mean
  double time = 0.0;  // terminal_level evaluation time
  std::function<double(const APath&)> user;
  double bound = std::numeric_limits<double>::infinity();

  static PayoffFunctional discounted_mean(double rate);
  static PayoffFunctional terminal_level(double time);
  static PayoffFunctional user_supplied(std::function<double(const APath&)> fn, double bound);
};

double evaluate_functional(const PayoffFunctional& phi, const APath& path);

// φ of the pure all-up / all-down path from A0.
double functional_of_flow(const PayoffFunctional& phi, Flow flow, double A0, double lambda);

}  // namespace infoputs
