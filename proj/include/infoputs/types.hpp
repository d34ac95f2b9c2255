#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace infoputs {

// Out-of-range inputs and violated preconditions.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Quadrature or root-finding failure; carries the residual estimate.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Probability vector over the ordered state list.
class Belief {
 public:
  Belief() = default;
  explicit Belief(std::vector<double> weights);

  // Two-state shortcut: mu is the weight on the dominant state.
  static Belief binary(double mu, std::size_t dominant = 1);
  static Belief point_mass(std::size_t n, std::size_t k);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t k) const { return w_[k]; }
  const std::vector<double>& weights() const { return w_; }

 private:
  std::vector<double> w_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);

enum class SplitLabel { silence, injection, jump };

const char* to_string(SplitLabel label);

// Finite-support posterior distribution emitted by a policy.
struct SignalSplit {
  std::vector<Belief> posteriors;
  std::vector<double> probs;
  SplitLabel label = SplitLabel::silence;

  // max_k |sum_i p_i mu_i(k) - prior(k)|, plus |sum p - 1|.
  double martingale_residual(const Belief& prior) const;
};

// Flow of aggregate play between events.
enum class Flow { up, down, hold };

}  // namespace infoputs
