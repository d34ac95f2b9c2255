#include "infoputs/types.hpp"

#include <cmath>

namespace infoputs {

namespace {
constexpr double kSimplexTol = 1e-12;
}

Belief::Belief(std::vector<double> weights) : w_(std::move(weights)) {
  if (w_.size() < 2) throw DomainError("belief needs at least two states");
  double sum = 0.0;
  for (double& x : w_) {
    if (!std::isfinite(x) || x < -kSimplexTol)
      throw DomainError("belief weight outside [0,1]");
    if (x < 0.0) x = 0.0;  // rounding residue only
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTol) throw DomainError("belief weights do not sum to 1");
}

Belief Belief::binary(double mu, std::size_t dominant) {
  if (dominant > 1) throw DomainError("binary dominant index must be 0 or 1");
  std::vector<double> w(2);
  w[dominant] = mu;
  w[1 - dominant] = 1.0 - mu;
  return Belief(std::move(w));
}

Belief Belief::point_mass(std::size_t n, std::size_t k) {
  if (k >= n) throw DomainError("point mass index out of range");
  std::vector<double> w(n, 0.0);
  w[k] = 1.0;
  return Belief(std::move(w));
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

const char* to_string(SplitLabel label) {
  switch (label) {
    case SplitLabel::silence: return "silence";
    case SplitLabel::injection: return "injection";
    case SplitLabel::jump: return "jump";
  }
  return "?";
}

double SignalSplit::martingale_residual(const Belief& prior) const {
  double psum = 0.0;
  for (double p : probs) psum += p;
  double res = std::abs(psum - 1.0);
  for (std::size_t k = 0; k < prior.size(); ++k) {
    double m = 0.0;
    for (std::size_t i = 0; i < posteriors.size(); ++i) m += probs[i] * posteriors[i][k];
    res = std::max(res, std::abs(m - prior[k]));
  }
  return res;
}

}  // namespace infoputs
