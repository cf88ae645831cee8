#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace gossa {

/// Deterministic step-size sequence gamma_n = gamma0 / n^xi with
/// xi in (1/2, 1], so that sum gamma_n = inf and sum gamma_n^2 < inf.
/// xi < 1 is the slow ("subcritical") regime where log(gamma_k/gamma_{k+1})
/// = o(gamma_k); xi = 1 is the critical regime gamma_n ~ gamma_star/n with
/// gamma_star = gamma0, where the CLT covariance depends on gamma_star.
class StepSchedule {
 public:
  enum class Regime { Subcritical, Critical };

  StepSchedule(double gamma0, double xi) : gamma0_(gamma0), xi_(xi) {
    if (!(gamma0 > 0.0)) throw std::invalid_argument("StepSchedule: gamma0 must be positive");
    if (!(xi > 0.5 && xi <= 1.0)) {
      throw std::invalid_argument("StepSchedule: xi must lie in (1/2, 1]");
    }
  }

  double gamma0() const { return gamma0_; }
  double xi() const { return xi_; }

  double gamma(std::int64_t n) const {
    return gamma0_ / std::pow(static_cast<double>(n), xi_);
  }

  Regime regime() const { return xi_ == 1.0 ? Regime::Critical : Regime::Subcritical; }
  /// Only meaningful in the critical regime.
  double gamma_star() const { return gamma0_; }

 private:
  double gamma0_;
  double xi_;
};

}  // namespace gossa
