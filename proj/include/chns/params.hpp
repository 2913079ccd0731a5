#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "chns/forms.hpp"

namespace chns {

/// Penalty settings used for the convergence experiments at degree k.
inline PenaltyConfig reference_penalties(int k) {
  switch (k) {
    case 1: return {2.0, 1.0, 8.0, 16.0};
    case 2: return {4.0, 2.0, 64.0, 128.0};
    case 3: return {8.0, 8.0, 128.0, 256.0};
    default: throw std::invalid_argument("reference_penalties: no settings for degree " + std::to_string(k));
  }
}

/// reference_penalties(k) with sigma_tilde_ellip raised to 4, 8, 16 for
/// k = 1, 2, 3. On box elements smaller values let the largest eigenvalue of
/// the projection M^{-1} B^T A^{-1} B exceed 1 and the pressure drifts.
inline PenaltyConfig run_penalties(int k) {
  PenaltyConfig p = reference_penalties(k);
  p.sigma_tilde_ellip = k == 3 ? 16.0 : 4.0 * p.sigma_tilde_ellip;
  return p;
}

struct SchemeParams {
  int dim = 2;
  int degree = 1;
  double kappa = 1.0;
  double mu_s = 1.0;
  double tau = 1e-3;
  double T = 1e-3;
  double sigma_chi = 1.0 / 12.0;
  PenaltyConfig penalties = run_penalties(1);

  /// Number of steps N_T = T / tau, rounded to the nearest integer.
  int n_steps() const { return static_cast<int>(std::llround(T / tau)); }

  void validate() const {
    if (dim != 2 && dim != 3) throw std::invalid_argument("dim must be 2 or 3");
    if (degree < 1) throw std::invalid_argument("degree must be >= 1");
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
    if (!(mu_s > 0.0)) throw std::invalid_argument("mu_s must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
    if (!(T >= 0.0)) throw std::invalid_argument("T must be >= 0");
    if (!(sigma_chi > 0.0) || sigma_chi > 1.0 / (4.0 * dim) + 1e-15)
      throw std::invalid_argument("sigma_chi must lie in (0, 1/(4 dim)]");
    penalties.validate();
  }
};

}  // namespace chns
