#pragma once

#include "hybridtele/fock.hpp"

namespace hybridtele {

/// Twice the absolute sum of the negative eigenvalues of the partial
/// transpose taken on `split_mode`.
double negativity_numeric(const DensityOperator& rho, std::size_t split_mode);

/// t^4 for the decohered polarization/single-rail channel.
double negativity_ps_analytic(double t);

/// Legacy closed form for the polarization/coherent channel,
///   t^2/(2 Np^2 Nm^2) {(Q-1)(Np^2+Nm^2) + sqrt(16 Q Np^2 Nm^2 + (1-Q)^2 (Np^2+Nm^2)^2)}
/// with N_pm = (2 +- 2 exp(-2 t^2 a^2))^{-1/2}. It overestimates the
/// partial-transpose negativity (by a factor 4 at t = 1); kept for auditing.
double negativity_pc_legacy(double t, double alpha);

/// Pure-state value sqrt(1 - exp(-4 a^2)) of the undecohered
/// polarization/coherent channel, from its Schmidt coefficients.
double negativity_pc_pure(double alpha);

/// negativity_numeric of the Kraus-evolved polarization/coherent channel.
double negativity_pc_numeric(double t, double alpha, int dim);

}  // namespace hybridtele
