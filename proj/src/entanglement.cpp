#include "hybridtele/entanglement.hpp"

#include "hybridtele/channels.hpp"

#include <cmath>

namespace hybridtele {

double negativity_numeric(const DensityOperator& rho, std::size_t split_mode) {
  const RealVector ev = hermitian_eigenvalues(partial_transpose(rho, split_mode));
  double neg = 0.0;
  for (Eigen::Index i = 0; i < ev.size() && ev(i) < 0.0; ++i) neg += -ev(i);
  return 2.0 * neg;
}

double negativity_ps_analytic(double t) {
  const double t2 = t * t;
  return t2 * t2;
}

double negativity_pc_legacy(double t, double alpha) {
  const auto p = ChannelParams::from_t(t, alpha);
  const double q = p.factors().q;
  const double e = std::exp(-2.0 * t * t * alpha * alpha);
  const double np2 = 1.0 / (2.0 + 2.0 * e);
  const double nm2 = 1.0 / (2.0 - 2.0 * e);
  const double sum = np2 + nm2;
  const double root = std::sqrt(16.0 * q * np2 * nm2 + (1.0 - q) * (1.0 - q) * sum * sum);
  return t * t / (2.0 * np2 * nm2) * ((q - 1.0) * sum + root);
}

double negativity_pc_pure(double alpha) {
  return std::sqrt(-std::expm1(-4.0 * alpha * alpha));
}

double negativity_pc_numeric(double t, double alpha, int dim) {
  const auto psi = hybrid_pc_initial(alpha, dim);
  return negativity_numeric(evolve(DensityOperator::from_pure(psi), t), 1);
}

}  // namespace hybridtele
