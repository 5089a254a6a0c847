#pragma once

// Hybrid entangled channels and their evolution under photon loss at a
// common rate for every mode. The loss is parameterized by the amplitude
// decay t in (0, 1]; r = sqrt(1 - t^2) is the normalized time.

#include "hybridtele/fock.hpp"

#include <vector>

namespace hybridtele {

/// Q = exp(-2 a^2 (1 - t^2)) and S = exp(-2 t^2 a^2), with their
/// complements computed without cancellation.
struct DerivedFactors {
  double q = 1.0;
  double s = 1.0;
  double one_minus_q = 0.0;
  double one_minus_s = 0.0;
};

class ChannelParams {
 public:
  static ChannelParams from_t(double t, double alpha);
  static ChannelParams from_r(double r, double alpha);

  double t() const { return t_; }
  double r() const { return r_; }
  double t2() const { return t_ * t_; }
  double alpha() const { return alpha_; }
  /// Decayed coherent amplitude t * alpha.
  double beta() const { return t_ * alpha_; }

  DerivedFactors factors() const;

 private:
  ChannelParams(double t, double r, double alpha) : t_(t), r_(r), alpha_(alpha) {}
  double t_;
  double r_;
  double alpha_;
};

/// (|H>|alpha> + |V>|-alpha>)/sqrt2 on Polarization3 (x) Fock(dim).
StateVector hybrid_pc_initial(double alpha, int dim);

/// (|H>|0> + |V>|1>)/sqrt2 on Polarization3 (x) Qubit2.
StateVector hybrid_ps_initial();

/// Amplitude-damping Kraus family for one mode, complete to 1e-12.
/// Polarization3 loses H and V into the vacuum level; Fock and Qubit2 use
/// the standard bosonic family with transmissivity t^2.
std::vector<Matrix> damping_kraus(const ModeKind& kind, double t);

/// Photon loss with decay t on every mode of `rho`.
DensityOperator evolve(const DensityOperator& rho, double t);

/// Closed-form decohered polarization/coherent channel assembled from
/// |+-t alpha> dyadics.
DensityOperator rho_pc_analytic(double t, double alpha, int dim);

/// Closed-form decohered polarization/single-rail channel.
DensityOperator rho_ps_analytic(double t);

}  // namespace hybridtele
