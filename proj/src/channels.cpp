#include "hybridtele/channels.hpp"

#include <cmath>
#include <numbers>

namespace hybridtele {

namespace {

void require_decay(double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw std::invalid_argument("decay parameter t must lie in (0, 1], got " + std::to_string(t));
  }
}

Matrix fock_damping(int dim, double t, int k) {
  const double eta = t * t;
  const double loss = 1.0 - eta;
  Matrix op = Matrix::Zero(dim, dim);
  for (int n = k; n < dim; ++n) {
    const double log_binom = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    const double w = std::exp(log_binom) * std::pow(eta, n - k) * std::pow(loss, k);
    op(n - k, n) = std::sqrt(w);
  }
  return op;
}

}  // namespace

ChannelParams ChannelParams::from_t(double t, double alpha) {
  require_decay(t);
  if (!(alpha >= 0.0)) throw std::invalid_argument("coherent amplitude must be >= 0");
  return ChannelParams(t, std::sqrt((1.0 - t) * (1.0 + t)), alpha);
}

ChannelParams ChannelParams::from_r(double r, double alpha) {
  if (!(r >= 0.0 && r < 1.0)) {
    throw std::invalid_argument("normalized time r must lie in [0, 1), got " + std::to_string(r));
  }
  if (!(alpha >= 0.0)) throw std::invalid_argument("coherent amplitude must be >= 0");
  return ChannelParams(std::sqrt((1.0 - r) * (1.0 + r)), r, alpha);
}

DerivedFactors ChannelParams::factors() const {
  const double a2 = alpha_ * alpha_;
  const double xq = 2.0 * a2 * r_ * r_;
  const double xs = 2.0 * a2 * t_ * t_;
  return {std::exp(-xq), std::exp(-xs), -std::expm1(-xq), -std::expm1(-xs)};
}

StateVector hybrid_pc_initial(double alpha, int dim) {
  const StateVector plus = coherent_ket(alpha, dim);
  const StateVector minus = coherent_ket(-alpha, dim);
  StateVector psi = tensor(basis_ket(ModeKind::polarization(), kH), plus);
  psi.amplitudes += tensor(basis_ket(ModeKind::polarization(), kV), minus).amplitudes;
  psi.normalize();
  return psi;
}

StateVector hybrid_ps_initial() {
  StateVector psi =
      tensor(basis_ket(ModeKind::polarization(), kH), basis_ket(ModeKind::qubit(), 0));
  psi.amplitudes += tensor(basis_ket(ModeKind::polarization(), kV), basis_ket(ModeKind::qubit(), 1)).amplitudes;
  psi.normalize();
  return psi;
}

std::vector<Matrix> damping_kraus(const ModeKind& kind, double t) {
  require_decay(t);
  const double loss = std::sqrt((1.0 - t) * (1.0 + t));
  switch (kind.tag()) {
    case ModeKind::Tag::Polarization3: {
      Matrix k0 = Matrix::Zero(3, 3);
      k0(kH, kH) = t;
      k0(kV, kV) = t;
      k0(kPolVacuum, kPolVacuum) = 1.0;
      if (t == 1.0) return {k0};
      Matrix k1 = Matrix::Zero(3, 3);
      Matrix k2 = Matrix::Zero(3, 3);
      k1(kPolVacuum, kH) = loss;
      k2(kPolVacuum, kV) = loss;
      return {k0, k1, k2};
    }
    case ModeKind::Tag::Fock:
    case ModeKind::Tag::Qubit2: {
      const int dim = kind.dim();
      if (t == 1.0) return {Matrix::Identity(dim, dim)};
      std::vector<Matrix> ops;
      ops.reserve(static_cast<std::size_t>(dim));
      for (int k = 0; k < dim; ++k) ops.push_back(fock_damping(dim, t, k));
      return ops;
    }
  }
  throw std::invalid_argument("unsupported mode kind");
}

DensityOperator evolve(const DensityOperator& rho, double t) {
  require_decay(t);
  DensityOperator out = rho;
  if (t == 1.0) return out;
  for (std::size_t mode = 0; mode < rho.layout.size(); ++mode) {
    const auto ops = damping_kraus(rho.layout[mode], t);
    out = apply_kraus(out, mode, ops);
  }
  return out;
}

DensityOperator rho_pc_analytic(double t, double alpha, int dim) {
  require_decay(t);
  const auto p = ChannelParams::from_t(t, alpha);
  const double q = p.factors().q;
  const double t2 = t * t;
  const StateVector plus = coherent_ket(t * alpha, dim);
  const StateVector minus = coherent_ket(-t * alpha, dim);
  const Matrix pp = plus.amplitudes * plus.amplitudes.adjoint();
  const Matrix mm = minus.amplitudes * minus.amplitudes.adjoint();
  const Matrix pm = plus.amplitudes * minus.amplitudes.adjoint();

  Matrix pol_hh = Matrix::Zero(3, 3), pol_vv = pol_hh, pol_00 = pol_hh, pol_hv = pol_hh;
  pol_hh(kH, kH) = 1.0;
  pol_vv(kV, kV) = 1.0;
  pol_00(kPolVacuum, kPolVacuum) = 1.0;
  pol_hv(kH, kV) = 1.0;

  const ModeLayout pol_layout{ModeKind::polarization()};
  const ModeLayout fock_layout{ModeKind::fock(dim)};
  auto kron = [&](const Matrix& a, const Matrix& b) {
    return tensor(DensityOperator{pol_layout, a}, DensityOperator{fock_layout, b}).matrix;
  };
  Matrix m = kron(t2 * pol_hh + (1.0 - t2) * pol_00, pp) + kron(t2 * pol_vv + (1.0 - t2) * pol_00, mm);
  const Matrix coherence = kron(t2 * q * pol_hv, pm);
  m += coherence + coherence.adjoint();
  return {pol_layout.concat(fock_layout), 0.5 * m};
}

DensityOperator rho_ps_analytic(double t) {
  require_decay(t);
  const double t2 = t * t;
  const double t3 = t2 * t;
  const ModeLayout layout{ModeKind::polarization(), ModeKind::qubit()};
  Matrix m = Matrix::Zero(6, 6);
  auto idx = [](Eigen::Index pol, Eigen::Index s) { return pol * 2 + s; };
  m(idx(kH, 0), idx(kH, 0)) = t2;
  m(idx(kPolVacuum, 0), idx(kPolVacuum, 0)) += (1.0 - t2);
  m(idx(kV, 1), idx(kV, 1)) = t2 * t2;
  m(idx(kV, 0), idx(kV, 0)) = t2 * (1.0 - t2);
  m(idx(kPolVacuum, 1), idx(kPolVacuum, 1)) = (1.0 - t2) * t2;
  m(idx(kPolVacuum, 0), idx(kPolVacuum, 0)) += (1.0 - t2) * (1.0 - t2);
  m(idx(kH, 0), idx(kV, 1)) = t3;
  m(idx(kV, 1), idx(kH, 0)) = t3;
  return {layout, 0.5 * m};
}

}  // namespace hybridtele
