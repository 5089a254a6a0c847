#include "hybridtele/closed_forms.hpp"

#include <cmath>

namespace hybridtele {

namespace {

// 4 P3 = t^2 |a|^2 + (2 - t^2) |b|^2
double sp_weight(const BlochInput& in, double t2) { return t2 * in.a2() + (2.0 - t2) * in.b2(); }

}  // namespace

double pc_success_constant(const ChannelParams& p) {
  const auto f = p.factors();
  return f.q * f.s;
}

double per_input_fidelity(const Protocol& protocol, const BlochInput& in, const ChannelParams& p, Form form) {
  protocol.validate();
  const auto f = p.factors();
  const double t = p.t();
  const double t2 = p.t2();
  const double a2 = in.a2(), b2 = in.b2();
  const double a4 = a2 * a2, b4 = b2 * b2, ab = a2 * b2;
  const double coherence = form == Form::Corrected ? 2.0 * f.q : f.q;

  switch (protocol.direction) {
    case Direction::PtoC: {
      const cplx a = in.a(), b = in.b();
      const cplx x = std::conj(a) + std::conj(b) * f.s;  // <psi_t|b> / N
      const cplx y = a * f.s + b;                          // <-b|psi_t> / N
      const cplx cross = form == Form::Corrected ? a * std::conj(b) * x * y
                                                 : a * std::conj(b) * (a + b * f.s) * (std::conj(a) * f.s + std::conj(b));
      const double num = a2 * std::norm(a + b * f.s) + b2 * std::norm(a * f.s + b) + 2.0 * f.q * cross.real();
      const double u = in.u();
      return num / ((1.0 + f.s * u) * (1.0 + f.q * f.s * u));
    }
    case Direction::CtoP: {
      const double base = a4 + b4 + coherence * ab;
      return protocol.postselected ? base : t2 * base;
    }
    case Direction::PtoS:
      return a4 + t2 * b4 + (1.0 - t2) * ab + 2.0 * t * ab;
    case Direction::StoP: {
      const double w = sp_weight(in, t2);
      if (protocol.postselected) return (t2 * a4 + (1.0 - t2 + 2.0 * t) * ab + b4) / w;
      return (t2 * t2 * a4 + t2 * (1.0 + 2.0 * t - t2) * ab + t2 * b4) / w;
    }
  }
  return 0.0;
}

double per_input_success_probability(const Protocol& protocol, const BlochInput& in, const ChannelParams& p) {
  protocol.validate();
  const auto f = p.factors();
  const double t2 = p.t2();
  const double post = protocol.postselected ? 0.5 * t2 : 1.0;
  switch (protocol.direction) {
    case Direction::PtoC:
      return 0.5 * t2 * (1.0 + pc_success_constant(p) * in.u());
    case Direction::CtoP:
      return post * f.one_minus_s / (1.0 + f.s * in.u());
    case Direction::PtoS:
      return 0.5 * t2;
    case Direction::StoP:
      return post * 0.5 * sp_weight(in, t2);
  }
  return 0.0;
}

DensityOperator closed_form_output(const Protocol& protocol, const BlochInput& in, const ChannelParams& p, int dim) {
  protocol.validate();
  const auto f = p.factors();
  const double t = p.t(), t2 = p.t2();
  const cplx a = in.a(), b = in.b();
  const double a2 = in.a2(), b2 = in.b2();
  const cplx abc = a * std::conj(b);

  switch (protocol.direction) {
    case Direction::PtoC: {
      const Vector plus = coherent_ket(p.beta(), dim).amplitudes;
      const Vector minus = coherent_ket(-p.beta(), dim).amplitudes;
      Matrix m = a2 * plus * plus.adjoint() + b2 * minus * minus.adjoint();
      const Matrix c = f.q * abc * plus * minus.adjoint();
      m += c + c.adjoint();
      return {ModeLayout{ModeKind::fock(dim)}, m / (1.0 + pc_success_constant(p) * in.u())};
    }
    case Direction::PtoS: {
      Matrix m = Matrix::Zero(2, 2);
      m(0, 0) = a2 + (1.0 - t2) * b2;
      m(1, 1) = t2 * b2;
      m(0, 1) = t * abc;
      m(1, 0) = std::conj(m(0, 1));
      return {ModeLayout{ModeKind::qubit()}, m};
    }
    case Direction::CtoP:
    case Direction::StoP:
      break;
  }

  Matrix m = Matrix::Zero(3, 3);
  if (protocol.direction == Direction::CtoP) {
    m(kH, kH) = t2 * a2;
    m(kV, kV) = t2 * b2;
    m(kPolVacuum, kPolVacuum) = 1.0 - t2;
    m(kH, kV) = t2 * f.q * abc;
  } else {
    const double w = sp_weight(in, t2);
    m(kH, kH) = (t2 * t2 * a2 + t2 * (1.0 - t2) * b2) / w;
    m(kV, kV) = t2 * b2 / w;
    m(kPolVacuum, kPolVacuum) = (t2 * (1.0 - t2) * a2 + (1.0 - t2) * (2.0 - t2) * b2) / w;
    m(kH, kV) = t2 * t * abc / w;
  }
  m(kV, kH) = std::conj(m(kH, kV));
  DensityOperator rho{ModeLayout{ModeKind::polarization()}, m};
  if (protocol.postselected) return postselect_polarization(rho).output;
  return rho;
}

}  // namespace hybridtele
