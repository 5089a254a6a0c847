#pragma once

// Averages over the Bloch sphere of input states: a deterministic
// Gauss-Legendre x uniform-phi quadrature (the reference) and the closed
// forms it is checked against.

#include "hybridtele/closed_forms.hpp"
#include "hybridtele/teleport.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace hybridtele {

/// Gauss-Legendre in cos(theta) over [-1, 1] times a uniform phi grid.
struct QuadratureSpec {
  int n_theta = 64;
  int n_phi = 128;

  void validate() const;
};

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point rule on [-1, 1]; nodes ascending.
GaussLegendre gauss_legendre(int n);

/// Pairwise summation in a fixed order (independent of thread count).
double pairwise_sum(std::span<const double> values);

/// f must be safe to call concurrently.
using SphereFunction = std::function<double(const BlochInput&)>;

/// (1/4pi) \int f dOmega. Nodes are evaluated in parallel into a buffer and
/// reduced with pairwise_sum, so the result is bitwise reproducible.
double bloch_average(const SphereFunction& f, const QuadratureSpec& spec = {});

/// Serial nested-loop version of bloch_average.
double bloch_average_reference(const SphereFunction& f, const QuadratureSpec& spec = {});

/// <p(u)/(1 + x u)> with u = sin(theta) cos(phi), for
///   kind 1: |a|^4,  kind 2: |a|^2 |b|^2,  kind 3: u,  kind 4: a^2 b*^2 + c.c.
/// Requires 0 <= x < 1. Legacy gives kind 1 with a cubic 3x^3 term and the
/// kind 4 form (2 - x^2) artanh(x)/(2x^3) - 1/x^2, whose x -> 0 limit is
/// -1/6 instead of 0.
double moment_integral(int kind, double x, Form form = Form::Corrected);

/// moment_integral(kind, Q S) - moment_integral(kind, S); zero when Q S = S.
double g_functional(int kind, const ChannelParams& p, Form form = Form::Corrected);

/// A1 = <|a|^4/(4 P3)>, A2 = <|b|^4/(4 P3)>, A3 = <|a|^2 |b|^2/(4 P3)> with
/// 4 P3 = t^2 |a|^2 + (2 - t^2) |b|^2. which in 1..3.
double sp_moment(int which, double t);

/// Closed-form average fidelity. For PtoC, Legacy evaluates
/// Q/(Q-1) {2G1 + (2S^2+2Q)G2 + (SQ+S)G3 + S^2 Q G4} with legacy moments.
double avg_fidelity(const Protocol& protocol, const ChannelParams& p, Form form = Form::Corrected);

/// Closed-form average success probability; post-selected protocols carry
/// the t^2/2 stage overhead.
double avg_success_probability(const Protocol& protocol, const ChannelParams& p);

/// Measure-and-prepare fidelity bound. PtoC:
///   [S + 3S^3 - (1 - S^4) artanh S]/(4 S^3)
/// (Legacy flips the sign of the artanh term); 2/3 for the other directions.
double classical_limit(Direction direction, const ChannelParams& p, Form form = Form::Corrected);

/// <psi_t| (|a|^2 |b><b| + |b|^2 |-b><-b|) |psi_t> for one input, b = t alpha.
double classical_fidelity_pc(const BlochInput& in, const ChannelParams& p);

/// (1 - t^2)(2 + Q)/3: large-alpha gap between the PtoC and CtoP averages.
double fidelity_gap_large_alpha(const ChannelParams& p);

/// Quadrature of the per-input closed forms.
double avg_fidelity_quadrature(const Protocol& protocol, const ChannelParams& p, const QuadratureSpec& spec = {},
                               Form form = Form::Corrected);
double avg_success_probability_quadrature(const Protocol& protocol, const ChannelParams& p,
                                          const QuadratureSpec& spec = {});
double classical_limit_quadrature(const ChannelParams& p, const QuadratureSpec& spec = {});

/// Quadrature of the full numeric pipeline.
struct PipelineAverages {
  double fidelity = 0.0;
  double success_probability = 0.0;
  std::optional<double> post_fidelity;
  std::optional<double> post_success_probability;
};
PipelineAverages pipeline_averages(Direction direction, const ChannelParams& p, int dim,
                                   const QuadratureSpec& spec = {},
                                   ChannelSource source = ChannelSource::Evolved);

}  // namespace hybridtele
