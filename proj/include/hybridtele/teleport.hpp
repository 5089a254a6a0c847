#pragma once

// Teleportation between polarization qubits and field-like qubits
// (coherent-state or vacuum/single-photon encodings) through the decohered
// hybrid channels. Measurements are abstract projectors; corrections are
// applied on the receiver mode.

#include "hybridtele/channels.hpp"
#include "hybridtele/fock.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hybridtele {

/// Input qubit a|0> + b|1> with a = cos(theta/2) e^{i phi/2},
/// b = sin(theta/2) e^{-i phi/2}.
struct BlochInput {
  double theta = 0.0;
  double phi = 0.0;

  cplx a() const;
  cplx b() const;
  double a2() const;  ///< |a|^2
  double b2() const;  ///< |b|^2
  /// a b* + a* b = sin(theta) cos(phi)
  double u() const;
};

enum class Direction { PtoC, CtoP, PtoS, StoP };

std::string_view to_string(Direction d);
/// Accepts "PtoC", "p2c", "p->c" style spellings, case-insensitive.
Direction parse_direction(std::string_view s);

/// Direction plus optional post-selection on photon arrival at a
/// polarization receiver (CtoP and StoP only).
struct Protocol {
  Direction direction = Direction::PtoC;
  bool postselected = false;

  void validate() const;
  std::string name() const;
};

inline constexpr double kNegligibleProbability = 1e-14;

enum class OutcomeLabel { B1, B2, B3, B4, O1, O2, O3, O4, Oe, PolarizationLoss, Residual };
enum class Correction { Identity, Xc, Zs, SigmaX, SigmaY, SigmaZ, Discarded };

std::string_view to_string(OutcomeLabel l);
std::string_view to_string(Correction c);

struct TeleportOutcome {
  OutcomeLabel label = OutcomeLabel::B1;
  double probability = 0.0;
  bool success = false;
  Correction correction = Correction::Discarded;
  /// Corrected (success) or raw (failure) receiver state, normalized.
  /// Zero matrix when the branch probability is below kNegligibleProbability.
  DensityOperator output;
};

struct PostSelected {
  DensityOperator output;
  double kept_probability = 0.0;
  double success_probability = 0.0;
  double fidelity = 0.0;
};

struct TeleportResult {
  Direction direction = Direction::PtoC;
  std::vector<TeleportOutcome> outcomes;
  double success_probability = 0.0;
  /// Probability-weighted mixture of the corrected success branches.
  DensityOperator output;
  StateVector target;
  double fidelity = 0.0;
  std::optional<PostSelected> postselected;
};

enum class ChannelSource { Evolved, Analytic };

/// Linear response of the full teleportation pipeline (channel ensemble,
/// joint measurement, correction) to the four input dyadics |e_x><e_y| of
/// a two-dimensional input basis. Any input in that span is then evaluated
/// exactly without re-running the Fock-space pipeline.
class TeleportMap {
 public:
  static TeleportMap build(Direction direction, const ChannelParams& params, int dim,
                           ChannelSource source = ChannelSource::Evolved);

  Direction direction() const { return direction_; }
  const ChannelParams& params() const { return params_; }
  int dim() const { return dim_; }

  TeleportResult evaluate(const BlochInput& input) const;

  /// Runs the pipeline directly on a pure input ket in the input mode.
  TeleportResult evaluate_ket(const StateVector& input, const StateVector& target) const;

  StateVector input_ket(const BlochInput& input) const;
  StateVector target_ket(const BlochInput& input) const;

 private:
  struct Outcome {
    OutcomeLabel label;
    bool success;
    Correction correction;
    Vector bra;                      // rank-one outcome when non-empty
    std::vector<Eigen::Index> rows;  // diagonal projector otherwise
    Matrix op;                       // correction on the receiver
  };

  TeleportMap(Direction d, const ChannelParams& p, int dim) : direction_(d), params_(p), dim_(dim) {}

  // sqrt(w_i) (in (x) Phi_i), after the optional beam splitter; rows index
  // (input, sender), columns the receiver.
  std::vector<Matrix> joint(const Vector& in) const;
  // Corrected, unnormalized receiver operator per outcome.
  std::vector<Matrix> respond(const std::vector<Matrix>& vx, const std::vector<Matrix>& vy) const;
  TeleportResult assemble(const std::vector<Matrix>& branch, const StateVector& target) const;

  Direction direction_;
  ChannelParams params_;
  int dim_;
  ModeLayout input_layout_;
  ModeLayout receiver_layout_;
  std::array<Vector, 2> input_basis_;
  std::array<Vector, 2> target_basis_;
  std::vector<Outcome> outcomes_;
  std::vector<Matrix> channel_;  // sqrt(w_i) Phi_i, sender x receiver
  std::optional<BeamSplitter> splitter_;
  std::vector<std::array<std::array<Matrix, 2>, 2>> response_;  // [outcome][x][y]
};

/// Bell states on Polarization3 (x) Polarization3, supported on {H,V}^2.
/// 1,2: (|HH> +- |VV>)/sqrt2; 3,4: (|HV> +- |VH>)/sqrt2.
StateVector bell_state_polarization(int i);

/// Single-rail Bell states on Qubit2 (x) Qubit2 with |0>,|1> in the roles
/// of |H>,|V>.
StateVector bell_state_single_rail(int i);

/// Coherent-state Bell states: 1,2 ~ |b>|b> +- |-b>|-b>;
/// 3,4 ~ |b>|-b> +- |-b>|b>.
StateVector bell_state_coherent(int i, double beta, int dim);

/// Diagonals of the parity-measurement projectors O1..O4 and the error
/// projector Oe on Fock(dim) (x) Fock(dim). dim must be even.
struct ParityProjectors {
  std::array<RealVector, 5> diagonal;  // O1, O2, O3, O4, Oe
  Matrix dense(int which) const;
};
ParityProjectors parity_projectors(int dim);

/// Projects a polarization state onto span{|H>,|V>} and renormalizes.
/// `kept_probability` is 1 - <0_p|rho|0_p>.
struct PostSelection {
  DensityOperator output;
  double kept_probability = 0.0;
};
PostSelection postselect_polarization(const DensityOperator& rho);

/// Success-probability overhead of the post-selection stage on top of the
/// vacuum filtering (its own polarization Bell measurement succeeds with 1/2).
inline constexpr double kPostselectionBellFactor = 0.5;

/// Full pipeline for each direction. Field-like modes are truncated at `dim`.
TeleportResult teleport_p_to_c(const BlochInput& input, const ChannelParams& params, int dim,
                               ChannelSource source = ChannelSource::Evolved);
TeleportResult teleport_c_to_p(const BlochInput& input, const ChannelParams& params, int dim,
                               ChannelSource source = ChannelSource::Evolved);
TeleportResult teleport_p_to_s(const BlochInput& input, const ChannelParams& params,
                               ChannelSource source = ChannelSource::Evolved);
TeleportResult teleport_s_to_p(const BlochInput& input, const ChannelParams& params,
                               ChannelSource source = ChannelSource::Evolved);

/// Fidelity of the pipeline result for a protocol (post-selected branch when
/// requested).
double pipeline_fidelity(const TeleportResult& r, const Protocol& p);
double pipeline_success_probability(const TeleportResult& r, const Protocol& p);

}  // namespace hybridtele
