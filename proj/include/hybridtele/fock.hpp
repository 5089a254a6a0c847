#pragma once

// Dense linear algebra over small composite Hilbert spaces built from
// truncated bosonic modes, a three-level lossy polarization system and
// plain qubits.
//
// Basis ordering is row-major over modes: mode 0 is the most significant
// index, so the flat index of |i0, i1, ..., ik> is ((i0*d1 + i1)*d2 + ...).

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hybridtele {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Raised when a Fock truncation cannot represent a state to the required
/// accuracy.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Polarization3 basis indices.
inline constexpr Eigen::Index kH = 0;
inline constexpr Eigen::Index kV = 1;
inline constexpr Eigen::Index kPolVacuum = 2;

class ModeKind {
 public:
  enum class Tag { Polarization3, Fock, Qubit2 };

  static ModeKind polarization() { return ModeKind(Tag::Polarization3, 3); }
  static ModeKind qubit() { return ModeKind(Tag::Qubit2, 2); }
  static ModeKind fock(int dim);

  Tag tag() const { return tag_; }
  int dim() const { return dim_; }
  std::string name() const;

  friend bool operator==(const ModeKind&, const ModeKind&) = default;

 private:
  ModeKind(Tag tag, int dim) : tag_(tag), dim_(dim) {}
  Tag tag_;
  int dim_;
};

class ModeLayout {
 public:
  ModeLayout() = default;
  ModeLayout(std::initializer_list<ModeKind> modes) : modes_(modes) {}
  explicit ModeLayout(std::vector<ModeKind> modes) : modes_(std::move(modes)) {}

  std::size_t size() const { return modes_.size(); }
  const ModeKind& operator[](std::size_t i) const { return modes_.at(i); }
  const std::vector<ModeKind>& modes() const { return modes_; }

  Eigen::Index total_dim() const;
  /// Product of dimensions of the modes after `mode`.
  Eigen::Index stride(std::size_t mode) const;

  ModeLayout concat(const ModeLayout& other) const;

  friend bool operator==(const ModeLayout&, const ModeLayout&) = default;

 private:
  std::vector<ModeKind> modes_;
};

struct StateVector {
  ModeLayout layout;
  Vector amplitudes;

  double norm() const { return amplitudes.norm(); }
  void normalize();
};

struct DensityOperator {
  ModeLayout layout;
  Matrix matrix;

  static DensityOperator from_pure(const StateVector& psi);

  cplx trace() const { return matrix.trace(); }
  /// Max elementwise |M - M^dagger|.
  double hermiticity_error() const;
  double purity() const;
};

/// Result of checking a DensityOperator against the invariants every
/// emitted operator must satisfy.
struct DensityCheck {
  double hermiticity_error = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;
  bool ok = false;
};

DensityCheck check_density(const DensityOperator& rho, bool normalized = true);

/// Smallest even truncation that keeps coherent amplitudes up to sqrt(2)*alpha
/// below the 1e-10 tail-mass bound: max(16, ceil(2a^2 + 8a + 12)).
int default_truncation(double alpha);

/// Poisson tail e^{-a^2} sum_{n >= dim} a^{2n}/n!, summed directly.
double coherent_tail_mass(double amplitude, int dim);

/// Truncated, renormalized coherent state. Throws TruncationError when the
/// discarded tail mass exceeds `max_tail` (1e-10 by default).
StateVector coherent_ket(double amplitude, int dim, double max_tail = 1e-10);

/// N_pm (|a> +- |-a>), normalized. sign must be +1 or -1.
StateVector cat_ket(double amplitude, int sign, int dim);

StateVector basis_ket(const ModeKind& kind, Eigen::Index index);

StateVector tensor(const StateVector& a, const StateVector& b);
DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);

/// Reorders tensor factors: result mode k is input mode order[k].
StateVector permute_modes(const StateVector& psi, std::span<const std::size_t> order);
DensityOperator permute_modes(const DensityOperator& rho, std::span<const std::size_t> order);

/// Traces out every mode not listed in `keep`. Kept modes retain their
/// relative order.
DensityOperator partial_trace(const DensityOperator& rho, std::vector<std::size_t> keep);

/// Transposes the indices of a single mode. The result is Hermitian but in
/// general not positive.
Matrix partial_transpose(const DensityOperator& rho, std::size_t mode);

/// Ascending eigenvalues of (M + M^dagger)/2. Throws std::invalid_argument
/// if M is not Hermitian within `tol`.
RealVector hermitian_eigenvalues(const Matrix& m, double tol = 1e-10);

double trace_distance(const DensityOperator& a, const DensityOperator& b);

/// <psi|rho|psi>, clamped to [0, 1].
double fidelity_pure(const StateVector& psi, const DensityOperator& rho);

/// rho -> O rho O^dagger with O acting on one mode.
DensityOperator apply_local(const DensityOperator& rho, std::size_t mode, const Matrix& op);

/// rho -> sum_k K_k rho K_k^dagger with K_k acting on one mode.
/// OpenMP-parallel over output rows.
DensityOperator apply_kraus(const DensityOperator& rho, std::size_t mode,
                            std::span<const Matrix> kraus);

/// Serial reference for apply_kraus; builds the full lifted operators.
DensityOperator apply_kraus_reference(const DensityOperator& rho, std::size_t mode,
                                      std::span<const Matrix> kraus);

/// 50:50 beam splitter U = exp[(pi/4)(a^dag b - a b^dag)] on two Fock modes
/// truncated at `dim` each. Coherent amplitudes map as
/// (x, y) -> ((x + y)/sqrt2, (y - x)/sqrt2), so |b>|b> -> |sqrt2 b>|0> and
/// |b>|-b> -> |0>|-sqrt2 b>.
///
/// Stored as one real rotation per total-photon-number sector. Sectors with
/// N >= dim are clipped by the truncation box; the operator is exactly
/// unitary on N < dim.
class BeamSplitter {
 public:
  explicit BeamSplitter(int dim);

  int dim() const { return dim_; }

  /// Applies U to every column of `block`, whose rows index the two-mode
  /// basis |n_a, n_b> as n_a * dim + n_b.
  void apply(Matrix& block) const;

  Matrix matrix() const;

 private:
  int dim_;
  std::vector<Eigen::MatrixXd> sectors_;
};

/// Dense form of BeamSplitter(dim).
Matrix beam_splitter_50_50(int dim);

}  // namespace hybridtele
