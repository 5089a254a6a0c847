#include "hybridtele/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace hybridtele {

namespace {

std::vector<Eigen::Index> mode_dims(const ModeLayout& layout) {
  std::vector<Eigen::Index> dims;
  dims.reserve(layout.size());
  for (const auto& m : layout.modes()) dims.push_back(m.dim());
  return dims;
}

void require_mode(const ModeLayout& layout, std::size_t mode) {
  if (mode >= layout.size()) {
    throw std::invalid_argument("mode index " + std::to_string(mode) + " out of range for " +
                                std::to_string(layout.size()) + "-mode layout");
  }
}

void require_square(const DensityOperator& rho) {
  if (rho.matrix.rows() != rho.matrix.cols() || rho.matrix.rows() != rho.layout.total_dim()) {
    throw std::invalid_argument("density matrix shape does not match its layout");
  }
}

// Y = (I_L (x) K (x) I_R) X, parallel over the columns of X.
Matrix left_apply(const Matrix& x, const Matrix& k, Eigen::Index stride) {
  const Eigen::Index d = k.rows();
  const Eigen::Index n = x.rows();
  const Eigen::Index blocks = n / (d * stride);
  Matrix y = Matrix::Zero(n, x.cols());
  const Eigen::Index cols = x.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index l = 0; l < blocks; ++l) {
      const Eigen::Index base = l * d * stride;
      for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
          const cplx kij = k(i, j);
          if (kij == cplx(0.0)) continue;
          for (Eigen::Index r = 0; r < stride; ++r) {
            y(base + i * stride + r, c) += kij * x(base + j * stride + r, c);
          }
        }
      }
    }
  }
  return y;
}

Matrix lift(const ModeLayout& layout, std::size_t mode, const Matrix& op) {
  const Eigen::Index stride = layout.stride(mode);
  const Eigen::Index d = layout[mode].dim();
  const Eigen::Index left = layout.total_dim() / (d * stride);
  const Eigen::Index n = layout.total_dim();
  Matrix full = Matrix::Zero(n, n);
  for (Eigen::Index l = 0; l < left; ++l)
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index r = 0; r < stride; ++r)
          full(l * d * stride + i * stride + r, l * d * stride + j * stride + r) = op(i, j);
  return full;
}

}  // namespace

ModeKind ModeKind::fock(int dim) {
  if (dim < 2) throw std::invalid_argument("Fock dimension must be >= 2");
  return ModeKind(Tag::Fock, dim);
}

std::string ModeKind::name() const {
  switch (tag_) {
    case Tag::Polarization3:
      return "Polarization3";
    case Tag::Qubit2:
      return "Qubit2";
    case Tag::Fock:
      return "Fock(" + std::to_string(dim_) + ")";
  }
  return "?";
}

Eigen::Index ModeLayout::total_dim() const {
  Eigen::Index n = 1;
  for (const auto& m : modes_) n *= m.dim();
  return n;
}

Eigen::Index ModeLayout::stride(std::size_t mode) const {
  Eigen::Index s = 1;
  for (std::size_t k = mode + 1; k < modes_.size(); ++k) s *= modes_[k].dim();
  return s;
}

ModeLayout ModeLayout::concat(const ModeLayout& other) const {
  std::vector<ModeKind> all = modes_;
  all.insert(all.end(), other.modes_.begin(), other.modes_.end());
  return ModeLayout(std::move(all));
}

void StateVector::normalize() {
  const double n = norm();
  if (n == 0.0) throw std::invalid_argument("cannot normalize a zero state");
  amplitudes /= n;
}

DensityOperator DensityOperator::from_pure(const StateVector& psi) {
  return {psi.layout, psi.amplitudes * psi.amplitudes.adjoint()};
}

double DensityOperator::hermiticity_error() const {
  return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
}

double DensityOperator::purity() const { return (matrix * matrix).trace().real(); }

DensityCheck check_density(const DensityOperator& rho, bool normalized) {
  DensityCheck c;
  c.hermiticity_error = rho.hermiticity_error();
  const cplx tr = rho.trace();
  c.trace_error = std::abs(tr.imag());
  if (normalized) c.trace_error = std::max(c.trace_error, std::abs(tr.real() - 1.0));
  const Matrix sym = 0.5 * (rho.matrix + rho.matrix.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  c.ok = c.hermiticity_error <= 1e-12 && c.trace_error <= 1e-10 && c.min_eigenvalue >= -1e-10;
  return c;
}

int default_truncation(double alpha) {
  const double a = std::abs(alpha);
  int dim = std::max(16, static_cast<int>(std::ceil(2.0 * a * a + 8.0 * a + 12.0)));
  if (dim % 2 != 0) ++dim;
  return dim;
}

double coherent_tail_mass(double amplitude, int dim) {
  const double a2 = amplitude * amplitude;
  if (a2 == 0.0) return 0.0;
  const double log_a2 = std::log(a2);
  const int n_max = dim + static_cast<int>(a2 + 20.0 * std::sqrt(a2) + 60.0);
  double sum = 0.0;
  for (int n = dim; n <= n_max; ++n) {
    sum += std::exp(-a2 + n * log_a2 - std::lgamma(n + 1.0));
  }
  return sum;
}

StateVector coherent_ket(double amplitude, int dim, double max_tail) {
  const ModeKind kind = ModeKind::fock(dim);
  const double tail = coherent_tail_mass(amplitude, dim);
  if (tail > max_tail) {
    throw TruncationError("coherent amplitude " + std::to_string(amplitude) + " at dim " +
                          std::to_string(dim) + " leaves tail mass " + std::to_string(tail));
  }
  Vector c = Vector::Zero(dim);
  if (amplitude == 0.0) {
    c(0) = 1.0;
  } else {
    const double la = std::log(std::abs(amplitude));
    const double a2 = amplitude * amplitude;
    for (int n = 0; n < dim; ++n) {
      double mag = std::exp(-0.5 * a2 + n * la - 0.5 * std::lgamma(n + 1.0));
      if (amplitude < 0.0 && n % 2 == 1) mag = -mag;
      c(n) = mag;
    }
  }
  StateVector psi{ModeLayout{kind}, std::move(c)};
  psi.normalize();
  return psi;
}

StateVector cat_ket(double amplitude, int sign, int dim) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("cat sign must be +1 or -1");
  if (sign == -1 && amplitude == 0.0) {
    throw std::invalid_argument("odd cat state with zero amplitude is the zero vector");
  }
  StateVector plus = coherent_ket(amplitude, dim);
  const StateVector minus = coherent_ket(-amplitude, dim);
  plus.amplitudes += static_cast<double>(sign) * minus.amplitudes;
  plus.normalize();
  return plus;
}

StateVector basis_ket(const ModeKind& kind, Eigen::Index index) {
  if (index < 0 || index >= kind.dim()) throw std::invalid_argument("basis index out of range");
  Vector v = Vector::Zero(kind.dim());
  v(index) = 1.0;
  return {ModeLayout{kind}, std::move(v)};
}

StateVector tensor(const StateVector& a, const StateVector& b) {
  const Eigen::Index nb = b.amplitudes.size();
  Vector v(a.amplitudes.size() * nb);
  for (Eigen::Index i = 0; i < a.amplitudes.size(); ++i) {
    v.segment(i * nb, nb) = a.amplitudes(i) * b.amplitudes;
  }
  return {a.layout.concat(b.layout), std::move(v)};
}

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  const Eigen::Index na = a.matrix.rows();
  const Eigen::Index nb = b.matrix.rows();
  Matrix m(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < na; ++j) m.block(i * nb, j * nb, nb, nb) = a.matrix(i, j) * b.matrix;
  return {a.layout.concat(b.layout), std::move(m)};
}

namespace {

// Maps each flat index of the source layout to its flat index under `order`.
std::vector<Eigen::Index> permutation_map(const ModeLayout& layout,
                                          std::span<const std::size_t> order,
                                          ModeLayout& permuted) {
  const std::size_t m = layout.size();
  if (order.size() != m) throw std::invalid_argument("permutation size mismatch");
  std::vector<bool> seen(m, false);
  std::vector<ModeKind> modes;
  for (std::size_t k : order) {
    require_mode(layout, k);
    if (seen[k]) throw std::invalid_argument("permutation repeats a mode");
    seen[k] = true;
    modes.push_back(layout[k]);
  }
  permuted = ModeLayout(std::move(modes));
  const auto dims = mode_dims(layout);
  std::vector<Eigen::Index> new_stride(m);
  for (std::size_t k = 0; k < m; ++k) new_stride[k] = permuted.stride(k);
  std::vector<Eigen::Index> where(m);  // new position of old mode
  for (std::size_t k = 0; k < m; ++k) where[order[k]] = static_cast<Eigen::Index>(k);

  const Eigen::Index n = layout.total_dim();
  std::vector<Eigen::Index> map(static_cast<std::size_t>(n));
  for (Eigen::Index flat = 0; flat < n; ++flat) {
    Eigen::Index rest = flat;
    Eigen::Index target = 0;
    for (std::size_t k = m; k-- > 0;) {
      const Eigen::Index digit = rest % dims[k];
      rest /= dims[k];
      target += digit * new_stride[static_cast<std::size_t>(where[k])];
    }
    map[static_cast<std::size_t>(flat)] = target;
  }
  return map;
}

}  // namespace

StateVector permute_modes(const StateVector& psi, std::span<const std::size_t> order) {
  ModeLayout permuted;
  const auto map = permutation_map(psi.layout, order, permuted);
  Vector v(psi.amplitudes.size());
  for (std::size_t i = 0; i < map.size(); ++i) v(map[i]) = psi.amplitudes(static_cast<Eigen::Index>(i));
  return {std::move(permuted), std::move(v)};
}

DensityOperator permute_modes(const DensityOperator& rho, std::span<const std::size_t> order) {
  require_square(rho);
  ModeLayout permuted;
  const auto map = permutation_map(rho.layout, order, permuted);
  const Eigen::Index n = rho.matrix.rows();
  Matrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      m(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]) = rho.matrix(i, j);
  return {std::move(permuted), std::move(m)};
}

DensityOperator partial_trace(const DensityOperator& rho, std::vector<std::size_t> keep) {
  require_square(rho);
  if (keep.empty()) throw std::invalid_argument("partial_trace needs at least one kept mode");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
    throw std::invalid_argument("partial_trace keep set repeats a mode");
  }
  for (std::size_t k : keep) require_mode(rho.layout, k);

  const std::size_t m = rho.layout.size();
  const auto dims = mode_dims(rho.layout);
  std::vector<bool> kept(m, false);
  for (std::size_t k : keep) kept[k] = true;

  std::vector<ModeKind> kept_modes;
  for (std::size_t k : keep) kept_modes.push_back(rho.layout[k]);
  ModeLayout out_layout(std::move(kept_modes));
  const Eigen::Index nk = out_layout.total_dim();
  const Eigen::Index n = rho.layout.total_dim();
  const Eigen::Index nt = n / nk;

  // full index = keep_part(ik) + traced_part(it)
  std::vector<Eigen::Index> keep_part(static_cast<std::size_t>(nk));
  std::vector<Eigen::Index> traced_part(static_cast<std::size_t>(nt));
  {
    std::vector<Eigen::Index> kdims, kstr, tdims, tstr;
    for (std::size_t k = 0; k < m; ++k) {
      (kept[k] ? kdims : tdims).push_back(dims[k]);
      (kept[k] ? kstr : tstr).push_back(rho.layout.stride(k));
    }
    auto fill = [](std::vector<Eigen::Index>& out, const std::vector<Eigen::Index>& d,
                   const std::vector<Eigen::Index>& s) {
      for (std::size_t flat = 0; flat < out.size(); ++flat) {
        Eigen::Index rest = static_cast<Eigen::Index>(flat);
        Eigen::Index full = 0;
        for (std::size_t k = d.size(); k-- > 0;) {
          full += (rest % d[k]) * s[k];
          rest /= d[k];
        }
        out[flat] = full;
      }
    };
    fill(keep_part, kdims, kstr);
    fill(traced_part, tdims, tstr);
  }

  Matrix out = Matrix::Zero(nk, nk);
  for (Eigen::Index j = 0; j < nk; ++j)
    for (Eigen::Index i = 0; i < nk; ++i) {
      cplx acc = 0.0;
      for (Eigen::Index t = 0; t < nt; ++t) {
        const Eigen::Index tp = traced_part[static_cast<std::size_t>(t)];
        acc += rho.matrix(keep_part[static_cast<std::size_t>(i)] + tp,
                          keep_part[static_cast<std::size_t>(j)] + tp);
      }
      out(i, j) = acc;
    }
  return {std::move(out_layout), std::move(out)};
}

Matrix partial_transpose(const DensityOperator& rho, std::size_t mode) {
  require_square(rho);
  require_mode(rho.layout, mode);
  const Eigen::Index stride = rho.layout.stride(mode);
  const Eigen::Index d = rho.layout[mode].dim();
  const Eigen::Index n = rho.matrix.rows();
  Matrix out(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    const Eigen::Index j = (col / stride) % d;
    for (Eigen::Index row = 0; row < n; ++row) {
      const Eigen::Index i = (row / stride) % d;
      out(row, col) = rho.matrix(row + (j - i) * stride, col + (i - j) * stride);
    }
  }
  return out;
}

RealVector hermitian_eigenvalues(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigenvalues of a non-square matrix");
  if (m.size() > 0) {
    const double err = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (err > tol) {
      throw std::invalid_argument("matrix is not Hermitian (max |M - M^dag| = " +
                                  std::to_string(err) + ")");
    }
  }
  const Matrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double trace_distance(const DensityOperator& a, const DensityOperator& b) {
  if (!(a.layout == b.layout)) throw std::invalid_argument("trace_distance: layout mismatch");
  return 0.5 * hermitian_eigenvalues(a.matrix - b.matrix).cwiseAbs().sum();
}

double fidelity_pure(const StateVector& psi, const DensityOperator& rho) {
  if (!(psi.layout == rho.layout)) throw std::invalid_argument("fidelity_pure: layout mismatch");
  const cplx f = psi.amplitudes.dot(rho.matrix * psi.amplitudes);
  if (std::abs(f.imag()) > 1e-8 || f.real() < -1e-8 || f.real() > 1.0 + 1e-8) {
    throw std::domain_error("fidelity outside [0, 1]: " + std::to_string(f.real()));
  }
  return std::clamp(f.real(), 0.0, 1.0);
}

DensityOperator apply_local(const DensityOperator& rho, std::size_t mode, const Matrix& op) {
  const Matrix ops[] = {op};
  return apply_kraus(rho, mode, ops);
}

DensityOperator apply_kraus(const DensityOperator& rho, std::size_t mode,
                            std::span<const Matrix> kraus) {
  require_square(rho);
  require_mode(rho.layout, mode);
  const Eigen::Index stride = rho.layout.stride(mode);
  const Eigen::Index d = rho.layout[mode].dim();
  const Eigen::Index n = rho.matrix.rows();
  Matrix out = Matrix::Zero(n, n);
  for (const Matrix& k : kraus) {
    if (k.rows() != d || k.cols() != d) throw std::invalid_argument("Kraus operator dimension mismatch");
    // K rho K^dag = K (K rho^dag)^dag
    const Matrix half = left_apply(rho.matrix.adjoint(), k, stride);
    out += left_apply(half.adjoint(), k, stride);
  }
  return {rho.layout, std::move(out)};
}

DensityOperator apply_kraus_reference(const DensityOperator& rho, std::size_t mode,
                                      std::span<const Matrix> kraus) {
  require_square(rho);
  require_mode(rho.layout, mode);
  Matrix out = Matrix::Zero(rho.matrix.rows(), rho.matrix.cols());
  for (const Matrix& k : kraus) {
    const Matrix full = lift(rho.layout, mode, k);
    out.noalias() += full * rho.matrix * full.adjoint();
  }
  return {rho.layout, std::move(out)};
}

BeamSplitter::BeamSplitter(int dim) : dim_(dim) {
  if (dim < 2) throw std::invalid_argument("beam splitter dimension must be >= 2");
  const double angle = std::numbers::pi / 4.0;
  sectors_.reserve(static_cast<std::size_t>(2 * dim - 1));
  for (int total = 0; total <= 2 * dim - 2; ++total) {
    const Eigen::Index size = total + 1;
    // Generator a^dag b - a b^dag on |k, total - k>, k = photons in mode a.
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(size, size);
    for (Eigen::Index k = 0; k < total; ++k) {
      const double c = std::sqrt(static_cast<double>((k + 1) * (total - k)));
      gen(k + 1, k) = c;
      gen(k, k + 1) = -c;
    }
    const Matrix herm = cplx(0.0, 1.0) * gen.cast<cplx>();
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
    const Vector phases =
        (es.eigenvalues().cast<cplx>() * cplx(0.0, -angle)).array().exp().matrix();
    const Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    sectors_.push_back(u.real());
  }
}

void BeamSplitter::apply(Matrix& block) const {
  const Eigen::Index d = dim_;
  if (block.rows() != d * d) throw std::invalid_argument("beam splitter block has wrong row count");
  Vector in, out;
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    for (Eigen::Index total = 0; total <= 2 * d - 2; ++total) {
      const Eigen::Index kmin = std::max<Eigen::Index>(0, total - d + 1);
      const Eigen::Index kmax = std::min<Eigen::Index>(total, d - 1);
      const Eigen::Index len = kmax - kmin + 1;
      in.resize(len);
      for (Eigen::Index k = kmin; k <= kmax; ++k) in(k - kmin) = block(k * d + (total - k), c);
      const auto& u = sectors_[static_cast<std::size_t>(total)];
      out.noalias() = u.block(kmin, kmin, len, len).cast<cplx>() * in;
      for (Eigen::Index k = kmin; k <= kmax; ++k) block(k * d + (total - k), c) = out(k - kmin);
    }
  }
}

Matrix BeamSplitter::matrix() const {
  Matrix id = Matrix::Identity(dim_ * dim_, dim_ * dim_);
  apply(id);
  return id;
}

Matrix beam_splitter_50_50(int dim) { return BeamSplitter(dim).matrix(); }

}  // namespace hybridtele
