#include "hybridtele/teleport.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace hybridtele {

namespace {

constexpr double kEnsembleCutoff = 1e-15;

Matrix correction_matrix(Correction c, const ModeKind& receiver) {
  const int d = receiver.dim();
  Matrix op = Matrix::Identity(d, d);
  switch (c) {
    case Correction::Identity:
    case Correction::Discarded:
      break;
    case Correction::Xc:
      for (int n = 1; n < d; n += 2) op(n, n) = -1.0;
      break;
    case Correction::Zs:
      op(1, 1) = -1.0;
      break;
    case Correction::SigmaX:
      op(kH, kH) = 0.0;
      op(kV, kV) = 0.0;
      op(kH, kV) = 1.0;
      op(kV, kH) = 1.0;
      break;
    case Correction::SigmaY:
      // -i sigma_y on {H, V}; global phase dropped.
      op(kH, kH) = 0.0;
      op(kV, kV) = 0.0;
      op(kH, kV) = -1.0;
      op(kV, kH) = 1.0;
      break;
    case Correction::SigmaZ:
      op(kV, kV) = -1.0;
      break;
  }
  return op;
}

StateVector two_mode(const ModeKind& kind, std::initializer_list<std::pair<Eigen::Index, cplx>> terms) {
  const Eigen::Index d = kind.dim();
  Vector v = Vector::Zero(d * d);
  for (const auto& [idx, c] : terms) v(idx) += c;
  StateVector psi{ModeLayout{kind, kind}, std::move(v)};
  psi.normalize();
  return psi;
}

void require_bell_index(int i) {
  if (i < 1 || i > 4) throw std::invalid_argument("Bell state index must be in 1..4");
}

std::vector<Matrix> channel_ensemble(const DensityOperator& rho, Eigen::Index sender_dim) {
  const Matrix herm = 0.5 * (rho.matrix + rho.matrix.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
  if (es.info() != Eigen::Success) throw std::runtime_error("channel eigendecomposition failed");
  const Eigen::Index n = herm.rows();
  const Eigen::Index receiver_dim = n / sender_dim;
  std::vector<Matrix> comps;
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    const double w = es.eigenvalues()(k);
    if (w <= kEnsembleCutoff) break;
    const Vector v = std::sqrt(w) * es.eigenvectors().col(k);
    Matrix phi(sender_dim, receiver_dim);
    for (Eigen::Index s = 0; s < sender_dim; ++s)
      for (Eigen::Index r = 0; r < receiver_dim; ++r) phi(s, r) = v(s * receiver_dim + r);
    comps.push_back(std::move(phi));
  }
  return comps;
}

DensityOperator channel_state(Direction d, const ChannelParams& p, int dim, ChannelSource source) {
  const bool coherent = d == Direction::PtoC || d == Direction::CtoP;
  DensityOperator rho;
  if (coherent) {
    rho = source == ChannelSource::Analytic
              ? rho_pc_analytic(p.t(), p.alpha(), dim)
              : evolve(DensityOperator::from_pure(hybrid_pc_initial(p.alpha(), dim)), p.t());
  } else {
    rho = source == ChannelSource::Analytic ? rho_ps_analytic(p.t())
                                            : evolve(DensityOperator::from_pure(hybrid_ps_initial()), p.t());
  }
  if (d == Direction::CtoP || d == Direction::StoP) {
    const std::size_t order[] = {1, 0};
    rho = permute_modes(rho, order);
  }
  return rho;
}

}  // namespace

cplx BlochInput::a() const { return std::polar(std::cos(0.5 * theta), 0.5 * phi); }
cplx BlochInput::b() const { return std::polar(std::sin(0.5 * theta), -0.5 * phi); }
double BlochInput::a2() const {
  const double c = std::cos(0.5 * theta);
  return c * c;
}
double BlochInput::b2() const {
  const double s = std::sin(0.5 * theta);
  return s * s;
}
double BlochInput::u() const { return std::sin(theta) * std::cos(phi); }

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::PtoC: return "PtoC";
    case Direction::CtoP: return "CtoP";
    case Direction::PtoS: return "PtoS";
    case Direction::StoP: return "StoP";
  }
  return "?";
}

Direction parse_direction(std::string_view s) {
  std::string key;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  std::string pair;
  if (key.size() == 4 && key.substr(1, 2) == "to") pair = {key[0], key[3]};
  if (key.size() == 3 && key[1] == '2') pair = {key[0], key[2]};
  if (key.size() == 2) pair = key;
  if (pair == "pc") return Direction::PtoC;
  if (pair == "cp") return Direction::CtoP;
  if (pair == "ps") return Direction::PtoS;
  if (pair == "sp") return Direction::StoP;
  throw std::invalid_argument("unknown direction '" + std::string(s) + "' (expected PtoC, CtoP, PtoS or StoP)");
}

void Protocol::validate() const {
  if (postselected && direction != Direction::CtoP && direction != Direction::StoP) {
    throw std::invalid_argument("post-selection applies only to polarization receivers (CtoP, StoP)");
  }
}

std::string Protocol::name() const {
  std::string n(to_string(direction));
  if (postselected) n += "+post";
  return n;
}

std::string_view to_string(OutcomeLabel l) {
  switch (l) {
    case OutcomeLabel::B1: return "B1";
    case OutcomeLabel::B2: return "B2";
    case OutcomeLabel::B3: return "B3";
    case OutcomeLabel::B4: return "B4";
    case OutcomeLabel::O1: return "O1";
    case OutcomeLabel::O2: return "O2";
    case OutcomeLabel::O3: return "O3";
    case OutcomeLabel::O4: return "O4";
    case OutcomeLabel::Oe: return "Oe";
    case OutcomeLabel::PolarizationLoss: return "polarization_loss";
    case OutcomeLabel::Residual: return "both_detectors";
  }
  return "?";
}

std::string_view to_string(Correction c) {
  switch (c) {
    case Correction::Identity: return "identity";
    case Correction::Xc: return "X_c";
    case Correction::Zs: return "Z_s";
    case Correction::SigmaX: return "sigma_x";
    case Correction::SigmaY: return "sigma_y";
    case Correction::SigmaZ: return "sigma_z";
    case Correction::Discarded: return "discarded";
  }
  return "?";
}

StateVector bell_state_polarization(int i) {
  require_bell_index(i);
  const auto pol = ModeKind::polarization();
  const Eigen::Index hh = kH * 3 + kH, vv = kV * 3 + kV, hv = kH * 3 + kV, vh = kV * 3 + kH;
  switch (i) {
    case 1: return two_mode(pol, {{hh, 1.0}, {vv, 1.0}});
    case 2: return two_mode(pol, {{hh, 1.0}, {vv, -1.0}});
    case 3: return two_mode(pol, {{hv, 1.0}, {vh, 1.0}});
    default: return two_mode(pol, {{hv, 1.0}, {vh, -1.0}});
  }
}

StateVector bell_state_single_rail(int i) {
  require_bell_index(i);
  const auto q = ModeKind::qubit();
  switch (i) {
    case 1: return two_mode(q, {{0, 1.0}, {3, 1.0}});
    case 2: return two_mode(q, {{0, 1.0}, {3, -1.0}});
    case 3: return two_mode(q, {{2, 1.0}, {1, 1.0}});
    default: return two_mode(q, {{2, 1.0}, {1, -1.0}});
  }
}

StateVector bell_state_coherent(int i, double beta, int dim) {
  require_bell_index(i);
  if (!(beta > 0.0)) throw std::invalid_argument("coherent Bell states need beta > 0");
  const StateVector p = coherent_ket(beta, dim);
  const StateVector m = coherent_ket(-beta, dim);
  const double sign = (i == 1 || i == 3) ? 1.0 : -1.0;
  StateVector psi = (i <= 2) ? tensor(p, p) : tensor(p, m);
  psi.amplitudes += sign * ((i <= 2) ? tensor(m, m) : tensor(m, p)).amplitudes;
  psi.normalize();
  return psi;
}

Matrix ParityProjectors::dense(int which) const {
  if (which < 0 || which > 4) throw std::invalid_argument("projector index must be in 0..4");
  return diagonal[static_cast<std::size_t>(which)].cast<cplx>().asDiagonal();
}

ParityProjectors parity_projectors(int dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw std::invalid_argument("parity projectors need an even truncation, got " + std::to_string(dim));
  }
  const Eigen::Index d = dim;
  ParityProjectors out;
  for (auto& v : out.diagonal) v = RealVector::Zero(d * d);
  for (Eigen::Index n = 1; n < d; ++n) {
    const std::size_t odd = n % 2;
    out.diagonal[0 + odd](n * d) = 1.0;  // |n>|0>
    out.diagonal[2 + odd](n) = 1.0;      // |0>|n>
  }
  out.diagonal[4](0) = 1.0;
  return out;
}

PostSelection postselect_polarization(const DensityOperator& rho) {
  if (rho.layout.size() != 1 || rho.layout[0].tag() != ModeKind::Tag::Polarization3) {
    throw std::invalid_argument("post-selection expects a single polarization mode");
  }
  PostSelection out;
  out.output = {rho.layout, Matrix::Zero(3, 3)};
  out.kept_probability = std::clamp(1.0 - rho.matrix(kPolVacuum, kPolVacuum).real(), 0.0, 1.0);
  if (out.kept_probability > kNegligibleProbability) {
    out.output.matrix.topLeftCorner(2, 2) = rho.matrix.topLeftCorner(2, 2) / out.kept_probability;
  }
  return out;
}

TeleportMap TeleportMap::build(Direction direction, const ChannelParams& params, int dim,
                               ChannelSource source) {
  const bool coherent = direction == Direction::PtoC || direction == Direction::CtoP;
  if (coherent && dim % 2 != 0) {
    throw std::invalid_argument("coherent-state protocols need an even truncation");
  }
  TeleportMap map(direction, params, coherent ? dim : 2);
  const auto pol = ModeKind::polarization();
  const auto qubit = ModeKind::qubit();
  const auto fock = ModeKind::fock(coherent ? dim : 2);
  const double beta = params.beta();

  ModeKind input = pol, sender = pol, receiver = pol;
  switch (direction) {
    case Direction::PtoC:
      receiver = fock;
      map.input_basis_ = {basis_ket(pol, kH).amplitudes, basis_ket(pol, kV).amplitudes};
      map.target_basis_ = {coherent_ket(beta, dim).amplitudes, coherent_ket(-beta, dim).amplitudes};
      break;
    case Direction::CtoP:
      input = sender = fock;
      map.input_basis_ = {coherent_ket(beta, dim).amplitudes, coherent_ket(-beta, dim).amplitudes};
      map.target_basis_ = {basis_ket(pol, kH).amplitudes, basis_ket(pol, kV).amplitudes};
      map.splitter_.emplace(dim);
      break;
    case Direction::PtoS:
      receiver = qubit;
      map.input_basis_ = {basis_ket(pol, kH).amplitudes, basis_ket(pol, kV).amplitudes};
      map.target_basis_ = {basis_ket(qubit, 0).amplitudes, basis_ket(qubit, 1).amplitudes};
      break;
    case Direction::StoP:
      input = sender = qubit;
      map.input_basis_ = {basis_ket(qubit, 0).amplitudes, basis_ket(qubit, 1).amplitudes};
      map.target_basis_ = {basis_ket(pol, kH).amplitudes, basis_ket(pol, kV).amplitudes};
      break;
  }
  map.input_layout_ = ModeLayout{input};
  map.receiver_layout_ = ModeLayout{receiver};

  auto add_bra = [&](OutcomeLabel label, const StateVector& bra, bool success, Correction c) {
    map.outcomes_.push_back({label, success, c, bra.amplitudes, {}, correction_matrix(c, receiver)});
  };
  auto add_rows = [&](OutcomeLabel label, std::vector<Eigen::Index> rows, bool success, Correction c) {
    map.outcomes_.push_back({label, success, c, Vector(), std::move(rows), correction_matrix(c, receiver)});
  };
  auto polarization_loss_rows = [] {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index s = 0; s < 3; ++s)
        if (i == kPolVacuum || s == kPolVacuum) rows.push_back(i * 3 + s);
    return rows;
  };

  switch (direction) {
    case Direction::PtoC:
      add_bra(OutcomeLabel::B1, bell_state_polarization(1), true, Correction::Identity);
      add_bra(OutcomeLabel::B2, bell_state_polarization(2), false, Correction::Discarded);
      add_bra(OutcomeLabel::B3, bell_state_polarization(3), true, Correction::Xc);
      add_bra(OutcomeLabel::B4, bell_state_polarization(4), false, Correction::Discarded);
      add_rows(OutcomeLabel::PolarizationLoss, polarization_loss_rows(), false, Correction::Discarded);
      break;
    case Direction::PtoS:
      add_bra(OutcomeLabel::B1, bell_state_polarization(1), true, Correction::Identity);
      add_bra(OutcomeLabel::B2, bell_state_polarization(2), true, Correction::Zs);
      add_bra(OutcomeLabel::B3, bell_state_polarization(3), false, Correction::Discarded);
      add_bra(OutcomeLabel::B4, bell_state_polarization(4), false, Correction::Discarded);
      add_rows(OutcomeLabel::PolarizationLoss, polarization_loss_rows(), false, Correction::Discarded);
      break;
    case Direction::StoP:
      add_bra(OutcomeLabel::B1, bell_state_single_rail(1), false, Correction::Discarded);
      add_bra(OutcomeLabel::B2, bell_state_single_rail(2), false, Correction::Discarded);
      add_bra(OutcomeLabel::B3, bell_state_single_rail(3), true, Correction::SigmaX);
      add_bra(OutcomeLabel::B4, bell_state_single_rail(4), true, Correction::SigmaY);
      break;
    case Direction::CtoP: {
      const ParityProjectors proj = parity_projectors(dim);
      const OutcomeLabel labels[] = {OutcomeLabel::O1, OutcomeLabel::O2, OutcomeLabel::O3, OutcomeLabel::O4,
                                     OutcomeLabel::Oe};
      const Correction fixes[] = {Correction::Identity, Correction::SigmaZ, Correction::SigmaX, Correction::SigmaY,
                                  Correction::Discarded};
      for (std::size_t j = 0; j < 5; ++j) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index k = 0; k < proj.diagonal[j].size(); ++k)
          if (proj.diagonal[j](k) != 0.0) rows.push_back(k);
        add_rows(labels[j], std::move(rows), j < 4, fixes[j]);
      }
      std::vector<Eigen::Index> rest;
      for (Eigen::Index na = 1; na < dim; ++na)
        for (Eigen::Index nb = 1; nb < dim; ++nb) rest.push_back(na * dim + nb);
      add_rows(OutcomeLabel::Residual, std::move(rest), false, Correction::Discarded);
      break;
    }
  }

  map.channel_ = channel_ensemble(channel_state(direction, params, dim, source), sender.dim());

  std::array<std::vector<Matrix>, 2> v = {map.joint(map.input_basis_[0]), map.joint(map.input_basis_[1])};
  map.response_.resize(map.outcomes_.size());
  for (std::size_t x = 0; x < 2; ++x) {
    for (std::size_t y = 0; y < 2; ++y) {
      auto r = map.respond(v[x], v[y]);
      for (std::size_t j = 0; j < r.size(); ++j) map.response_[j][x][y] = std::move(r[j]);
    }
  }
  return map;
}

std::vector<Matrix> TeleportMap::joint(const Vector& in) const {
  std::vector<Matrix> out;
  out.reserve(channel_.size());
  for (const Matrix& phi : channel_) {
    const Eigen::Index ds = phi.rows();
    Matrix v(in.size() * ds, phi.cols());
    for (Eigen::Index i = 0; i < in.size(); ++i) v.middleRows(i * ds, ds) = in(i) * phi;
    if (splitter_) splitter_->apply(v);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Matrix> TeleportMap::respond(const std::vector<Matrix>& vx, const std::vector<Matrix>& vy) const {
  const Eigen::Index dr = receiver_layout_.total_dim();
  std::vector<Matrix> out;
  out.reserve(outcomes_.size());
  for (const Outcome& o : outcomes_) {
    Matrix r = Matrix::Zero(dr, dr);
    for (std::size_t i = 0; i < vx.size(); ++i) {
      if (o.bra.size() > 0) {
        const Matrix px = o.bra.adjoint() * vx[i];
        const Matrix py = o.bra.adjoint() * vy[i];
        r.noalias() += px.transpose() * py.conjugate();
      } else {
        const auto n = static_cast<Eigen::Index>(o.rows.size());
        Matrix sx(n, dr), sy(n, dr);
        for (Eigen::Index k = 0; k < n; ++k) {
          sx.row(k) = vx[i].row(o.rows[static_cast<std::size_t>(k)]);
          sy.row(k) = vy[i].row(o.rows[static_cast<std::size_t>(k)]);
        }
        r.noalias() += sx.transpose() * sy.conjugate();
      }
    }
    out.push_back(o.op * r * o.op.adjoint());
  }
  return out;
}

TeleportResult TeleportMap::assemble(const std::vector<Matrix>& branch, const StateVector& target) const {
  const Eigen::Index dr = receiver_layout_.total_dim();
  TeleportResult res;
  res.direction = direction_;
  res.target = target;
  Matrix success = Matrix::Zero(dr, dr);
  for (std::size_t j = 0; j < outcomes_.size(); ++j) {
    const Matrix m = 0.5 * (branch[j] + branch[j].adjoint());
    TeleportOutcome o;
    o.label = outcomes_[j].label;
    o.success = outcomes_[j].success;
    o.correction = outcomes_[j].correction;
    o.probability = std::max(0.0, m.trace().real());
    o.output = {receiver_layout_, o.probability > kNegligibleProbability ? Matrix(m / o.probability)
                                                                        : Matrix(Matrix::Zero(dr, dr))};
    if (o.success) success += m;
    res.outcomes.push_back(std::move(o));
  }
  res.success_probability = std::max(0.0, success.trace().real());
  const bool any = res.success_probability > kNegligibleProbability;
  res.output = {receiver_layout_, any ? Matrix(success / res.success_probability) : Matrix(Matrix::Zero(dr, dr))};
  res.fidelity = any ? fidelity_pure(target, res.output) : 0.0;

  if (receiver_layout_[0].tag() == ModeKind::Tag::Polarization3 && any) {
    PostSelection ps = postselect_polarization(res.output);
    PostSelected post;
    post.kept_probability = ps.kept_probability;
    post.success_probability = res.success_probability * ps.kept_probability * kPostselectionBellFactor;
    post.fidelity = ps.kept_probability > kNegligibleProbability ? fidelity_pure(target, ps.output) : 0.0;
    post.output = std::move(ps.output);
    res.postselected = std::move(post);
  }
  return res;
}

namespace {

std::array<cplx, 2> input_coefficients(const BlochInput& in, const std::array<Vector, 2>& basis) {
  std::array<cplx, 2> c = {in.a(), in.b()};
  const double n = (c[0] * basis[0] + c[1] * basis[1]).norm();
  if (!(n > 1e-12)) throw std::domain_error("input superposition vanishes in this basis");
  c[0] /= n;
  c[1] /= n;
  return c;
}

}  // namespace

StateVector TeleportMap::input_ket(const BlochInput& input) const {
  const auto c = input_coefficients(input, input_basis_);
  return {input_layout_, c[0] * input_basis_[0] + c[1] * input_basis_[1]};
}

StateVector TeleportMap::target_ket(const BlochInput& input) const {
  const auto c = input_coefficients(input, target_basis_);
  return {receiver_layout_, c[0] * target_basis_[0] + c[1] * target_basis_[1]};
}

TeleportResult TeleportMap::evaluate(const BlochInput& input) const {
  const auto c = input_coefficients(input, input_basis_);
  const Eigen::Index dr = receiver_layout_.total_dim();
  std::vector<Matrix> branch(outcomes_.size(), Matrix::Zero(dr, dr));
  for (std::size_t j = 0; j < outcomes_.size(); ++j)
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t y = 0; y < 2; ++y) branch[j] += (c[x] * std::conj(c[y])) * response_[j][x][y];
  return assemble(branch, target_ket(input));
}

TeleportResult TeleportMap::evaluate_ket(const StateVector& input, const StateVector& target) const {
  if (input.layout != input_layout_) throw std::invalid_argument("input ket layout does not match the protocol");
  if (target.layout != receiver_layout_) throw std::invalid_argument("target layout does not match the receiver");
  const auto v = joint(input.amplitudes);
  return assemble(respond(v, v), target);
}

TeleportResult teleport_p_to_c(const BlochInput& input, const ChannelParams& params, int dim,
                               ChannelSource source) {
  return TeleportMap::build(Direction::PtoC, params, dim, source).evaluate(input);
}

TeleportResult teleport_c_to_p(const BlochInput& input, const ChannelParams& params, int dim,
                               ChannelSource source) {
  return TeleportMap::build(Direction::CtoP, params, dim, source).evaluate(input);
}

TeleportResult teleport_p_to_s(const BlochInput& input, const ChannelParams& params, ChannelSource source) {
  return TeleportMap::build(Direction::PtoS, params, 2, source).evaluate(input);
}

TeleportResult teleport_s_to_p(const BlochInput& input, const ChannelParams& params, ChannelSource source) {
  return TeleportMap::build(Direction::StoP, params, 2, source).evaluate(input);
}

double pipeline_fidelity(const TeleportResult& r, const Protocol& p) {
  p.validate();
  if (!p.postselected) return r.fidelity;
  if (!r.postselected) throw std::invalid_argument("result carries no post-selected branch");
  return r.postselected->fidelity;
}

double pipeline_success_probability(const TeleportResult& r, const Protocol& p) {
  p.validate();
  if (!p.postselected) return r.success_probability;
  if (!r.postselected) throw std::invalid_argument("result carries no post-selected branch");
  return r.postselected->success_probability;
}

}  // namespace hybridtele
