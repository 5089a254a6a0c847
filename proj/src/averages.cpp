#include "hybridtele/averages.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hybridtele {

namespace {

// Conditional means over the circle of fixed u = sin(theta) cos(phi):
//   <|a|^4> = (3 - u^2)/8, <|a|^2|b|^2> = (1 + u^2)/8,
//   <a^2 b*^2 + c.c.> = (3u^2 - 1)/4.
// Every sphere average below reduces to <p(u)/(1 + x u)> with u uniform on
// [-1, 1].
struct Poly {
  double p0 = 0.0, p1 = 0.0, p2 = 0.0;
};

Poly moment_poly(int kind) {
  switch (kind) {
    case 1: return {3.0 / 8.0, 0.0, -1.0 / 8.0};
    case 2: return {1.0 / 8.0, 0.0, 1.0 / 8.0};
    case 3: return {0.0, 1.0, 0.0};
    case 4: return {-0.25, 0.0, 0.75};
    default: throw std::invalid_argument("moment kind must be in 1..4, got " + std::to_string(kind));
  }
}

constexpr double kSeriesBelow = 0.1;
constexpr int kMaxTerms = 4000;

// Coefficient of x^n in <p(u)/(1 + x u)>.
double series_coeff(const Poly& p, int n) {
  if (n % 2 == 0) return p.p0 / (n + 1) + p.p2 / (n + 3);
  return -p.p1 / (n + 2);
}

double poly_moment_series(const Poly& p, double x) {
  double sum = 0.0, xn = 1.0;
  for (int n = 0; n < kMaxTerms; ++n) {
    sum += xn * series_coeff(p, n);
    xn *= x;
    if (xn < 1e-18) break;
  }
  return sum;
}

double atanh_over(double z) {
  if (std::abs(z) < 1e-4) {
    const double z2 = z * z;
    return 1.0 + z2 / 3.0 + z2 * z2 / 5.0;
  }
  return std::atanh(z) / z;
}

double poly_moment(const Poly& p, double x) {
  if (x < kSeriesBelow) return poly_moment_series(p, x);
  const double l = std::atanh(x) / x;
  return p.p0 * l + p.p1 * (1.0 - l) / x - p.p2 * (1.0 - l) / (x * x);
}

// Divided difference [h(y1) - h(y2)]/(y1 - y2) of h(y) = y <p(u)/(1 + y u)>,
// with y_i = exp(-x_i).
double divided_difference(const Poly& p, double x1, double x2) {
  const double y1 = std::exp(-x1), y2 = std::exp(-x2);
  const double hi = std::max(y1, y2), lo = std::min(y1, y2);

  if (hi <= 0.5) {
    // h = sum_n c_n y^{n+1}; [y^k] = sum_j y1^j y2^{k-1-j}.
    double sum = 0.0, dk = 1.0, y2pow = 1.0;
    for (int n = 0; n < kMaxTerms; ++n) {
      sum += series_coeff(p, n) * dk;
      y2pow *= y2;
      dk = y1 * dk + y2pow;
      if (dk < 1e-18) break;
    }
    return sum;
  }

  if (lo >= 0.25) {
    // h = p0 A - p1 A/y + p2 A/y^2 - p2/y + p1 with A = artanh, by Leibniz.
    const double one_minus_y1y2 = -std::expm1(-(x1 + x2));
    const double diff = y2 * std::expm1(x2 - x1);
    const double dd_a = atanh_over(diff / one_minus_y1y2) / one_minus_y1y2;
    const double a1 = std::atanh(y1);
    const double dd_inv = -1.0 / (y1 * y2);
    const double dd_inv2 = -(y1 + y2) / (y1 * y1 * y2 * y2);
    const double dd_a_y = dd_a / y2 + a1 * dd_inv;
    const double dd_a_y2 = dd_a / (y2 * y2) + a1 * dd_inv2;
    return p.p0 * dd_a - p.p1 * dd_a_y + p.p2 * dd_a_y2 - p.p2 * dd_inv;
  }

  // Well separated (gap > 0.25): the direct quotient loses at most a few bits.
  return (y1 * poly_moment(p, y1) - y2 * poly_moment(p, y2)) / (y1 - y2);
}

template <std::size_t K, typename F>
std::array<double, K> average_nodes(F&& f, const QuadratureSpec& spec) {
  spec.validate();
  const GaussLegendre gl = gauss_legendre(spec.n_theta);
  const std::size_t n_phi = static_cast<std::size_t>(spec.n_phi);
  const std::size_t total = gl.nodes.size() * n_phi;
  std::array<std::vector<double>, K> buffers;
  for (auto& b : buffers) b.assign(total, 0.0);
  const long long n = static_cast<long long>(total);
#pragma omp parallel for schedule(static)
  for (long long idx = 0; idx < n; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / n_phi;
    const std::size_t k = static_cast<std::size_t>(idx) % n_phi;
    const BlochInput in{std::acos(gl.nodes[i]), 2.0 * std::numbers::pi * static_cast<double>(k) / spec.n_phi};
    const double w = 0.5 * gl.weights[i] / spec.n_phi;
    const std::array<double, K> v = f(in);
    for (std::size_t j = 0; j < K; ++j) buffers[j][static_cast<std::size_t>(idx)] = w * v[j];
  }
  std::array<double, K> out{};
  for (std::size_t j = 0; j < K; ++j) out[j] = pairwise_sum(buffers[j]);
  return out;
}

}  // namespace

void QuadratureSpec::validate() const {
  if (n_theta < 2 || n_phi < 2) throw std::invalid_argument("quadrature needs at least 2 nodes per axis");
}

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre order must be >= 1");
  GaussLegendre gl;
  gl.nodes.resize(static_cast<std::size_t>(n));
  gl.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(n - 1 - i);
    gl.nodes[lo] = -x;
    gl.nodes[hi] = x;
    gl.weights[lo] = w;
    gl.weights[hi] = w;
  }
  return gl;
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double bloch_average(const SphereFunction& f, const QuadratureSpec& spec) {
  return average_nodes<1>([&](const BlochInput& in) { return std::array<double, 1>{f(in)}; }, spec)[0];
}

double bloch_average_reference(const SphereFunction& f, const QuadratureSpec& spec) {
  spec.validate();
  const GaussLegendre gl = gauss_legendre(spec.n_theta);
  double total = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    double ring = 0.0;
    for (int k = 0; k < spec.n_phi; ++k) {
      ring += f(BlochInput{std::acos(gl.nodes[i]), 2.0 * std::numbers::pi * k / spec.n_phi});
    }
    total += 0.5 * gl.weights[i] * ring / spec.n_phi;
  }
  return total;
}

double moment_integral(int kind, double x, Form form) {
  const Poly p = moment_poly(kind);
  if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("moment integral needs 0 <= x < 1");
  const double corrected = poly_moment(p, x);
  if (form == Form::Corrected || kind == 2 || kind == 3) return corrected;
  if (kind == 1) {
    // 3x^3 in place of 3x^2: adds 3(x - 1) artanh(x)/(8 x^2), singular at 0.
    return corrected + 3.0 * (x - 1.0) * std::atanh(x) / (8.0 * x * x);
  }
  // kind 4: adds (1 - x^2) artanh(x)/(4x^3) - 1/(4x^2).
  if (x < kSeriesBelow) {
    double sum = 0.0, xp = 1.0;
    for (int k = 1; k < kMaxTerms && xp > 1e-18; ++k, xp *= x * x) sum -= xp / (2.0 * (4.0 * k * k - 1.0));
    return corrected + sum;
  }
  return corrected + (1.0 - x * x) * std::atanh(x) / (4.0 * x * x * x) - 1.0 / (4.0 * x * x);
}

double g_functional(int kind, const ChannelParams& p, Form form) {
  moment_poly(kind);
  const auto f = p.factors();
  if (f.one_minus_s == 0.0 || f.one_minus_q == 0.0) return 0.0;
  return moment_integral(kind, f.q * f.s, form) - moment_integral(kind, f.s, form);
}

double sp_moment(int which, double t) {
  if (which < 1 || which > 3) throw std::invalid_argument("sp_moment index must be in 1..3");
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("decay parameter t must lie in (0, 1]");
  const double c1 = t * t, c2 = 2.0 - t * t;
  const double d = c1 - c2;
  const double ratio = -d / c2;
  if (std::abs(ratio) < 0.25) {
    double sum = 0.0, rk = 1.0;
    for (int k = 0; k < kMaxTerms && std::abs(rk) > 1e-18; ++k, rk *= ratio) {
      double c = 0.0;
      if (which == 1) c = 1.0 / (k + 3.0);
      if (which == 2) c = 2.0 / ((k + 1.0) * (k + 2.0) * (k + 3.0));
      if (which == 3) c = 1.0 / ((k + 2.0) * (k + 3.0));
      sum += rk * c;
    }
    return sum / c2;
  }
  const double l = std::log(c1 / c2);
  const double den = 2.0 * d * d * d;
  if (which == 1) return (c1 * c1 - 4.0 * c1 * c2 + 3.0 * c2 * c2 + 2.0 * c2 * c2 * l) / den;
  if (which == 2) return (-3.0 * c1 * c1 + 4.0 * c1 * c2 - c2 * c2 + 2.0 * c1 * c1 * l) / den;
  return (c1 * c1 - c2 * c2 - 2.0 * c1 * c2 * l) / den;
}

namespace {

double avg_fidelity_pc(const ChannelParams& p, Form form) {
  const auto f = p.factors();
  const double a2 = p.alpha() * p.alpha();
  if (form == Form::Legacy) {
    const double s = f.s, q = f.q;
    const double sum = 2.0 * g_functional(1, p, form) + (2.0 * s * s + 2.0 * q) * g_functional(2, p, form) +
                       (s * q + s) * g_functional(3, p, form) + s * s * q * g_functional(4, p, form);
    return q / (q - 1.0) * sum;
  }
  if (a2 == 0.0) return 1.0;
  // With D(u) = (1 + Su)(1 + QSu) and the fidelity numerator
  //   P(u) = 2|a|^4 + (2S^2 + 2Q)|a|^2|b|^2 + (S + QS) u + QS^2 (a^2 b*^2 + c.c.),
  // the conditional means give D - P = (1 - S^2)(1 - Q)(1 + u^2)/4, so the
  // deficit 1 - F carries the small prefactor explicitly.
  const double one_minus_s2 = -std::expm1(-4.0 * p.t2() * a2);
  const double m = divided_difference(Poly{1.0, 0.0, 1.0}, 2.0 * a2, 2.0 * p.t2() * a2);
  return 1.0 - 0.25 * one_minus_s2 * f.one_minus_q * m;
}

}  // namespace

double avg_fidelity(const Protocol& protocol, const ChannelParams& p, Form form) {
  protocol.validate();
  const double t = p.t(), t2 = p.t2();
  const double q = p.factors().q;
  switch (protocol.direction) {
    case Direction::PtoC:
      return avg_fidelity_pc(p, form);
    case Direction::CtoP:
      return protocol.postselected ? (2.0 + q) / 3.0 : t2 * (2.0 + q) / 3.0;
    case Direction::PtoS:
      return (t2 + 2.0 * t + 3.0) / 6.0;
    case Direction::StoP: {
      const double a1 = sp_moment(1, t), a2 = sp_moment(2, t), a3 = sp_moment(3, t);
      const double mix = 1.0 + 2.0 * t - t2;
      if (protocol.postselected) return t2 * a1 + a2 + mix * a3;
      return t2 * t2 * a1 + t2 * a2 + t2 * mix * a3;
    }
  }
  return 0.0;
}

double avg_success_probability(const Protocol& protocol, const ChannelParams& p) {
  protocol.validate();
  const double t2 = p.t2();
  const double post = protocol.postselected ? 0.5 * t2 : 1.0;
  switch (protocol.direction) {
    case Direction::PtoC:
    case Direction::PtoS:
      return 0.5 * t2;
    case Direction::CtoP: {
      const auto f = p.factors();
      if (f.one_minus_s == 0.0) return 0.0;
      // (1 - S) artanh(S)/S
      const double at = f.s > 0.5 ? 0.5 * (std::log1p(f.s) - std::log(f.one_minus_s)) / f.s : atanh_over(f.s);
      const double base = f.one_minus_s * at;
      return post * base;
    }
    case Direction::StoP:
      return post * 0.5;
  }
  return 0.0;
}

double classical_limit(Direction direction, const ChannelParams& p, Form form) {
  if (direction != Direction::PtoC) return 2.0 / 3.0;
  const auto f = p.factors();
  const double s = f.s;
  if (f.one_minus_s == 0.0) return 1.0;
  if (form == Form::Legacy) {
    return (s + 3.0 * s * s * s + (1.0 - s * s * s * s) * std::atanh(s)) / (4.0 * s * s * s);
  }
  // 1 - F_cl(u) averages to (1 - S^2)(1 + u^2)/(4(1 + Su)).
  const double one_minus_s2 = -std::expm1(-4.0 * p.t2() * p.alpha() * p.alpha());
  return 1.0 - 0.25 * one_minus_s2 * poly_moment(Poly{1.0, 0.0, 1.0}, s);
}

double classical_fidelity_pc(const BlochInput& in, const ChannelParams& p) {
  const double s = p.factors().s;
  const double a2 = in.a2(), b2 = in.b2(), u = in.u();
  return (a2 * a2 + b2 * b2 + 2.0 * s * s * a2 * b2 + s * u) / (1.0 + s * u);
}

double fidelity_gap_large_alpha(const ChannelParams& p) {
  return (1.0 - p.t2()) * (2.0 + p.factors().q) / 3.0;
}

double avg_fidelity_quadrature(const Protocol& protocol, const ChannelParams& p, const QuadratureSpec& spec,
                               Form form) {
  protocol.validate();
  return bloch_average([&](const BlochInput& in) { return per_input_fidelity(protocol, in, p, form); }, spec);
}

double avg_success_probability_quadrature(const Protocol& protocol, const ChannelParams& p,
                                          const QuadratureSpec& spec) {
  protocol.validate();
  return bloch_average([&](const BlochInput& in) { return per_input_success_probability(protocol, in, p); }, spec);
}

double classical_limit_quadrature(const ChannelParams& p, const QuadratureSpec& spec) {
  return bloch_average([&](const BlochInput& in) { return classical_fidelity_pc(in, p); }, spec);
}

PipelineAverages pipeline_averages(Direction direction, const ChannelParams& p, int dim, const QuadratureSpec& spec,
                                   ChannelSource source) {
  const TeleportMap map = TeleportMap::build(direction, p, dim, source);
  const auto sums = average_nodes<4>(
      [&](const BlochInput& in) {
        const TeleportResult r = map.evaluate(in);
        std::array<double, 4> v{r.fidelity, r.success_probability, 0.0, 0.0};
        if (r.postselected) {
          v[2] = r.postselected->fidelity;
          v[3] = r.postselected->success_probability;
        }
        return v;
      },
      spec);
  PipelineAverages out;
  out.fidelity = sums[0];
  out.success_probability = sums[1];
  if (direction == Direction::CtoP || direction == Direction::StoP) {
    out.post_fidelity = sums[2];
    out.post_success_probability = sums[3];
  }
  return out;
}

}  // namespace hybridtele
