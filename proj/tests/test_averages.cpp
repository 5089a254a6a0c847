#include "hybridtele/averages.hpp"

#include <gtest/gtest.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

using namespace hybridtele;

namespace {

const Protocol kAll[] = {{Direction::PtoC}, {Direction::CtoP}, {Direction::CtoP, true},
                         {Direction::PtoS}, {Direction::StoP}, {Direction::StoP, true}};

// <p(u)/(1 + x u)> with u uniform on [-1, 1] by composite Simpson; the
// conditional means over phi at fixed u are |a|^4 -> (3 - u^2)/8,
// |a|^2|b|^2 -> (1 + u^2)/8, a^2 b*^2 + c.c. -> (3u^2 - 1)/4.
double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double moment_oracle(int kind, double x) {
  auto num = [kind](double u) {
    switch (kind) {
      case 1: return (3.0 - u * u) / 8.0;
      case 2: return (1.0 + u * u) / 8.0;
      case 3: return u;
      default: return (3.0 * u * u - 1.0) / 4.0;
    }
  };
  return 0.5 * simpson([&](double u) { return num(u) / (1.0 + x * u); }, -1.0, 1.0);
}

template <typename F>
double with_threads(int n, F&& f) {
  const int before = omp_get_max_threads();
  omp_set_num_threads(n);
  const double v = f();
  omp_set_num_threads(before);
  return v;
}

}  // namespace

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  const auto gl = gauss_legendre(16);
  double w = 0.0;
  for (double v : gl.weights) w += v;
  EXPECT_NEAR(w, 2.0, 1e-14);
  for (int k = 0; k <= 31; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * std::pow(gl.nodes[i], k);
    EXPECT_NEAR(s, k % 2 ? 0.0 : 2.0 / (k + 1), 1e-14) << k;
  }
  EXPECT_TRUE(std::is_sorted(gl.nodes.begin(), gl.nodes.end()));
}

TEST(Quadrature, StandardBlochMoments) {
  EXPECT_NEAR(bloch_average([](const BlochInput&) { return 1.0; }), 1.0, 1e-14);
  EXPECT_NEAR(bloch_average([](const BlochInput& in) { return in.u(); }), 0.0, 1e-13);
  EXPECT_NEAR(bloch_average([](const BlochInput& in) { return in.a2() * in.a2(); }), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(bloch_average([](const BlochInput& in) { return in.a2() * in.b2(); }), 1.0 / 6.0, 1e-14);
  EXPECT_NEAR(bloch_average([](const BlochInput& in) {
                const cplx z = in.a() * std::conj(in.b());
                return 2.0 * (z * z).real();
              }),
              0.0, 1e-14);
}

TEST(Quadrature, ParallelIsThreadCountIndependent) {
  auto f = [](const BlochInput& in) { return std::exp(in.u()) * in.a2() + std::sin(3.0 * in.phi); };
  for (const QuadratureSpec spec : {QuadratureSpec{}, QuadratureSpec{7, 13}}) {
    // Summation orders differ, so agreement is to rounding; the parallel
    // result itself must not depend on the thread count.
    const double one = with_threads(1, [&] { return bloch_average(f, spec); });
    const double four = with_threads(4, [&] { return bloch_average(f, spec); });
    EXPECT_EQ(one, four);
    EXPECT_NEAR(one, bloch_average_reference(f, spec), 1e-14);
  }
  EXPECT_THROW((QuadratureSpec{0, 4}.validate()), std::invalid_argument);
}

TEST(Quadrature, PairwiseSumOfSmallSet) {
  const double v[] = {1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(pairwise_sum(v), pairwise_sum(v));
  const double w[] = {0.5, 0.25, 0.125};
  EXPECT_EQ(pairwise_sum(w), 0.875);
}

TEST(Moments, MatchIndependentQuadrature) {
  for (int kind = 1; kind <= 4; ++kind) {
    for (double x : {0.0, 1e-4, 0.05, 0.099, 0.101, 0.3, 0.5, 0.8, 0.95}) {
      EXPECT_NEAR(moment_integral(kind, x), moment_oracle(kind, x), 1e-11) << kind << " " << x;
    }
  }
}

TEST(Moments, Limits) {
  EXPECT_NEAR(moment_integral(1, 0.0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(moment_integral(2, 0.0), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(moment_integral(3, 0.0), 0.0, 1e-15);
  EXPECT_NEAR(moment_integral(4, 0.0), 0.0, 1e-15);
  EXPECT_NEAR(moment_integral(3, 0.5), 2.0 - std::atanh(0.5) / 0.25, 1e-14);
  EXPECT_NEAR(moment_integral(3, 0.5), -0.197225, 1e-6);
  EXPECT_THROW(moment_integral(1, 1.0), std::domain_error);
  EXPECT_THROW(moment_integral(1, -0.1), std::domain_error);
  EXPECT_THROW(moment_integral(5, 0.2), std::invalid_argument);
}

TEST(Moments, LegacyFormsDisagree) {
  // Fourth moment: the printed form differs by (1 - x^2) artanh(x)/(4x^3) - 1/(4x^2)
  // and tends to -1/6.
  for (double x : {0.2, 0.5, 0.9}) {
    const double d = moment_integral(4, x, Form::Legacy) - moment_integral(4, x);
    EXPECT_NEAR(d, (1 - x * x) * std::atanh(x) / (4 * x * x * x) - 1 / (4 * x * x), 1e-12);
  }
  EXPECT_NEAR(moment_integral(4, 1e-2, Form::Legacy), -1.0 / 6.0, 1e-4);
  EXPECT_GT(std::abs(moment_integral(1, 0.5, Form::Legacy) - moment_oracle(1, 0.5)), 0.1);
}

TEST(Moments, GFunctionalVanishesWithoutLoss) {
  const auto p = ChannelParams::from_t(1.0, 0.8);
  for (int k = 1; k <= 4; ++k) EXPECT_EQ(g_functional(k, p), 0.0);
  const auto q = ChannelParams::from_t(std::sqrt(0.5), 1.0);
  const auto f = q.factors();
  EXPECT_NEAR(g_functional(3, q), moment_oracle(3, f.q * f.s) - moment_oracle(3, f.s), 1e-10);
}

TEST(SpMoments, ContinuousAtNoLoss) {
  EXPECT_NEAR(sp_moment(1, 1.0), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(sp_moment(2, 1.0), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(sp_moment(3, 1.0), 1.0 / 6.0, 1e-14);
  for (double t : {0.3, 0.9, 0.9999, 1.0 - 1e-9}) {
    const double c1 = t * t, c2 = 2.0 - t * t;
    auto avg = [&](int which) {
      return 0.5 * simpson(
                       [&](double c) {
                         const double a2 = 0.5 * (1 + c), b2 = 1 - a2;
                         const double num = which == 1 ? a2 * a2 : which == 2 ? b2 * b2 : a2 * b2;
                         return num / (c1 * a2 + c2 * b2);
                       },
                       -1.0, 1.0);
    };
    for (int k = 1; k <= 3; ++k) EXPECT_NEAR(sp_moment(k, t), avg(k), 1e-12) << t << " " << k;
  }
}

TEST(Averages, KnownValues) {
  EXPECT_NEAR(avg_fidelity(kAll[1], ChannelParams::from_t(1.0, 1.0)), 1.0, 1e-15);
  EXPECT_NEAR(avg_fidelity(kAll[3], ChannelParams::from_t(0.5, 1.0)), 0.708333333333, 1e-12);
  EXPECT_NEAR(avg_fidelity(kAll[1], ChannelParams::from_t(0.8, 1.0)), 0.64 * (2.0 + std::exp(-0.72)) / 3.0, 1e-15);
  EXPECT_NEAR(avg_fidelity(kAll[1], ChannelParams::from_t(0.8, 1.0)), 0.53051, 1e-5);
  EXPECT_NEAR(avg_fidelity(kAll[4], ChannelParams::from_t(1.0, 1.0)), 1.0, 1e-14);
  EXPECT_NEAR(avg_fidelity(kAll[0], ChannelParams::from_t(1.0, 1.3)), 1.0, 1e-14);
}

TEST(Averages, SuccessProbabilities) {
  EXPECT_EQ(avg_success_probability(kAll[0], ChannelParams::from_t(1.0, 0.3)), 0.5);
  EXPECT_EQ(avg_success_probability(kAll[4], ChannelParams::from_t(0.3, 1.0)), 0.5);
  // S = 0.5: (1 - S) artanh(S)/S.
  const auto p = ChannelParams::from_t(1.0, std::sqrt(0.5 * std::log(2.0)));
  EXPECT_NEAR(p.factors().s, 0.5, 1e-15);
  EXPECT_NEAR(avg_success_probability(kAll[1], p), std::atanh(0.5), 1e-14);
  EXPECT_NEAR(avg_success_probability(kAll[1], p), 0.549306, 1e-6);
  EXPECT_LT(avg_success_probability(kAll[1], ChannelParams::from_t(1.0, 1e-5)), 1e-8);
  for (double r : {0.1, 0.5, 0.9}) {
    const auto q = ChannelParams::from_r(r, 0.7);
    EXPECT_EQ(avg_success_probability(kAll[2], q), 0.5 * q.t2() * avg_success_probability(kAll[1], q));
  }
}

TEST(Averages, ClosedFormsMatchQuadrature) {
  for (double a : {0.1, 0.54, 1.0, 2.0, 10.0}) {
    for (double r : {0.0, 0.25, 0.5, 0.75, 0.95}) {
      const auto p = ChannelParams::from_r(r, a);
      for (const auto& pr : kAll) {
        EXPECT_NEAR(avg_fidelity(pr, p), avg_fidelity_quadrature(pr, p), 1e-8) << pr.name() << " " << a << " " << r;
        EXPECT_NEAR(avg_success_probability(pr, p), avg_success_probability_quadrature(pr, p), 1e-8) << pr.name();
      }
      EXPECT_NEAR(classical_limit(Direction::PtoC, p), classical_limit_quadrature(p), 1e-8);
    }
  }
}

TEST(Averages, PtoCMatchesIndependentOneDimensionalIntegral) {
  // F(u) averaged over phi: 1 - (1 - S^2)(1 - Q)(1 + u^2)/(4 (1 + Su)(1 + QSu)).
  for (double a : {0.05, 0.3, 1.0}) {
    for (double r : {0.2, 0.7}) {
      const auto p = ChannelParams::from_r(r, a);
      const auto f = p.factors();
      const double want = 0.5 * simpson(
                                    [&](double u) {
                                      return 1.0 - (1 - f.s * f.s) * f.one_minus_q * (1 + u * u) /
                                                       (4.0 * (1 + f.s * u) * (1 + f.q * f.s * u));
                                    },
                                    -1.0, 1.0, 200000);
      EXPECT_NEAR(avg_fidelity(kAll[0], p), want, 1e-11) << a << " " << r;
    }
  }
}

TEST(Averages, StableForTinyAmplitudes) {
  // The deficit is quadratic in the amplitude; a cancellation in the closed
  // form would show up as noise in the ratio long before it reaches 1e-7.
  double ratio[3];
  const double alphas[] = {1e-7, 1e-5, 1e-4};
  for (int i = 0; i < 3; ++i) {
    const double f = avg_fidelity(kAll[0], ChannelParams::from_r(0.6, alphas[i]));
    ASSERT_TRUE(std::isfinite(f));
    EXPECT_LE(f, 1.0);
    ratio[i] = (1.0 - f) / (alphas[i] * alphas[i]);
  }
  EXPECT_GT(ratio[1], 0.0);
  EXPECT_NEAR(ratio[1] / ratio[2], 1.0, 1e-4);
  EXPECT_NEAR(ratio[0] / ratio[2], 1.0, 0.1);
  double prev = 0.0;
  for (double a : {1e-3, 3e-3, 1e-2, 0.1}) {
    const auto p = ChannelParams::from_r(0.6, a);
    const double f = avg_fidelity(kAll[0], p);
    EXPECT_LE(f, 1.0);
    EXPECT_GE(f, classical_limit(Direction::PtoC, p) - 1e-15);
    EXPECT_GT(1.0 - f, prev);  // the deficit grows with the amplitude
    prev = 1.0 - f;
  }
}

TEST(ClassicalLimit, Limits) {
  EXPECT_NEAR(classical_limit(Direction::PtoC, ChannelParams::from_t(1.0, 6.0)), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(classical_limit(Direction::PtoC, ChannelParams::from_t(1.0, 1e-6)), 1.0, 1e-10);
  EXPECT_EQ(classical_limit(Direction::CtoP, ChannelParams::from_t(0.5, 1.0)), 2.0 / 3.0);
  const auto p = ChannelParams::from_t(1.0, std::sqrt(0.5 * std::log(2.0)));
  const double s = 0.5;
  const double printed_fixed = (s + 3 * s * s * s - (1 - std::pow(s, 4)) * std::atanh(s)) / (4 * s * s * s);
  EXPECT_NEAR(classical_limit(Direction::PtoC, p), printed_fixed, 1e-14);
  EXPECT_NEAR(classical_limit(Direction::PtoC, p), classical_limit_quadrature(p), 1e-10);
  EXPECT_GT(classical_limit(Direction::PtoC, p, Form::Legacy) - classical_limit(Direction::PtoC, p), 1.0);
}

TEST(Gap, LargeAmplitudeFormula) {
  EXPECT_EQ(fidelity_gap_large_alpha(ChannelParams::from_t(1.0, 10.0)), 0.0);
  const auto p = ChannelParams::from_t(std::sqrt(0.99), 10.0);
  EXPECT_NEAR(avg_fidelity(kAll[0], p) - avg_fidelity(kAll[1], p), fidelity_gap_large_alpha(p), 1e-3);
  EXPECT_NEAR(fidelity_gap_large_alpha(ChannelParams::from_t(1e-9, 10.0)), 2.0 / 3.0, 1e-9);
}

TEST(Averages, PipelineQuadratureAgrees) {
  const auto p = ChannelParams::from_t(std::sqrt(0.5), 1.0);
  const QuadratureSpec spec{24, 48};
  for (const Direction d : {Direction::PtoC, Direction::CtoP, Direction::PtoS, Direction::StoP}) {
    const bool coh = d == Direction::PtoC || d == Direction::CtoP;
    const auto avg = pipeline_averages(d, p, coh ? 22 : 2, spec);
    const Protocol pr{d};
    EXPECT_NEAR(avg.fidelity, avg_fidelity_quadrature(pr, p, spec), 1e-10) << to_string(d);
    EXPECT_NEAR(avg.success_probability, avg_success_probability_quadrature(pr, p, spec), 1e-10);
    if (!coh || d == Direction::CtoP) {
      if (d == Direction::PtoS) continue;
      const Protocol post{d, true};
      EXPECT_NEAR(*avg.post_fidelity, avg_fidelity_quadrature(post, p, spec), 1e-10);
      EXPECT_NEAR(*avg.post_success_probability, avg_success_probability_quadrature(post, p, spec), 1e-10);
    }
  }
}

TEST(Orderings, HoldOnTheGrid) {
  for (double a : {0.1, 1.0, 2.0, 10.0}) {
    for (int k = 0; k < 20; ++k) {
      const auto p = ChannelParams::from_r(0.05 * k, a);
      const double fpc = avg_fidelity(kAll[0], p);
      EXPECT_GE(fpc, avg_fidelity(kAll[1], p));
      EXPECT_GE(fpc, classical_limit(Direction::PtoC, p));
      EXPECT_GE(avg_fidelity(kAll[3], p), avg_fidelity(kAll[4], p));
    }
  }
}
