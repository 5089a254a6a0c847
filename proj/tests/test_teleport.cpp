#include "hybridtele/closed_forms.hpp"
#include "hybridtele/teleport.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hybridtele;

namespace {

std::vector<BlochInput> random_inputs(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ph(0.0, 2.0 * std::numbers::pi);
  std::vector<BlochInput> out;
  for (int i = 0; i < n; ++i) out.push_back({std::acos(u(rng)), ph(rng)});
  return out;
}

const Protocol kAll[] = {{Direction::PtoC}, {Direction::CtoP}, {Direction::CtoP, true},
                         {Direction::PtoS}, {Direction::StoP}, {Direction::StoP, true}};

bool coherent(Direction d) { return d == Direction::PtoC || d == Direction::CtoP; }

}  // namespace

TEST(Input, BlochParameterization) {
  const BlochInput in{1.1, 0.7};
  EXPECT_NEAR(in.a2() + in.b2(), 1.0, 1e-15);
  EXPECT_NEAR(in.u(), std::sin(1.1) * std::cos(0.7), 1e-15);
  EXPECT_NEAR(2.0 * (in.a() * std::conj(in.b())).real(), in.u(), 1e-15);
}

TEST(Direction, ParsesSpellings) {
  EXPECT_EQ(parse_direction("PtoC"), Direction::PtoC);
  EXPECT_EQ(parse_direction("c2p"), Direction::CtoP);
  EXPECT_EQ(parse_direction("p->s"), Direction::PtoS);
  EXPECT_EQ(parse_direction("STOP"), Direction::StoP);
  EXPECT_THROW(parse_direction("sideways"), std::invalid_argument);
  EXPECT_THROW((Protocol{Direction::PtoC, true}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((Protocol{Direction::StoP, true}.validate()));
}

TEST(BellStates, PolarizationAndSingleRailOrthonormal) {
  for (int i = 1; i <= 4; ++i)
    for (int j = 1; j <= 4; ++j) {
      const double want = i == j ? 1.0 : 0.0;
      EXPECT_NEAR(std::abs(bell_state_polarization(i).amplitudes.dot(bell_state_polarization(j).amplitudes)), want,
                  1e-15);
      EXPECT_NEAR(std::abs(bell_state_single_rail(i).amplitudes.dot(bell_state_single_rail(j).amplitudes)), want,
                  1e-15);
    }
  EXPECT_THROW(bell_state_polarization(0), std::invalid_argument);
}

TEST(BellStates, CoherentPairsOrthogonal) {
  const double b = 0.6;
  const int d = 20;
  std::array<Vector, 4> s;
  for (int i = 0; i < 4; ++i) {
    s[i] = bell_state_coherent(i + 1, b, d).amplitudes;
    EXPECT_NEAR(s[i].norm(), 1.0, 1e-12);
  }
  // +/- partners and the (1,4), (2,3) pairs are orthogonal; (1,3) and (2,4) are not.
  EXPECT_NEAR(std::abs(s[0].dot(s[1])), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(s[2].dot(s[3])), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(s[0].dot(s[3])), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(s[1].dot(s[2])), 0.0, 1e-12);
  EXPECT_GT(std::abs(s[0].dot(s[2])), 0.1);
}

TEST(Parity, ProjectorsPartitionTheBox) {
  // O1/O2: even/odd photons in the first mode only; O3/O4: the same for the
  // second mode; Oe: no photons. Both modes occupied is the residual.
  const int d = 10;
  const auto pp = parity_projectors(d);
  for (int na = 0; na < d; ++na)
    for (int nb = 0; nb < d; ++nb) {
      int want = -1;
      if (na == 0 && nb == 0) want = 4;
      else if (nb == 0) want = na % 2 == 0 ? 0 : 1;
      else if (na == 0) want = nb % 2 == 0 ? 2 : 3;
      for (int k = 0; k < 5; ++k) EXPECT_EQ(pp.diagonal[k](na * d + nb), k == want ? 1.0 : 0.0) << na << nb << k;
    }
  const Matrix o1 = pp.dense(0);
  EXPECT_LT((o1 * o1 - o1).norm(), 1e-15);
  EXPECT_THROW(parity_projectors(9), std::invalid_argument);
}

TEST(Pipeline, ProbabilitiesSumToOneAndBranchesAreStates) {
  for (const Direction dir : {Direction::PtoC, Direction::CtoP, Direction::PtoS, Direction::StoP}) {
    const auto p = ChannelParams::from_r(0.45, 0.9);
    const auto map = TeleportMap::build(dir, p, coherent(dir) ? default_truncation(0.9) : 2);
    for (const auto& in : random_inputs(10, 17)) {
      const auto res = map.evaluate(in);
      double total = 0.0;
      for (const auto& o : res.outcomes) {
        total += o.probability;
        EXPECT_GE(o.probability, -1e-15);
        if (o.probability > 1e-10) {
          const auto c = check_density(o.output);
          EXPECT_LT(c.trace_error, 1e-10) << to_string(dir) << " " << to_string(o.label);
          EXPECT_GT(c.min_eigenvalue, -1e-10);
        }
      }
      EXPECT_NEAR(total, 1.0, 1e-11) << to_string(dir);
    }
  }
}

TEST(Pipeline, PerInputClosedFormsMatch) {
  for (double a : {0.3, 1.0, 1.8}) {
    for (double r : {0.0, 0.35, 0.8}) {
      const auto p = ChannelParams::from_r(r, a);
      for (const Direction dir : {Direction::PtoC, Direction::CtoP, Direction::PtoS, Direction::StoP}) {
        const auto map = TeleportMap::build(dir, p, coherent(dir) ? default_truncation(a) : 2);
        for (const auto& in : random_inputs(8, 23)) {
          const auto res = map.evaluate(in);
          for (const auto& pr : kAll) {
            if (pr.direction != dir) continue;
            EXPECT_NEAR(per_input_fidelity(pr, in, p), pipeline_fidelity(res, pr), 1e-9)
                << pr.name() << " a=" << a << " r=" << r;
            EXPECT_NEAR(per_input_success_probability(pr, in, p), pipeline_success_probability(res, pr), 1e-9)
                << pr.name();
          }
        }
      }
    }
  }
}

TEST(Pipeline, OutputStatesMatchClosedForms) {
  const double a = 1.2;
  const int d = default_truncation(a);
  const auto p = ChannelParams::from_r(0.5, a);
  for (const auto& pr : kAll) {
    const int dim = coherent(pr.direction) ? d : 2;
    const auto map = TeleportMap::build(pr.direction, p, dim);
    for (const auto& in : random_inputs(4, 5)) {
      const auto res = map.evaluate(in);
      const DensityOperator& out = pr.postselected ? res.postselected->output : res.output;
      EXPECT_LT(trace_distance(out, closed_form_output(pr, in, p, dim)), 1e-9) << pr.name();
    }
  }
}

TEST(Pipeline, PerfectAtNoLoss) {
  for (const Direction dir : {Direction::PtoC, Direction::CtoP, Direction::PtoS, Direction::StoP}) {
    const auto p = ChannelParams::from_t(1.0, 1.0);
    const auto map = TeleportMap::build(dir, p, coherent(dir) ? 22 : 2);
    for (const auto& in : random_inputs(5, 9)) EXPECT_NEAR(map.evaluate(in).fidelity, 1.0, 1e-10) << to_string(dir);
  }
}

TEST(Pipeline, LinearMapEqualsDirectRun) {
  const auto p = ChannelParams::from_r(0.6, 0.8);
  for (const Direction dir : {Direction::PtoC, Direction::CtoP, Direction::PtoS, Direction::StoP}) {
    const auto map = TeleportMap::build(dir, p, coherent(dir) ? 20 : 2);
    for (const auto& in : random_inputs(3, 31)) {
      const auto a = map.evaluate(in);
      const auto b = map.evaluate_ket(map.input_ket(in), map.target_ket(in));
      EXPECT_NEAR(a.fidelity, b.fidelity, 1e-12);
      EXPECT_NEAR(a.success_probability, b.success_probability, 1e-12);
      ASSERT_EQ(a.outcomes.size(), b.outcomes.size());
      for (std::size_t k = 0; k < a.outcomes.size(); ++k)
        EXPECT_NEAR(a.outcomes[k].probability, b.outcomes[k].probability, 1e-12);
    }
  }
}

TEST(Pipeline, EvolvedAndClosedFormChannelsAgree) {
  const auto p = ChannelParams::from_r(0.7, 1.5);
  const int d = default_truncation(1.5);
  for (const Direction dir : {Direction::PtoC, Direction::CtoP}) {
    const auto ev = TeleportMap::build(dir, p, d, ChannelSource::Evolved);
    const auto an = TeleportMap::build(dir, p, d, ChannelSource::Analytic);
    for (const auto& in : random_inputs(4, 2)) EXPECT_NEAR(ev.evaluate(in).fidelity, an.evaluate(in).fidelity, 1e-9);
  }
}

TEST(Pipeline, SuccessConstantIsExpMinusTwoAlphaSquared) {
  for (double a : {0.2, 0.7, 1.3}) {
    for (double r : {0.1, 0.5, 0.9}) {
      const auto p = ChannelParams::from_r(r, a);
      const auto map = TeleportMap::build(Direction::PtoC, p, default_truncation(a));
      const double pp = map.evaluate({std::numbers::pi / 2, 0.0}).success_probability;
      const double pm = map.evaluate({std::numbers::pi / 2, std::numbers::pi}).success_probability;
      EXPECT_NEAR((pp - pm) / p.t2(), std::exp(-2.0 * a * a), 1e-12);
      EXPECT_NEAR(pc_success_constant(p), std::exp(-2.0 * a * a), 1e-15);
    }
  }
}

TEST(Pipeline, SingleRailEqualSuperposition) {
  // Output (|a|^2 + (1-t^2)|b|^2)|0><0| + t^2|b|^2 |1><1| + t(a b* |0><1| + h.c.);
  // with |a|^2 = |b|^2 = 1/2 and t = 1/2: F = 1/4 + 1/16 + 3/16 + 1/4.
  const auto res = teleport_p_to_s({std::numbers::pi / 2, 0.0}, ChannelParams::from_t(0.5, 1.0));
  EXPECT_NEAR(res.fidelity, 0.75, 1e-14);
  EXPECT_NEAR(res.success_probability, 0.125, 1e-15);
  const auto full = teleport_p_to_s({std::numbers::pi / 2, 0.0}, ChannelParams::from_t(1.0, 1.0));
  EXPECT_NEAR(full.fidelity, 1.0, 1e-14);
  EXPECT_NEAR(full.success_probability, 0.5, 1e-15);
}

TEST(Pipeline, CoherentToPolarizationExample) {
  const auto p = ChannelParams::from_t(0.8, 1.0);
  const BlochInput in{std::numbers::pi / 2, 0.0};
  const auto res = teleport_c_to_p(in, p, 22);
  // |a|^2 = |b|^2 = 1/2: t^2 (1/4 + 1/4 + 2Q/4).
  const double q = std::exp(-2.0 * 0.36);
  EXPECT_NEAR(res.fidelity, 0.64 * (0.5 + 0.5 * q), 1e-10);
  EXPECT_NEAR(per_input_fidelity(Protocol{Direction::CtoP}, in, p), res.fidelity, 1e-12);
  // The single-Q variant is the legacy form and disagrees.
  EXPECT_GT(std::abs(per_input_fidelity(Protocol{Direction::CtoP}, in, p, Form::Legacy) - res.fidelity), 0.05);
}

TEST(Pipeline, RejectsBadTruncationAndDegenerateInputs) {
  const auto p = ChannelParams::from_t(0.9, 1.0);
  EXPECT_THROW(TeleportMap::build(Direction::CtoP, p, 21), std::invalid_argument);
  EXPECT_THROW(teleport_c_to_p({0.3, 0.1}, p, 8), TruncationError);
}

TEST(Postselection, RemovesVacuum) {
  Matrix m = Matrix::Zero(3, 3);
  m(kH, kH) = 0.3;
  m(kV, kV) = 0.2;
  m(kPolVacuum, kPolVacuum) = 0.5;
  m(kH, kV) = m(kV, kH) = 0.1;
  const auto ps = postselect_polarization({ModeLayout{ModeKind::polarization()}, m});
  EXPECT_NEAR(ps.kept_probability, 0.5, 1e-15);
  EXPECT_NEAR(ps.output.matrix(kH, kH).real(), 0.6, 1e-15);
  EXPECT_NEAR(ps.output.matrix(kH, kV).real(), 0.2, 1e-15);
  EXPECT_EQ(std::abs(ps.output.matrix(kPolVacuum, kPolVacuum)), 0.0);
}

TEST(Postselection, ProbabilityCarriesStageOverhead) {
  const auto p = ChannelParams::from_r(0.6, 1.0);
  for (const auto& in : random_inputs(5, 13)) {
    const auto res = teleport_s_to_p(in, p);
    ASSERT_TRUE(res.postselected.has_value());
    EXPECT_NEAR(res.postselected->success_probability,
                kPostselectionBellFactor * res.postselected->kept_probability * res.success_probability, 1e-14);
  }
}
