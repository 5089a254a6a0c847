// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.
// A criterion that cannot hold for mathematical reasons is still printed as
// FAIL; the exit status ignores only those listed in kKnownUnattainable, and
// only while the measured value still confirms the finding.

#include "hybridtele/channels.hpp"
#include "hybridtele/entanglement.hpp"
#include "hybridtele/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <string>

using namespace hybridtele;

namespace {

constexpr double kChannelTol = 1e-9;
constexpr double kChannelSeconds = 30.0;
constexpr double kNegPsTol = 1e-12;
constexpr double kNegPcTol = 1e-9;
constexpr double kQuadratureTol = 1e-8;
constexpr double kPipelineTol = 1e-6;
constexpr double kPsHalfTol = 1e-12;
constexpr double kGapTol = 1e-3;
constexpr double kPostGapBound = 0.01;
constexpr double kPostPipelineTol = 1e-10;
constexpr double kCrossingCenter = 0.54;
constexpr double kCrossingWindow = 0.05 + 1e-9;  // slack for the decimal grid only
constexpr double kVerifySeconds = 300.0;

const std::set<int> kKnownUnattainable = {7};

const Protocol kAll[] = {{Direction::PtoC}, {Direction::CtoP}, {Direction::CtoP, true},
                         {Direction::PtoS}, {Direction::StoP}, {Direction::StoP, true}};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool coherent(Direction d) { return d == Direction::PtoC || d == Direction::CtoP; }

std::vector<BlochInput> input_grid() {
  std::vector<BlochInput> out;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) out.push_back({std::numbers::pi * (i + 0.5) / 12.0, 2.0 * std::numbers::pi * j / 12.0});
  return out;
}

struct Outcome {
  bool pass;
  std::string detail;
  bool confirms_known = false;  // only meaningful for kKnownUnattainable
};

std::string num(double v) { return format_number(v); }

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double a : {0.5, 1.0, 2.0}) {
    const int d = default_truncation(a);
    const auto rho0 = DensityOperator::from_pure(hybrid_pc_initial(a, d));
    for (int k = 0; k <= 9; ++k) {
      const auto p = ChannelParams::from_r(0.1 * k, a);
      worst = std::max(worst, trace_distance(evolve(rho0, p.t()), rho_pc_analytic(p.t(), a, d)));
    }
  }
  const auto ps0 = DensityOperator::from_pure(hybrid_ps_initial());
  for (int k = 0; k <= 9; ++k) {
    const double t = ChannelParams::from_r(0.1 * k, 1.0).t();
    worst = std::max(worst, trace_distance(evolve(ps0, t), rho_ps_analytic(t)));
  }
  const double secs = seconds_since(t0);
  return {worst < kChannelTol && secs < kChannelSeconds,
          "max trace distance " + num(worst) + " (tol " + num(kChannelTol) + "), " + num(secs) + " s"};
}

Outcome criterion2() {
  double ps_worst = 0.0;
  const auto ps0 = DensityOperator::from_pure(hybrid_ps_initial());
  for (double r : RGrid{}.values()) {
    const double t = ChannelParams::from_r(r, 1.0).t();
    ps_worst = std::max(ps_worst, std::abs(negativity_numeric(evolve(ps0, t), 1) - std::pow(t, 4)));
  }
  const double pc = negativity_pc_numeric(1.0, 1.0, default_truncation(1.0));
  const double pc_dev = std::abs(pc - std::sqrt(1.0 - std::exp(-4.0)));

  // Fig. 1 claims from the CSV rows: monotone decay; larger alpha starts
  // higher and decays faster relative to its start.
  SweepConfig cfg;
  cfg.engine = Engine::Oracle;
  const Table t = figure_table("fig1", cfg);
  std::map<double, std::vector<double>> npc;
  std::vector<double> nps;
  for (const auto& row : t.rows) {
    npc[std::stod(row[0])].push_back(std::stod(row[5]));
    if (row[0] == "1") nps.push_back(std::stod(row[4]));
  }
  bool monotone = true, ordered = true;
  for (std::size_t k = 1; k < nps.size(); ++k) monotone &= nps[k] <= nps[k - 1];
  const std::vector<double>* prev = nullptr;
  for (const auto& [a, v] : npc) {
    for (std::size_t k = 1; k < v.size(); ++k) monotone &= v[k] <= v[k - 1];
    if (prev) {
      ordered &= v[0] > (*prev)[0];
      for (std::size_t k = 1; k < v.size(); ++k) ordered &= v[k] / v[0] < (*prev)[k] / (*prev)[0];
    }
    prev = &v;
  }
  return {ps_worst < kNegPsTol && pc_dev < kNegPcTol && monotone && ordered,
          "|N_ps - t^4| " + num(ps_worst) + ", N_pc(t=1, alpha=1) " + num(pc) + " (dev " + num(pc_dev) +
              "), fig1 monotone " + (monotone ? "yes" : "no") + ", alpha ordering " + (ordered ? "yes" : "no")};
}

Outcome criterion3() {
  double quad_worst = 0.0;
  std::string quad_at;
  for (double a : {0.1, 0.54, 1.0, 2.0, 10.0}) {
    for (double r : RGrid{}.values()) {
      const auto p = ChannelParams::from_r(r, a);
      auto see = [&](double d, const std::string& what) {
        if (d > quad_worst) quad_worst = d, quad_at = what + " alpha=" + num(a) + " r=" + num(r);
      };
      for (const auto& pr : kAll) {
        see(std::abs(avg_fidelity(pr, p) - avg_fidelity_quadrature(pr, p)), "F " + pr.name());
        see(std::abs(avg_success_probability(pr, p) - avg_success_probability_quadrature(pr, p)), "P " + pr.name());
      }
      see(std::abs(classical_limit(Direction::PtoC, p) - classical_limit_quadrature(p)), "F_cl");
    }
  }
  double pipe_worst = 0.0;
  const auto inputs = input_grid();
  for (const Direction dir : {Direction::PtoC, Direction::CtoP, Direction::PtoS, Direction::StoP}) {
    for (double a : {0.1, 0.54, 1.0, 2.0}) {
      if (!coherent(dir) && a != 1.0) continue;
      for (double r : RGrid{}.values()) {
        const auto p = ChannelParams::from_r(r, a);
        const auto map = TeleportMap::build(dir, p, coherent(dir) ? default_truncation(a) : 2);
        for (const auto& in : inputs) {
          const auto res = map.evaluate(in);
          for (const auto& pr : kAll) {
            if (pr.direction != dir) continue;
            pipe_worst = std::max(pipe_worst, std::abs(per_input_fidelity(pr, in, p) - pipeline_fidelity(res, pr)));
            pipe_worst = std::max(pipe_worst, std::abs(per_input_success_probability(pr, in, p) -
                                                       pipeline_success_probability(res, pr)));
          }
        }
      }
    }
  }
  return {quad_worst < kQuadratureTol && pipe_worst < kPipelineTol,
          "closed vs quadrature " + num(quad_worst) + " at " + quad_at + "; per-input vs pipeline " + num(pipe_worst)};
}

Outcome criterion4() {
  bool exact = true;
  for (double a : {0.1, 0.54, 1.0, 2.0, 10.0})
    for (double r : RGrid{}.values()) {
      const auto p = ChannelParams::from_r(r, a);
      exact &= avg_success_probability(kAll[0], p) == p.t2() / 2.0;
      exact &= avg_success_probability(kAll[4], p) == 0.5;
    }
  const double fps1 = avg_fidelity(kAll[3], ChannelParams::from_t(1.0, 1.0));
  const double fps_half = avg_fidelity(kAll[3], ChannelParams::from_t(0.5, 1.0));
  double cp_worst = 0.0;
  for (double a : {0.54, 1.0, 2.0})
    for (double r : {0.0, 0.3, 0.6, 0.9}) {
      const auto p = ChannelParams::from_r(r, a);
      const double closed = avg_fidelity(kAll[1], p);
      const double pipe = pipeline_averages(Direction::CtoP, p, default_truncation(a)).fidelity;
      cp_worst = std::max(cp_worst, std::abs(closed - pipe));
    }
  const bool ok = exact && fps1 == 1.0 && cp_worst < kPipelineTol && std::abs(fps_half - 17.0 / 24.0) < kPsHalfTol;
  return {ok, std::string("P_pc = t^2/2 and P_sp = 1/2 exact: ") + (exact ? "yes" : "no") + ", F_ps(1) " + num(fps1) +
                  ", F_cp vs pipeline " + num(cp_worst) + ", F_ps(0.5) " + num(fps_half)};
}

Outcome criterion5() {
  double worst = 0.0;
  for (double a : {0.1, 1.0, 2.0, 10.0})
    for (double r : RGrid{}.values()) {
      const auto p = ChannelParams::from_r(r, a);
      const double fpc = avg_fidelity(kAll[0], p);
      worst = std::max({worst, avg_fidelity(kAll[1], p) - fpc, classical_limit(Direction::PtoC, p) - fpc,
                        avg_fidelity(kAll[4], p) - avg_fidelity(kAll[3], p)});
    }
  return {worst <= 0.0, "largest violation " + num(std::max(worst, 0.0))};
}

Outcome criterion6() {
  double worst = 0.0;
  for (double r : RGrid{}.values()) {
    if (r > 0.5) continue;
    const auto p = ChannelParams::from_r(r, 10.0);
    worst = std::max(worst, std::abs(avg_fidelity(kAll[0], p) - avg_fidelity(kAll[1], p) - fidelity_gap_large_alpha(p)));
  }
  return {worst < kGapTol, "max |gap - (1-t^2)(2+Q)/3| " + num(worst)};
}

Outcome criterion7() {
  double gap = 0.0, gap_r = 0.0;
  for (double r : RGrid{}.values()) {
    const auto p = ChannelParams::from_r(r, 1.0);
    const double g = std::abs(avg_fidelity(kAll[3], p) - avg_fidelity(kAll[5], p));
    if (g > gap) gap = g, gap_r = r;
  }
  double post_pipe = 0.0;
  for (double a : {0.1, 0.54, 1.0, 2.0})
    for (double r : {0.0, 0.3, 0.6, 0.9}) {
      const auto p = ChannelParams::from_r(r, a);
      const auto avg = pipeline_averages(Direction::CtoP, p, default_truncation(a));
      post_pipe = std::max(post_pipe, std::abs(avg_fidelity(kAll[2], p) - *avg.post_fidelity));
    }
  bool identity = true;
  for (double a : {0.1, 0.54, 1.0, 2.0, 10.0})
    for (double r : RGrid{}.values()) {
      const auto p = ChannelParams::from_r(r, a);
      for (int k : {1, 4}) {
        const Protocol post{kAll[k].direction, true};
        identity &= avg_success_probability(post, p) == p.t2() * avg_success_probability(kAll[k], p) / 2.0;
      }
    }
  const bool rest = post_pipe < kPostPipelineTol && identity;
  Outcome o{gap < kPostGapBound && rest,
            "max_r |F_ps - F_sp^post| " + num(gap) + " at r=" + num(gap_r) + " (bound " + num(kPostGapBound) +
                "); F_cp^post vs pipeline " + num(post_pipe) + "; P^post = t^2 P/2 exact: " + (identity ? "yes" : "no")};
  // The bound itself is contradicted by the closed form and the pipeline;
  // the other two parts must still hold.
  o.confirms_known = gap >= kPostGapBound && rest;
  return o;
}

Outcome criterion8() {
  const auto scan = crossing_scan(RGrid{});
  return {std::abs(scan.best_alpha - kCrossingCenter) <= kCrossingWindow,
          "argmin alpha " + num(scan.best_alpha) + " (sup " + num(scan.best_sup) + ")"};
}

Outcome criterion9() {
  SweepConfig cfg;
  const auto rep = run_verify(cfg);
  std::map<std::string, const LedgerEntry*> ledger;
  for (const auto& l : rep.ledger) ledger[l.id] = &l;
  bool ok = rep.passed() && rep.seconds < kVerifySeconds;
  std::string failing;
  for (const auto& c : rep.checks)
    if (!c.passed) failing += " " + c.name;
  for (const char* id : {"negativity_pc_scale", "moment4_form", "cp_coherence_factor"}) {
    ok &= ledger.count(id) && ledger[id]->measured != 0.0;
  }
  ok &= ledger.count("pc_success_constant") &&
        std::abs(ledger["pc_success_constant"]->measured - std::exp(-2.0)) < 1e-12;
  return {ok, std::to_string(rep.checks.size()) + " checks, " + (failing.empty() ? "all pass" : "failing:" + failing) +
                  ", " + std::to_string(rep.ledger.size()) + " ledger entries, " + num(rep.seconds) + " s"};
}

}  // namespace

int main() {
  using Fn = Outcome (*)();
  const Fn criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                         criterion6, criterion7, criterion8, criterion9};
  int unexpected = 0;
  for (int i = 0; i < 9; ++i) {
    const Outcome o = criteria[i]();
    const bool known = kKnownUnattainable.count(i + 1) > 0;
    std::printf("criterion %d: %s  %s%s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                !o.pass && known && o.confirms_known ? "  [known unattainable, recorded]" : "");
    std::fflush(stdout);
    if (!o.pass && !(known && o.confirms_known)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
