// Command-line front end: figure tables, negativity and average sweeps,
// single-shot teleportation records and the verification battery.

#include "hybridtele/sweep.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace hybridtele;

struct Common {
  std::string out;
  std::optional<std::string> engine;
  double r_min = 0.0;
  double r_max = 0.95;
  int r_steps = 20;
  std::string alphas;
  std::optional<int> truncation;
  int quad_theta = 64;
  int quad_phi = 128;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t\"[");
    const auto e = item.find_last_not_of(" \t\"]");
    if (b == std::string::npos) continue;
    std::size_t used = 0;
    const std::string token = item.substr(b, e - b + 1);
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw std::invalid_argument("bad number '" + token + "' in --alpha list");
    out.push_back(v);
  }
  return out;
}

SweepConfig make_config(const Common& c, Engine fallback) {
  SweepConfig cfg;
  cfg.r = {c.r_min, c.r_max, c.r_steps};
  cfg.alphas = parse_list(c.alphas);
  cfg.truncation = c.truncation;
  cfg.quadrature = {c.quad_theta, c.quad_phi};
  cfg.engine = c.engine ? parse_engine(*c.engine) : fallback;
  cfg.validate();
  return cfg;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid polarization/coherent/single-rail teleportation under photon loss"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key = value file; flags override it");

  Common c;
  app.add_option("--out", c.out, "Output path (stdout when omitted)");
  app.add_option("--engine", c.engine, "analytic | oracle | both");
  app.add_option("--r-min", c.r_min, "Smallest normalized time r");
  app.add_option("--r-max", c.r_max, "Largest normalized time r");
  app.add_option("--r-steps", c.r_steps, "Number of r grid points (>= 2)");
  app.add_option("--alpha", c.alphas, "Comma-separated coherent amplitudes");
  app.add_option("--truncation", c.truncation, "Fock truncation override (even)");
  app.add_option("--quad-theta", c.quad_theta, "Gauss-Legendre nodes in cos(theta)");
  app.add_option("--quad-phi", c.quad_phi, "Uniform nodes in phi");

  auto* figure = app.add_subcommand("figure", "CSV data for one figure")->fallthrough();
  std::string figure_id;
  figure->add_option("--id", figure_id, "fig1 | fig2 | fig3 | fig4 | fig5")->required();

  auto* verify = app.add_subcommand("verify", "Closed forms vs numeric oracle; JSON report")->fallthrough();
  std::string fault;
  verify->add_option("--inject-fault", fault, "Deliberately break a closed form (cp-coherence)")
      ->check(CLI::IsMember({"cp-coherence"}));

  auto* teleport = app.add_subcommand("teleport", "One input state through one protocol; JSON record")->fallthrough();
  std::string direction;
  double theta = 0.0, phi = 0.0;
  std::optional<double> t_opt, r_opt;
  bool postselect = false;
  teleport->add_option("--direction", direction, "PtoC | CtoP | PtoS | StoP")->required();
  teleport->add_option("--theta", theta, "Bloch polar angle");
  teleport->add_option("--phi", phi, "Bloch azimuth");
  auto* t_flag = teleport->add_option("--t", t_opt, "Amplitude decay t in (0, 1]");
  auto* r_flag = teleport->add_option("--r", r_opt, "Normalized time r in [0, 1)");
  t_flag->excludes(r_flag);
  teleport->add_flag("--postselect", postselect, "Condition on photon arrival (CtoP, StoP)");

  auto* negativity = app.add_subcommand("negativity", "Channel negativities on the grid; CSV")->fallthrough();
  auto* average = app.add_subcommand("average", "Averaged fidelities and probabilities; CSV")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (figure->parsed()) {
      const auto cfg = make_config(c, Engine::Analytic);
      emit(figure_table(figure_id, cfg).to_csv(), c.out);
    } else if (negativity->parsed()) {
      emit(negativity_table(make_config(c, Engine::Analytic)).to_csv(), c.out);
    } else if (average->parsed()) {
      emit(average_table(make_config(c, Engine::Analytic)).to_csv(), c.out);
    } else if (teleport->parsed()) {
      TeleportQuery q;
      q.protocol = {parse_direction(direction), postselect};
      q.input = {theta, phi};
      if (r_opt) {
        if (!(*r_opt >= 0.0 && *r_opt < 1.0)) throw std::invalid_argument("r must lie in [0, 1)");
        q.t = ChannelParams::from_r(*r_opt, 1.0).t();
      } else {
        q.t = t_opt.value_or(1.0);
      }
      const auto alphas = parse_list(c.alphas);
      if (alphas.size() > 1) throw std::invalid_argument("teleport takes a single --alpha");
      if (!alphas.empty()) q.alpha = alphas.front();
      q.engine = c.engine ? parse_engine(*c.engine) : Engine::Both;
      q.truncation = c.truncation;
      emit(teleport_record(q), c.out);
    } else if (verify->parsed()) {
      const auto cfg = make_config(c, Engine::Both);
      VerifyOptions opts;
      opts.inject_cp_coherence_fault = fault == "cp-coherence";
      const VerifyReport report = run_verify(cfg, opts);
      std::cout << report.to_text();
      if (c.out.empty()) {
        std::cout << report.to_json();
      } else {
        emit(report.to_json(), c.out);
      }
      return report.passed() ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
