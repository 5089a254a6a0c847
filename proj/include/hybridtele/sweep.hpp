#pragma once

// Parameter sweeps behind the command-line tool: figure tables, the
// analytic-vs-oracle verification battery and single-shot records.

#include "hybridtele/averages.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hybridtele {

/// The numeric pipeline is only run up to this amplitude; larger values are
/// evaluated from closed forms and labeled as such.
inline constexpr double kOracleAlphaMax = 2.0;

enum class Engine { Analytic, Oracle, Both };

std::string_view to_string(Engine e);
Engine parse_engine(std::string_view s);

/// Inclusive grid min + k (max - min)/(steps - 1), k = 0..steps-1.
struct RGrid {
  double min = 0.0;
  double max = 0.95;
  int steps = 20;

  std::vector<double> values() const;
  void validate() const;
};

struct SweepConfig {
  RGrid r;
  std::vector<double> alphas;  // empty: command default
  std::optional<int> truncation;
  QuadratureSpec quadrature;
  Engine engine = Engine::Analytic;

  void validate() const;
  /// Override when set, else default_truncation(alpha).
  int truncation_for(double alpha) const;
};

/// Fixed 12-significant-digit formatting shared by every CSV.
std::string format_number(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

/// fig1 {0.5, 1, 2}; fig2 {0.1, 1, 2, 10}; fig3 and fig5 {0.1, 0.54, 1, 10};
/// fig4 has no amplitude.
std::vector<double> figure_default_alphas(std::string_view id);

/// One long-format table per figure: one row per (alpha, r, engine).
Table figure_table(std::string_view id, const SweepConfig& config);

/// Negativities of both channels on the config grid.
Table negativity_table(const SweepConfig& config);

/// Averages of every protocol on the config grid; closed form, quadrature of
/// the per-input closed form, and pipeline quadrature (engine permitting).
Table average_table(const SweepConfig& config);

struct TeleportQuery {
  Protocol protocol;
  BlochInput input;
  double t = 1.0;
  double alpha = 1.0;
  Engine engine = Engine::Both;
  std::optional<int> truncation;
};

/// JSON record with per-outcome probabilities, corrections and fidelities.
std::string teleport_record(const TeleportQuery& q);

struct VerifyOptions {
  /// Mutation hook for testing the battery itself: uses the single-Q
  /// coherence term in the per-input CtoP fidelity.
  bool inject_cp_coherence_fault = false;
};

struct VerifyCheck {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::string worst_case;  // parameters of the largest deviation
};

struct LedgerEntry {
  std::string id;
  std::string description;
  double measured = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  std::vector<LedgerEntry> ledger;
  double seconds = 0.0;

  bool passed() const;
  std::string to_json() const;
  std::string to_text() const;
};

/// Default alphas: {0.1, 0.54, 1, 2, 10}; oracle paths use alpha <= 2 only.
VerifyReport run_verify(const SweepConfig& config, const VerifyOptions& options = {});

/// Amplitude in [lo, hi] (step 0.01) minimizing max_r |P_CtoP(r) - t^2/2|.
struct CrossingScan {
  double best_alpha = 0.0;
  double best_sup = 0.0;
};
CrossingScan crossing_scan(const RGrid& r, double lo = 0.30, double hi = 0.90);

}  // namespace hybridtele
