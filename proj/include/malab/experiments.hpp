#pragma once

// End-to-end estimate pipelines and the named experiments behind the CLI.

#include <json.hpp>

#include "malab/barriers.hpp"
#include "malab/config.hpp"
#include "malab/covering.hpp"
#include "malab/sliding.hpp"
#include "malab/solutions.hpp"

namespace malab {

struct CriticalDensityParams {
  double t0 = 0.25;
  double M = 4.0;
  double delta = 0.3;
  double eps3 = 0.1;
};

struct CriticalDensityReport {
  RunStatus status = RunStatus::ok;
  double norm_budget = 0;       // ||b|| + ||c^-|| + ||f^+|| on S(0, 4 t0)
  bool hypothesis = false;      // superlevel fraction above 1 - delta
  double fraction = 0;          // |{v > M^{k+1}} cap S(0,t0)| / |S(0,t0)|
  bool conclusion = false;      // v > M^k everywhere on S(0, t0)
  double min_v = 0;
};

// Hypothesis-gated: when the superlevel fraction is below 1 - delta the run
// reports not_applicable and asserts nothing.
CriticalDensityReport criticalDensityRun(const ProblemInstance& P, const SmoothField& v,
                                         const ScalarField& f, int k,
                                         const CriticalDensityParams& params);

struct PowerDecayParams {
  double t0 = 0.25;
  double eps4 = 0.5;
  int levels = 9;  // dyadic thresholds 2^0 .. 2^{levels-1}
};

struct DecayRow {
  double threshold = 0;
  double fraction = 0;
};

struct PowerDecayReport {
  RunStatus status = RunStatus::ok;
  std::vector<DecayRow> table;
  double eps_hat = 0;  // fitted tail exponent
  double c1_hat = 0;   // fitted coefficient
  bool monotone = false;
  double norm_budget = 0;
};

PowerDecayReport powerDecayRun(const ProblemInstance& P, const SmoothField& v,
                               const ScalarField& f, const PowerDecayParams& params);

struct HarnackParams {
  double eps5 = 0.05;
  double h0 = 0.25;
  double alpha_star = 1.0;
};

struct HarnackQuotientReport {
  RunStatus status = RunStatus::ok;
  double sup = 0, inf = 0, f_norm = 0;
  double quotient = 0;  // sup / (inf + sqrt(h) ||f||_n)
  bool bound_ok = false;
};

// sup and inf over S(x0, h/8), f-norm over the instance section S(x0, h).
HarnackQuotientReport harnackQuotientRun(const ProblemInstance& P, const SmoothField& v,
                                         const ScalarField& f, double C_frozen,
                                         const HarnackParams& params);

struct ChainedHarnackReport {
  RunStatus status = RunStatus::ok;
  int cover_count = 0;
  double cover_count_bound = 0;  // C_count (h/h0)^{n/2}
  double N = 1;                  // max(1, (h/h0)^{n/2})
  double quotient = 0;           // over S(x0, h)
  double chained_bound = 0;      // C^N
  bool bound_ok = false;
  bool count_ok = false;
  double worst_section_quotient = 0;
};

// Covers the closed section by tau h0 sections (Vitali), applies the frozen
// per-section constant, and checks the chained bound C^{N(h, h0)}.
ChainedHarnackReport chainedHarnackRun(const ProblemInstance& P, const SmoothField& v,
                                       const ScalarField& f, double h, double C_frozen,
                                       double tau, double K,
                                       const HarnackParams& params);

// ---------------------------------------------------------------------------
// Named experiments (the CLI surface). Each writes CSV tables, plot data and
// a JSON summary into out_dir and returns the summary.

struct ExperimentOutcome {
  int exit_code = 0;  // 0 pass, 1 check failed, 2 config error, 3 not applicable
  nlohmann::json summary;
};

ExperimentOutcome runExperiment(const std::string& name, const ExperimentConfig& cfg,
                                const std::string& out_dir);

std::vector<std::string> experimentNames();

}  // namespace malab
