#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rzc/mesh.hpp"

namespace rzc {

enum class ExperimentKind { limit0, limit_inf, finite_t, theorem2, theorem4, lemma, coarea };

std::string to_string(ExperimentKind kind);

struct GeometrySpec {
  enum class Kind { FlatTorus, Sphere, Obj } kind = Kind::FlatTorus;
  int param = 0;     // N or subdivision level
  std::string path;  // obj
};

struct BundleSpec {
  enum class Kind { Flat, Bump, Pullback } kind = Kind::Flat;
  int d = 0;
  double sigma_b = 0.15;
  std::vector<double> harmonic_holonomies;  // bump bundles; 2*genus angles
};

// One entry of t_list: a time, h^2-relative time, GROUND, or AUTO
// (limit_inf: t with e^{-t(lambda_1 - lambda_0)} = 1e-8).
struct TimePoint {
  enum class Kind { Finite, FiniteH2, Ground, Auto } kind = Kind::Finite;
  double value = 0.0;  // time, or the h^2 multiplier
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::limit0;
  GeometrySpec geometry;
  BundleSpec bundle;
  std::vector<TimePoint> t_list;
  long n_samples = 1000;
  std::uint64_t master_seed = 1;
  int k_override = 0;  // 0 = truncation rule
  std::string output_dir = ".";
  double slack_abs = -1.0;  // < 0: experiment default
  double slack_rel = -1.0;
  double c_floor = 1.0;
  std::vector<int> refine_n_list;  // theorem4 mesh refinement block
  double refine_t = 0.05;
  int workers = 1;
};

// flat key=value file; throws ConfigError with a line anchor
ExperimentConfig parse_config(const std::string& path);
void validate_config(const ExperimentConfig& config);

struct ReportRow {
  std::string experiment;
  std::string t_label;    // numeric, "GROUND", or "-"
  std::string eta_label;
  double lhs = 0.0;        // Monte Carlo mean (or checked statistic)
  double lhs_stderr = 0.0;
  double rhs = 0.0;        // analytic / curvature target
  bool rhs_defined = true;
  double abs_gap = 0.0;
  double slack = 0.0;
  bool pass = false;
  double sup_err = 0.0;    // theorem4 rows
  double wall_time = 0.0;  // seconds; written to timings.csv, not report.json
  std::string note;
};

struct ExperimentResult {
  std::vector<ReportRow> rows;
  bool all_pass = false;
};

// Runs the experiment and writes report.json, samples.csv, eigenvalues.csv,
// curvature.csv, density.ply (and convergence.csv/refine.csv for theorem4)
// plus timings.csv into config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

// CLI entry: parses, validates, runs; returns the process exit code
// (0 pass, 1 row failure, 2 config error, 3 numerical failure).
int run_experiment_cli(const std::string& config_path, std::optional<std::uint64_t> seed_override,
                       std::optional<int> workers_override);

void write_density_ply(const std::string& path, const TriangleMesh& mesh,
                       const Eigen::VectorXd& face_density);

}  // namespace rzc
