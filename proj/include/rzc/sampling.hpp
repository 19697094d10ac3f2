#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rzc/bundle.hpp"
#include "rzc/mesh.hpp"
#include "rzc/rng.hpp"
#include "rzc/spectral.hpp"
#include "rzc/zeros.hpp"

namespace rzc {

// t = infinity is a distinguished value, not a float.
struct HeatTime {
  double t = 0.0;
  bool ground = false;

  static HeatTime finite(double t) { return {t, false}; }
  static HeatTime ground_state() { return {0.0, true}; }
};

struct SampleRecord {
  double pairing = 0.0;
  int n_plus = 0;
  int n_minus = 0;
};

struct CurrentEstimate {
  double mean_pairing = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n)
  long n_samples = 0;
  long n_degenerate_resamples = 0;
  Eigen::VectorXd face_mean_density;  // mean index per face
};

// psi = sum_i e^{-t lambda_i} (a_i + i b_i) psi_i, a,b standard normal
Section sample_section(const SpectralData& spec, double t, CounterRng& rng);

// Gaussian coefficients on Eig_0 only
Section sample_ground_state(const SpectralData& spec, CounterRng& rng);

// Shared Monte Carlo driver. draw() may throw DegenerateSectionError, in
// which case it is retried on the same per-sample stream up to 100 times;
// more than 100 consecutive failures raise DegenerateMeasureError. Results
// are reduced in sample-index order, so output is bit-identical for any
// worker count.
CurrentEstimate mc_zero_currents(long n_samples, std::uint64_t master_seed, int workers,
                                 int face_count, const TestForm& eta,
                                 const std::function<ZeroCurrent(CounterRng&)>& draw,
                                 std::vector<SampleRecord>* records = nullptr);

// Monte Carlo expectation of <zeta | eta> under mu_t (or the ground-state law).
CurrentEstimate estimate_zero_current(const HermitianLineBundle& bundle,
                                      const SpectralData& spec, HeatTime t, const TestForm& eta,
                                      long n_samples, std::uint64_t master_seed, int workers = 1,
                                      std::vector<SampleRecord>* records = nullptr);

// (1/2pi) sum_f omega_f eta_f; eta = 1 gives the Chern number
double curvature_target(const FaceCurvature& curv, const TestForm& eta);

void write_samples_csv(const std::string& path, const std::vector<SampleRecord>& records);

// {"mean": ..., "stderr": ..., "n": ..., "degenerate_resamples": ...}
void write_estimate_json(const std::string& path, const CurrentEstimate& estimate);

}  // namespace rzc
