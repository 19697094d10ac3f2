#include "rzc/sampling.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rzc/errors.hpp"

namespace rzc {

Section sample_section(const SpectralData& spec, double t, CounterRng& rng) {
  if (t <= 0.0) throw std::invalid_argument("sample_section: t must be positive");
  Eigen::VectorXcd coeff(spec.count());
  for (int i = 0; i < spec.count(); ++i)
    coeff[i] = std::exp(-t * spec.eigenvalues[i]) * rng.complex_normal();
  return spec.eigenvectors * coeff;
}

Section sample_ground_state(const SpectralData& spec, CounterRng& rng) {
  const auto idx = spec.ground_indices();
  Section psi = Section::Zero(spec.eigenvectors.rows());
  for (int i : idx) psi += rng.complex_normal() * spec.eigenvectors.col(i);
  return psi;
}

namespace {

struct SampleSlot {
  bool ok = false;
  ZeroCurrent current;
  long resamples = 0;
  std::string error;            // degenerate-measure diagnostic
  std::exception_ptr fatal;     // any non-degenerate failure, rethrown in index order
};

}  // namespace

CurrentEstimate mc_zero_currents(long n_samples, std::uint64_t master_seed, int workers,
                                 int face_count, const TestForm& eta,
                                 const std::function<ZeroCurrent(CounterRng&)>& draw,
                                 std::vector<SampleRecord>* records) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (eta.values.size() != face_count) throw std::invalid_argument("test form size mismatch");
  if (workers < 1) workers = 1;

  std::vector<SampleSlot> slots(static_cast<size_t>(n_samples));
  const auto run_range = [&](long begin, long end) {
    for (long s = begin; s < end; ++s) {
      CounterRng rng = sample_stream(master_seed, static_cast<std::uint64_t>(s));
      SampleSlot& slot = slots[static_cast<size_t>(s)];
      for (int attempt = 0; attempt <= 100; ++attempt) {
        if (attempt == 100) {
          slot.error = "more than 100 consecutive degenerate resamples at sample " +
                       std::to_string(s);
          break;
        }
        try {
          slot.current = draw(rng);
          slot.ok = true;
          break;
        } catch (const DegenerateSectionError&) {
          ++slot.resamples;
        } catch (...) {
          slot.fatal = std::current_exception();
          break;
        }
      }
    }
  };

  if (workers == 1 || n_samples < 2 * workers) {
    run_range(0, n_samples);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const long chunk = (n_samples + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const long begin = w * chunk;
      const long end = std::min(n_samples, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // reduce in index order
  CurrentEstimate est;
  est.n_samples = n_samples;
  est.face_mean_density = Eigen::VectorXd::Zero(face_count);
  std::vector<double> pairings(static_cast<size_t>(n_samples));
  double sum = 0.0;
  for (long s = 0; s < n_samples; ++s) {
    const SampleSlot& slot = slots[static_cast<size_t>(s)];
    if (slot.fatal) std::rethrow_exception(slot.fatal);
    if (!slot.ok) throw DegenerateMeasureError(slot.error);
    est.n_degenerate_resamples += slot.resamples;
    const double p = pair_current(slot.current, eta);
    pairings[static_cast<size_t>(s)] = p;
    sum += p;
    for (const auto& [f, n] : slot.current.indices) est.face_mean_density[f] += n;
    if (records)
      records->push_back({p, slot.current.count_plus(), slot.current.count_minus()});
  }
  est.mean_pairing = sum / static_cast<double>(n_samples);
  est.face_mean_density /= static_cast<double>(n_samples);
  if (n_samples > 1) {
    double ss = 0.0;
    for (double p : pairings) ss += (p - est.mean_pairing) * (p - est.mean_pairing);
    est.std_error = std::sqrt(ss / static_cast<double>(n_samples - 1)) /
                    std::sqrt(static_cast<double>(n_samples));
  }
  return est;
}

CurrentEstimate estimate_zero_current(const HermitianLineBundle& bundle,
                                      const SpectralData& spec, HeatTime t, const TestForm& eta,
                                      long n_samples, std::uint64_t master_seed, int workers,
                                      std::vector<SampleRecord>* records) {
  if (!t.ground && t.t <= 0.0)
    throw std::invalid_argument("estimate_zero_current: t must be positive or GROUND");
  const auto draw = [&](CounterRng& rng) {
    const Section psi = t.ground ? sample_ground_state(spec, rng) : sample_section(spec, t.t, rng);
    return zero_current(bundle, psi);
  };
  return mc_zero_currents(n_samples, master_seed, workers, bundle.mesh->face_count(), eta, draw,
                          records);
}

double curvature_target(const FaceCurvature& curv, const TestForm& eta) {
  if (curv.omega.size() != eta.values.size())
    throw std::invalid_argument("curvature/test form size mismatch");
  return curv.omega.dot(eta.values) / (2.0 * M_PI);
}

void write_samples_csv(const std::string& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "sample_index,pairing,n_zeros_plus,n_zeros_minus\n";
  out.precision(17);
  for (size_t i = 0; i < records.size(); ++i)
    out << i << ',' << records[i].pairing << ',' << records[i].n_plus << ','
        << records[i].n_minus << '\n';
}

void write_estimate_json(const std::string& path, const CurrentEstimate& estimate) {
  nlohmann::json j;
  j["mean"] = estimate.mean_pairing;
  j["stderr"] = estimate.std_error;
  j["n"] = estimate.n_samples;
  j["degenerate_resamples"] = estimate.n_degenerate_resamples;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace rzc
