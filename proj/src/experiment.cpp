#include "rzc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "rzc/bundle.hpp"
#include "rzc/cpn.hpp"
#include "rzc/errors.hpp"
#include "rzc/sampling.hpp"
#include "rzc/spectral.hpp"
#include "rzc/zeros.hpp"

namespace rzc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::limit0: return "limit0";
    case ExperimentKind::limit_inf: return "limit_inf";
    case ExperimentKind::finite_t: return "finite_t";
    case ExperimentKind::theorem2: return "theorem2";
    case ExperimentKind::theorem4: return "theorem4";
    case ExperimentKind::lemma: return "lemma";
    case ExperimentKind::coarea: return "coarea";
  }
  return "?";
}

namespace {

ExperimentKind parse_kind(const std::string& s, int line) {
  for (ExperimentKind k :
       {ExperimentKind::limit0, ExperimentKind::limit_inf, ExperimentKind::finite_t,
        ExperimentKind::theorem2, ExperimentKind::theorem4, ExperimentKind::lemma,
        ExperimentKind::coarea}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown experiment '" + s + "'", line);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

TimePoint parse_time_point(const std::string& tok, int line) {
  if (tok == "GROUND") return {TimePoint::Kind::Ground, 0.0};
  if (tok == "AUTO") return {TimePoint::Kind::Auto, 0.0};
  try {
    if (tok.size() > 2 && tok.substr(tok.size() - 2) == "h2")
      return {TimePoint::Kind::FiniteH2, std::stod(tok.substr(0, tok.size() - 2))};
    return {TimePoint::Kind::Finite, std::stod(tok)};
  } catch (const std::exception&) {
    throw ConfigError("cannot parse time '" + tok + "'", line);
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path, 0);
  ExperimentConfig config;
  bool have_experiment = false, have_geometry = false, have_bundle = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const size_t eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) throw ConfigError("expected key=value", line_no);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const size_t b = s.find_first_not_of(" \t\r");
      const size_t e = s.find_last_not_of(" \t\r");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (value.empty()) throw ConfigError("empty value for key '" + key + "'", line_no);

    try {
      if (key == "experiment") {
        config.experiment = parse_kind(value, line_no);
        have_experiment = true;
      } else if (key == "geometry") {
        const auto tok = split_ws(value);
        if (tok.empty()) throw ConfigError("empty geometry", line_no);
        if (tok[0] == "flat_torus" && tok.size() == 2) {
          config.geometry = {GeometrySpec::Kind::FlatTorus, std::stoi(tok[1]), ""};
        } else if (tok[0] == "sphere" && tok.size() == 2) {
          config.geometry = {GeometrySpec::Kind::Sphere, std::stoi(tok[1]), ""};
        } else if (tok[0] == "obj" && tok.size() == 2) {
          config.geometry = {GeometrySpec::Kind::Obj, 0, tok[1]};
        } else {
          throw ConfigError("geometry must be 'flat_torus N', 'sphere s' or 'obj path'", line_no);
        }
        have_geometry = true;
      } else if (key == "bundle") {
        const auto tok = split_ws(value);
        if (tok.size() == 2 && tok[0] == "flat") {
          config.bundle.kind = BundleSpec::Kind::Flat;
          config.bundle.d = std::stoi(tok[1]);
        } else if (tok.size() == 3 && tok[0] == "bump") {
          config.bundle.kind = BundleSpec::Kind::Bump;
          config.bundle.d = std::stoi(tok[1]);
          config.bundle.sigma_b = std::stod(tok[2]);
        } else if (tok.size() == 2 && tok[0] == "pullback") {
          config.bundle.kind = BundleSpec::Kind::Pullback;
          config.bundle.d = std::stoi(tok[1]);
        } else {
          throw ConfigError("bundle must be 'flat d', 'bump d sigma_b' or 'pullback d'", line_no);
        }
        have_bundle = true;
      } else if (key == "harmonic_holonomies") {
        config.bundle.harmonic_holonomies.clear();
        for (const auto& tok : split_commas(value))
          config.bundle.harmonic_holonomies.push_back(std::stod(tok));
      } else if (key == "t_list") {
        config.t_list.clear();
        for (const auto& tok : split_commas(value))
          config.t_list.push_back(parse_time_point(tok, line_no));
      } else if (key == "n_samples") {
        config.n_samples = std::stol(value);
      } else if (key == "master_seed") {
        config.master_seed = std::stoull(value);
      } else if (key == "k_override") {
        config.k_override = std::stoi(value);
      } else if (key == "output_dir") {
        config.output_dir = value;
      } else if (key == "slack_abs") {
        config.slack_abs = std::stod(value);
      } else if (key == "slack_rel") {
        config.slack_rel = std::stod(value);
      } else if (key == "c_floor") {
        config.c_floor = std::stod(value);
      } else if (key == "refine_n_list") {
        config.refine_n_list.clear();
        for (const auto& tok : split_commas(value)) config.refine_n_list.push_back(std::stoi(tok));
      } else if (key == "refine_t") {
        config.refine_t = std::stod(value);
      } else {
        throw ConfigError("unknown key '" + key + "'", line_no);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("cannot parse value for '" + key + "': " + e.what(), line_no);
    }
  }
  if (!have_experiment) throw ConfigError("missing key 'experiment'", 0);
  if (!have_geometry) throw ConfigError("missing key 'geometry'", 0);
  if (!have_bundle && config.experiment != ExperimentKind::theorem4)
    throw ConfigError("missing key 'bundle'", 0);
  return config;
}

void validate_config(const ExperimentConfig& config) {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg, 0); };
  const bool torus = config.geometry.kind == GeometrySpec::Kind::FlatTorus;
  const bool sphere = config.geometry.kind == GeometrySpec::Kind::Sphere;
  const bool obj = config.geometry.kind == GeometrySpec::Kind::Obj;

  if (torus && config.geometry.param < 2) fail("flat_torus N must be >= 2");
  if (sphere && config.geometry.param < 0) fail("sphere subdivision must be >= 0");

  switch (config.experiment) {
    case ExperimentKind::theorem2:
      if (!sphere) fail("theorem2 requires sphere geometry");
      if (config.bundle.kind != BundleSpec::Kind::Pullback || config.bundle.d < 1)
        fail("theorem2 requires bundle 'pullback d' with d >= 1");
      if (config.n_samples < 1) fail("n_samples must be >= 1");
      break;
    case ExperimentKind::coarea:
      if (!sphere) fail("coarea requires sphere geometry");
      if (config.bundle.kind != BundleSpec::Kind::Pullback || config.bundle.d < 0)
        fail("coarea requires bundle 'pullback d' with d >= 0");
      if (config.n_samples < 1) fail("n_samples must be >= 1");
      break;
    case ExperimentKind::limit0:
    case ExperimentKind::finite_t:
    case ExperimentKind::lemma:
    case ExperimentKind::limit_inf:
    case ExperimentKind::theorem4: {
      if (sphere) fail(to_string(config.experiment) + " requires flat_torus (or obj) geometry");
      if (obj) {
        if (config.experiment != ExperimentKind::finite_t &&
            config.experiment != ExperimentKind::theorem4)
          fail("obj geometry is only supported for finite_t and theorem4");
        if (config.bundle.kind != BundleSpec::Kind::Flat || config.bundle.d != 0)
          fail("obj geometry supports only the trivial bundle 'flat 0'");
      }
      if (config.bundle.kind == BundleSpec::Kind::Pullback)
        fail(to_string(config.experiment) + " does not take a pullback bundle");
      if (config.bundle.kind == BundleSpec::Kind::Bump && !torus)
        fail("bump bundles require flat_torus geometry");
      if (config.bundle.kind == BundleSpec::Kind::Bump && config.bundle.sigma_b <= 0.0)
        fail("bump sigma_b must be positive");
      if (!config.bundle.harmonic_holonomies.empty() &&
          config.bundle.kind != BundleSpec::Kind::Bump)
        fail("harmonic_holonomies only applies to bump bundles");

      bool has_finite = false;
      for (const auto& tp : config.t_list) {
        if (tp.kind == TimePoint::Kind::Ground || tp.kind == TimePoint::Kind::Auto) {
          if (config.experiment != ExperimentKind::limit_inf)
            fail("GROUND/AUTO times are only valid for limit_inf");
        } else {
          if (tp.value <= 0.0) fail("times must be positive");
          has_finite = true;
        }
      }
      if (config.experiment != ExperimentKind::limit_inf && !has_finite &&
          config.t_list.empty())
        fail("t_list must contain at least one time");
      if (config.experiment != ExperimentKind::theorem4 && config.n_samples < 1)
        fail("n_samples must be >= 1");
      break;
    }
  }
  if (!config.refine_n_list.empty() && config.experiment != ExperimentKind::theorem4)
    fail("refine_n_list is only valid for theorem4");
  for (int n : config.refine_n_list)
    if (n < 2) fail("refine_n_list entries must be >= 2");
}

namespace {

struct Workspace {
  MeshPtr mesh;
  HermitianLineBundle bundle;
  FaceCurvature curvature;
  int chern = 0;
  std::optional<SpectralData> spectrum;
  std::optional<CPnImmersion> immersion;  // pullback experiments
  double h2 = 0.0;                        // (max edge length)^2
};

MeshPtr build_mesh(const ExperimentConfig& config) {
  switch (config.geometry.kind) {
    case GeometrySpec::Kind::FlatTorus:
      return std::make_shared<const TriangleMesh>(make_flat_torus(config.geometry.param));
    case GeometrySpec::Kind::Sphere:
      return std::make_shared<const TriangleMesh>(make_sphere(config.geometry.param));
    case GeometrySpec::Kind::Obj:
      return std::make_shared<const TriangleMesh>(load_obj(config.geometry.path));
  }
  throw std::logic_error("bad geometry kind");
}

double resolve_time(const TimePoint& tp, double h2) {
  switch (tp.kind) {
    case TimePoint::Kind::Finite: return tp.value;
    case TimePoint::Kind::FiniteH2: return tp.value * h2;
    default: throw std::logic_error("resolve_time on GROUND/AUTO");
  }
}

Workspace build_workspace(const ExperimentConfig& config) {
  Workspace ws;
  ws.mesh = build_mesh(config);
  const double h = ws.mesh->max_edge_length();
  ws.h2 = h * h;

  switch (config.bundle.kind) {
    case BundleSpec::Kind::Flat:
      ws.bundle = config.bundle.d == 0 ? trivial_bundle(ws.mesh)
                                       : flat_torus_bundle(ws.mesh, config.bundle.d);
      break;
    case BundleSpec::Kind::Bump:
      ws.bundle = prescribed_curvature_bundle(
          ws.mesh, gaussian_bump_curvature(*ws.mesh, config.bundle.d, config.bundle.sigma_b),
          config.bundle.harmonic_holonomies);
      break;
    case BundleSpec::Kind::Pullback:
      if (config.experiment == ExperimentKind::coarea)
        ws.immersion = spinor_power_map(ws.mesh, config.bundle.d);
      else
        ws.immersion = veronese_immersion(ws.mesh, config.bundle.d);
      ws.bundle = pancharatnam_pullback(*ws.immersion);
      break;
  }
  ws.curvature = face_curvature(ws.bundle);
  ws.chern = chern_number(ws.curvature);

  const bool needs_spectrum = config.experiment == ExperimentKind::limit0 ||
                              config.experiment == ExperimentKind::limit_inf ||
                              config.experiment == ExperimentKind::finite_t ||
                              config.experiment == ExperimentKind::lemma ||
                              config.experiment == ExperimentKind::theorem4;
  if (needs_spectrum) {
    const LaplacianWeights weights = laplacian_weights(*ws.mesh);
    const LaplacianPair pair = connection_laplacian(ws.bundle, weights);
    const int n = ws.mesh->vertex_count();
    if (n <= 2000) {
      SpectralData full = eigensolve(pair, n, ws.mesh);
      double t_min = std::numeric_limits<double>::infinity();
      for (const auto& tp : config.t_list)
        if (tp.kind == TimePoint::Kind::Finite || tp.kind == TimePoint::Kind::FiniteH2)
          t_min = std::min(t_min, resolve_time(tp, ws.h2));
      int k = config.k_override > 0 ? config.k_override
              : std::isfinite(t_min) ? truncation_rank(full.eigenvalues, t_min)
                                     : n;
      k = std::min(k, n);
      ws.spectrum = full.truncated(k);
    } else {
      if (config.k_override < 1)
        throw ConfigError("meshes above 2000 vertices need k_override for the iterative solver",
                          0);
      ws.spectrum = eigensolve(pair, config.k_override, ws.mesh);
    }
  }
  return ws;
}

// test forms per experiment, with labels
std::vector<std::pair<std::string, TestForm>> eta_set(const ExperimentConfig& config,
                                                      const Workspace& ws) {
  const TriangleMesh& mesh = *ws.mesh;
  std::vector<std::pair<std::string, TestForm>> etas;
  switch (config.experiment) {
    case ExperimentKind::limit0:
    case ExperimentKind::finite_t:
    case ExperimentKind::limit_inf: {
      etas.emplace_back("const", constant_form(mesh));
      etas.emplace_back("half_x", half_torus_form(mesh));
      const double width =
          config.bundle.kind == BundleSpec::Kind::Bump ? config.bundle.sigma_b : 0.25;
      etas.emplace_back("bump_aligned", torus_bump_form(mesh, 0.5, 0.5, width));
      etas.emplace_back("bump_anti", torus_bump_form(mesh, 0.0, 0.0, width));
      break;
    }
    case ExperimentKind::theorem2: {
      etas.emplace_back("const", constant_form(mesh));
      etas.emplace_back("hemisphere", hemisphere_form(mesh));
      TestForm cap{Eigen::VectorXd::Zero(mesh.face_count())};
      for (int f = 0; f < mesh.face_count(); ++f) {
        const double z = mesh.face_centroid(f).normalized().z();
        const double theta = std::acos(std::clamp(z, -1.0, 1.0));
        cap.values[f] = std::exp(-theta * theta / (2.0 * 0.6 * 0.6));
      }
      etas.emplace_back("cap", std::move(cap));
      break;
    }
    case ExperimentKind::lemma:
    case ExperimentKind::coarea:
      etas.emplace_back("const", constant_form(mesh));
      break;
    case ExperimentKind::theorem4:
      break;
  }
  return etas;
}

struct OutputSink {
  fs::path dir;
  std::ofstream samples;
  std::vector<ReportRow> rows;
  bool density_written = false;

  explicit OutputSink(const std::string& output_dir) : dir(output_dir) {
    fs::create_directories(dir);
    samples.open(dir / "samples.csv");
    samples << "sample_index,pairing,n_zeros_plus,n_zeros_minus\n";
    samples.precision(17);
  }

  void add_samples(const std::string& t_label, const std::string& eta_label,
                   const std::vector<SampleRecord>& records) {
    samples << "# t=" << t_label << " eta=" << eta_label << '\n';
    for (size_t i = 0; i < records.size(); ++i)
      samples << i << ',' << records[i].pairing << ',' << records[i].n_plus << ','
              << records[i].n_minus << '\n';
  }

  void maybe_density(const TriangleMesh& mesh, const Eigen::VectorXd& density) {
    if (density_written) return;
    write_density_ply((dir / "density.ply").string(), mesh, density);
    density_written = true;
  }
};

ReportRow make_row(const ExperimentConfig& config, const std::string& t_label,
                   const std::string& eta_label, double lhs, double lhs_stderr, double rhs,
                   double slack, double wall) {
  ReportRow row;
  row.experiment = to_string(config.experiment);
  row.t_label = t_label;
  row.eta_label = eta_label;
  row.lhs = lhs;
  row.lhs_stderr = lhs_stderr;
  row.rhs = rhs;
  row.abs_gap = std::abs(lhs - rhs);
  row.slack = slack;
  row.pass = row.abs_gap <= 3.0 * lhs_stderr + slack;
  row.wall_time = wall;
  return row;
}

void run_limit0_like(const ExperimentConfig& config, Workspace& ws, OutputSink& sink) {
  // limit0: rhs is the t->0 curvature target; slack carries the finite-t gap
  // predicted by the pullback curvature. finite_t: rhs is the finite-t
  // prediction itself.
  const bool limit0 = config.experiment == ExperimentKind::limit0;
  const double slack_abs =
      config.slack_abs >= 0.0 ? config.slack_abs : 0.02 * std::abs(ws.chern);
  const auto etas = eta_set(config, ws);

  for (const auto& tp : config.t_list) {
    const double t = resolve_time(tp, ws.h2);
    const std::string t_label = fmt_double(t);
    FaceCurvature omega_t;
    std::string note;
    try {
      omega_t = face_curvature(
          conjugate_bundle(pancharatnam_pullback(heat_kernel_embedding(*ws.spectrum, t))));
    } catch (const EmbeddingTooCoarseError& e) {
      omega_t = ws.curvature;  // no finite-t prediction available
      note = e.what();
    }
    for (const auto& [eta_label, eta] : etas) {
      Timer timer;
      std::vector<SampleRecord> records;
      const CurrentEstimate est =
          estimate_zero_current(ws.bundle, *ws.spectrum, HeatTime::finite(t), eta,
                                config.n_samples, config.master_seed, config.workers, &records);
      const double target0 = curvature_target(ws.curvature, eta);
      const double target_t = curvature_target(omega_t, eta);
      double rhs, slack;
      if (limit0) {
        rhs = target0;
        slack = std::abs(target_t - target0) + slack_abs;
      } else {
        rhs = target_t;
        slack = slack_abs;
      }
      ReportRow row = make_row(config, t_label, eta_label, est.mean_pairing, est.std_error, rhs,
                               slack, timer.seconds());
      row.note = note;
      if (est.n_degenerate_resamples > 0)
        row.note += (row.note.empty() ? "" : "; ") +
                    std::to_string(est.n_degenerate_resamples) + " degenerate resamples";
      sink.rows.push_back(row);
      sink.add_samples(t_label, eta_label, records);
      sink.maybe_density(*ws.mesh, est.face_mean_density);
    }
  }
}

void run_limit_inf(const ExperimentConfig& config, Workspace& ws, OutputSink& sink) {
  const SpectralData& spec = *ws.spectrum;
  const auto ground = spec.ground_indices();
  const bool simple = ground.size() == 1;
  const double gap = spec.spectral_gap();
  const auto etas = eta_set(config, ws);

  std::optional<ZeroCurrent> reference;
  std::string ref_note;
  if (simple) {
    try {
      reference = zero_current(ws.bundle, spec.eigenvectors.col(0));
    } catch (const DegenerateSectionError& e) {
      ref_note = std::string("ground state current degenerate: ") + e.what();
    }
  } else {
    ref_note = "ground eigenspace dimension " + std::to_string(ground.size()) +
               "; reporting the Gaussian-averaged current";
  }

  std::vector<TimePoint> times = config.t_list;
  if (times.empty()) times = {{TimePoint::Kind::Auto, 0.0}, {TimePoint::Kind::Ground, 0.0}};

  for (const auto& tp : times) {
    HeatTime ht = HeatTime::ground_state();
    std::string t_label = "GROUND";
    if (tp.kind == TimePoint::Kind::Auto) {
      const double t_star = std::log(1e8) / gap;
      ht = HeatTime::finite(t_star);
      t_label = fmt_double(t_star);
    } else if (tp.kind != TimePoint::Kind::Ground) {
      ht = HeatTime::finite(resolve_time(tp, ws.h2));
      t_label = fmt_double(ht.t);
    }
    for (const auto& [eta_label, eta] : etas) {
      Timer timer;
      std::vector<SampleRecord> records;
      const CurrentEstimate est =
          estimate_zero_current(ws.bundle, spec, ht, eta, config.n_samples, config.master_seed,
                                config.workers, &records);
      ReportRow row;
      if (reference) {
        const double rhs = pair_current(*reference, eta);
        // identical currents facewise; the bound only needs to absorb the
        // roundoff of averaging n equal pairings
        const double slack = config.slack_abs >= 0.0 ? config.slack_abs : 1e-12;
        row = make_row(config, t_label, eta_label, est.mean_pairing, est.std_error, rhs, slack,
                       timer.seconds());
      } else {
        row = make_row(config, t_label, eta_label, est.mean_pairing, est.std_error, 0.0, 0.0,
                       timer.seconds());
        row.rhs_defined = false;
        row.pass = true;  // informational row; no paper-defined reference
      }
      row.note = ref_note;
      row.note += (row.note.empty() ? "" : "; ") + std::string("gap=") + fmt_double(gap);
      sink.rows.push_back(row);
      sink.add_samples(t_label, eta_label, records);
      sink.maybe_density(*ws.mesh, est.face_mean_density);
    }
  }
}

void run_lemma(const ExperimentConfig& config, Workspace& ws, OutputSink& sink) {
  const SpectralData& spec = *ws.spectrum;
  const TestForm ones = constant_form(*ws.mesh);
  for (const auto& tp : config.t_list) {
    const double t = resolve_time(tp, ws.h2);
    const std::string t_label = fmt_double(t);
    Timer timer;

    const CPnImmersion embedding = heat_kernel_embedding(spec, t);
    const HermitianLineBundle pullback = pancharatnam_pullback(embedding);
    // zeta_{S_t psi} is extracted over the embedding's tautological pullback,
    // the structure through which the identity is exact facewise
    const HermitianLineBundle tautological = conjugate_bundle(pullback);

    long matched = 0;
    long agree_e = 0;
    long degenerate = 0;
    std::vector<SampleRecord> records;
    for (long s = 0; s < config.n_samples; ++s) {
      CounterRng rng = sample_stream(config.master_seed, static_cast<std::uint64_t>(s));
      for (int attempt = 0;; ++attempt) {
        if (attempt >= 100)
          throw DegenerateMeasureError("lemma sample " + std::to_string(s) +
                                       " degenerate 100 times");
        try {
          Section psi(spec.eigenvectors.rows());
          for (int v = 0; v < psi.size(); ++v) psi[v] = rng.complex_normal();
          const Section smoothed = heat_apply(spec, t, psi);
          const ZeroCurrent zeta = zero_current(tautological, smoothed);
          const ZeroCurrent sigma =
              intersection_current(pullback, embedding, section_hyperplane(spec, psi));
          ZeroCurrent negated = sigma;
          for (auto& [f, n] : negated.indices) n = -n;
          if (negated == zeta) ++matched;
          try {
            if (zero_current(ws.bundle, smoothed) == negated) ++agree_e;
          } catch (const DegenerateSectionError&) {
          }
          records.push_back({pair_current(zeta, ones), zeta.count_plus(), zeta.count_minus()});
          break;
        } catch (const DegenerateSectionError&) {
          ++degenerate;
        }
      }
    }
    const double frac = static_cast<double>(matched) / config.n_samples;
    ReportRow row = make_row(config, t_label, "facewise", frac, 0.0, 1.0, 0.0, timer.seconds());
    row.note = std::to_string(degenerate) + " degenerate resamples; E-bundle extraction agreed on " +
               std::to_string(agree_e) + "/" + std::to_string(config.n_samples);
    sink.rows.push_back(row);
    sink.add_samples(t_label, "facewise", records);
  }
  sink.maybe_density(*ws.mesh, Eigen::VectorXd::Zero(ws.mesh->face_count()));
}

void run_theorem2(const ExperimentConfig& config, Workspace& ws, OutputSink& sink) {
  const double slack_rel = config.slack_rel >= 0.0 ? config.slack_rel : 0.02;
  for (const auto& [eta_label, eta] : eta_set(config, ws)) {
    Timer timer;
    std::vector<SampleRecord> records;
    const CurrentEstimate est = mc_intersection_expectation(
        *ws.immersion, eta, config.n_samples, config.master_seed, config.workers, &records);
    const double rhs = fs_area_integral(*ws.immersion, eta);
    const double slack = slack_rel * std::abs(rhs);
    ReportRow row = make_row(config, "-", eta_label, est.mean_pairing, est.std_error, rhs, slack,
                             timer.seconds());
    if (est.n_degenerate_resamples > 0)
      row.note = std::to_string(est.n_degenerate_resamples) + " degenerate resamples";
    sink.rows.push_back(row);
    sink.add_samples("-", eta_label, records);
    sink.maybe_density(*ws.mesh, est.face_mean_density);
  }
}

void run_coarea(const ExperimentConfig& config, Workspace& ws, OutputSink& sink) {
  Timer timer;
  std::vector<SampleRecord> records;
  const CurrentEstimate est = degree_via_preimages(*ws.immersion, config.n_samples,
                                                   config.master_seed, config.workers, &records);
  const double slack = config.slack_abs >= 0.0 ? config.slack_abs : 0.0;
  ReportRow row = make_row(config, "-", "const", est.mean_pairing, est.std_error,
                           static_cast<double>(config.bundle.d), slack, timer.seconds());
  if (est.n_degenerate_resamples > 0)
    row.note = std::to_string(est.n_degenerate_resamples) + " degenerate resamples";
  sink.rows.push_back(row);
  sink.add_samples("-", "const", records);
  sink.maybe_density(*ws.mesh, est.face_mean_density);
}

void run_theorem4(const ExperimentConfig& config, Workspace& ws, OutputSink& sink) {
  std::vector<double> t_list;
  for (const auto& tp : config.t_list) t_list.push_back(resolve_time(tp, ws.h2));
  const auto rows = curvature_convergence_report(ws.bundle, *ws.spectrum, t_list, config.c_floor);
  write_convergence_csv((sink.dir / "convergence.csv").string(), rows);

  for (const auto& r : rows) {
    Timer timer;
    ReportRow row = make_row(config, fmt_double(r.t), "-", static_cast<double>(r.chern), 0.0,
                             static_cast<double>(ws.chern), 0.0, timer.seconds());
    row.sup_err = r.sup_err;
    row.note = r.note;
    if (!r.reliable) {
      row.note += (row.note.empty() ? "" : "; ") + std::string("below mesh floor; unreliable");
      row.pass = true;  // unreliable rows are reported, not judged
    }
    sink.rows.push_back(row);
  }

  if (!config.refine_n_list.empty()) {
    std::ofstream refine(sink.dir / "refine.csv");
    refine << "N,t,sup_err,chern\n";
    refine.precision(17);
    for (int n : config.refine_n_list) {
      ExperimentConfig sub = config;
      sub.geometry = {GeometrySpec::Kind::FlatTorus, n, ""};
      sub.t_list = {{TimePoint::Kind::Finite, config.refine_t}};
      Workspace wsub = build_workspace(sub);
      const auto sub_rows =
          curvature_convergence_report(wsub.bundle, *wsub.spectrum, {config.refine_t}, config.c_floor);
      const auto& r = sub_rows.front();
      refine << n << ',' << config.refine_t << ',' << r.sup_err << ',' << r.chern << '\n';
      ReportRow row = make_row(config, fmt_double(config.refine_t), "N=" + std::to_string(n),
                               static_cast<double>(r.chern), 0.0,
                               static_cast<double>(wsub.chern), 0.0, 0.0);
      row.sup_err = r.sup_err;
      row.note = r.note;
      sink.rows.push_back(row);
    }
  }
  sink.maybe_density(*ws.mesh, Eigen::VectorXd::Zero(ws.mesh->face_count()));
}

}  // namespace

void write_density_ply(const std::string& path, const TriangleMesh& mesh,
                       const Eigen::VectorXd& face_density) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.vertex_count() << '\n';
  out << "property double x\nproperty double y\nproperty double z\n";
  out << "element face " << mesh.face_count() << '\n';
  out << "property list uchar int vertex_indices\n";
  out << "property double density\n";
  out << "end_header\n";
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& face = mesh.faces[static_cast<size_t>(f)];
    out << "3 " << face[0] << ' ' << face[1] << ' ' << face[2] << ' ' << face_density[f] << '\n';
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  Workspace ws = build_workspace(config);
  OutputSink sink(config.output_dir);

  switch (config.experiment) {
    case ExperimentKind::limit0:
    case ExperimentKind::finite_t: run_limit0_like(config, ws, sink); break;
    case ExperimentKind::limit_inf: run_limit_inf(config, ws, sink); break;
    case ExperimentKind::lemma: run_lemma(config, ws, sink); break;
    case ExperimentKind::theorem2: run_theorem2(config, ws, sink); break;
    case ExperimentKind::coarea: run_coarea(config, ws, sink); break;
    case ExperimentKind::theorem4: run_theorem4(config, ws, sink); break;
  }

  write_curvature_csv((sink.dir / "curvature.csv").string(), ws.curvature);
  if (ws.spectrum)
    write_eigenvalue_csv((sink.dir / "eigenvalues.csv").string(), ws.spectrum->eigenvalues);
  else
    write_eigenvalue_csv((sink.dir / "eigenvalues.csv").string(), Eigen::VectorXd());

  json report;
  report["schema"] = 1;
  report["experiment"] = to_string(config.experiment);
  report["master_seed"] = config.master_seed;
  json rows = json::array();
  bool all_pass = true;
  for (const auto& r : sink.rows) {
    json jr;
    jr["experiment"] = r.experiment;
    jr["t"] = r.t_label;
    jr["eta"] = r.eta_label;
    jr["lhs"] = r.lhs;
    jr["lhs_stderr"] = r.lhs_stderr;
    if (r.rhs_defined)
      jr["rhs"] = r.rhs;
    else
      jr["rhs"] = nullptr;
    jr["abs_gap"] = r.abs_gap;
    jr["slack"] = r.slack;
    jr["pass"] = r.pass;
    if (r.sup_err != 0.0) jr["sup_err"] = r.sup_err;
    if (!r.note.empty()) jr["note"] = r.note;
    rows.push_back(jr);
    all_pass = all_pass && r.pass;
  }
  report["rows"] = rows;
  {
    std::ofstream out(sink.dir / "report.json");
    out << report.dump(2) << '\n';
  }
  {
    std::ofstream out(sink.dir / "timings.csv");
    out << "experiment,t,eta,wall_seconds\n";
    for (const auto& r : sink.rows)
      out << r.experiment << ',' << r.t_label << ',' << r.eta_label << ',' << r.wall_time << '\n';
  }

  ExperimentResult result;
  result.rows = sink.rows;
  result.all_pass = all_pass;
  return result;
}

int run_experiment_cli(const std::string& config_path, std::optional<std::uint64_t> seed_override,
                       std::optional<int> workers_override) {
  ExperimentConfig config;
  try {
    config = parse_config(config_path);
    if (seed_override) config.master_seed = *seed_override;
    if (workers_override) config.workers = *workers_override;
    validate_config(config);
  } catch (const ConfigError& e) {
    std::cerr << config_path << ":" << e.line << ": " << e.what() << '\n';
    return 2;
  }
  try {
    const ExperimentResult result = run_experiment(config);
    for (const auto& r : result.rows) {
      std::cerr << (r.pass ? "[pass] " : "[FAIL] ") << r.experiment << " t=" << r.t_label
                << " eta=" << r.eta_label << " lhs=" << r.lhs << " rhs="
                << (r.rhs_defined ? fmt_double(r.rhs) : "null") << " gap=" << r.abs_gap
                << " (3*stderr+slack=" << 3.0 * r.lhs_stderr + r.slack << ")\n";
    }
    return result.all_pass ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << config_path << ":" << e.line << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace rzc
