#include "rzc/cpn.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "rzc/bundle.hpp"
#include "rzc/errors.hpp"

namespace rzc {

double cpn_volume(int n) {
  if (n < 0) throw std::invalid_argument("cpn_volume: n must be >= 0");
  double v = 1.0;
  for (int i = 1; i <= n; ++i) v *= M_PI / i;
  return v;
}

Hyperplane uniform_hyperplane(int n, CounterRng& rng) {
  if (n < 1) throw std::invalid_argument("uniform_hyperplane: n must be >= 1");
  Eigen::VectorXcd psi(n + 1);
  do {
    for (int i = 0; i <= n; ++i) psi[i] = rng.complex_normal();
  } while (psi.norm() < 1e-300);
  return {psi};
}

namespace {

void require_unit_sphere(const TriangleMesh& mesh) {
  for (const auto& v : mesh.vertices) {
    if (std::abs(v.norm() - 1.0) > 1e-6)
      throw std::invalid_argument("mesh is not a unit-sphere mesh");
  }
}

// spinor chart of a unit vector
std::pair<cplx, cplx> spinor(const Eigen::Vector3d& p) {
  const double theta = std::acos(std::clamp(p.z(), -1.0, 1.0));
  const double phi = std::atan2(p.y(), p.x());
  return {cplx(std::cos(theta / 2.0), 0.0), std::polar(std::sin(theta / 2.0), phi)};
}

double binom(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b *= static_cast<double>(n - k + i) / i;
  return b;
}

}  // namespace

CPnImmersion veronese_immersion(MeshPtr sphere_mesh, int degree) {
  if (degree < 1) throw std::invalid_argument("veronese_immersion: degree must be >= 1");
  require_unit_sphere(*sphere_mesh);
  CPnImmersion imm;
  imm.vectors.resize(sphere_mesh->vertex_count(), degree + 1);
  for (int p = 0; p < sphere_mesh->vertex_count(); ++p) {
    const auto [z0, z1] = spinor(sphere_mesh->vertices[static_cast<size_t>(p)]);
    for (int k = 0; k <= degree; ++k)
      imm.vectors(p, k) = std::sqrt(binom(degree, k)) * std::pow(z0, degree - k) * std::pow(z1, k);
  }
  imm.mesh = std::move(sphere_mesh);
  return imm;
}

CPnImmersion spinor_power_map(MeshPtr sphere_mesh, int d) {
  if (d < 0) throw std::invalid_argument("spinor_power_map: d must be >= 0");
  require_unit_sphere(*sphere_mesh);
  CPnImmersion imm;
  imm.vectors.resize(sphere_mesh->vertex_count(), 2);
  for (int p = 0; p < sphere_mesh->vertex_count(); ++p) {
    const auto [z0, z1] = spinor(sphere_mesh->vertices[static_cast<size_t>(p)]);
    Eigen::Vector2cd h(std::pow(z0, d), std::pow(z1, d));
    const double norm = h.norm();
    if (norm < 1e-300) throw std::invalid_argument("spinor power collapsed at a vertex");
    imm.vectors.row(p) = h / norm;
  }
  imm.mesh = std::move(sphere_mesh);
  return imm;
}

double fs_area_integral(const CPnImmersion& immersion, const TestForm& eta) {
  const FaceCurvature omega = face_curvature(pancharatnam_pullback(immersion));
  if (eta.values.size() != omega.omega.size())
    throw std::invalid_argument("test form size mismatch");
  return 0.5 * omega.omega.dot(eta.values) / M_PI;
}

CurrentEstimate mc_intersection_expectation(const CPnImmersion& immersion, const TestForm& eta,
                                            long n_samples, std::uint64_t master_seed,
                                            int workers, std::vector<SampleRecord>* records) {
  const HermitianLineBundle pullback = pancharatnam_pullback(immersion);
  const int n = immersion.ambient_dim();
  const auto draw = [&](CounterRng& rng) {
    const Hyperplane h = uniform_hyperplane(n, rng);
    return intersection_current(pullback, immersion, h);
  };
  return mc_zero_currents(n_samples, master_seed, workers, immersion.mesh->face_count(), eta,
                          draw, records);
}

CurrentEstimate degree_via_preimages(const CPnImmersion& map, long n_samples,
                                     std::uint64_t master_seed, int workers,
                                     std::vector<SampleRecord>* records) {
  if (map.ambient_dim() != 1)
    throw std::invalid_argument("degree_via_preimages: target must be CP^1");
  const TestForm ones = constant_form(*map.mesh, 1.0);
  return mc_intersection_expectation(map, ones, n_samples, master_seed, workers, records);
}

void write_intersection_report_json(const std::string& path, const CurrentEstimate& estimate,
                                    double rhs, double slack) {
  nlohmann::json j;
  j["lhs_mean"] = estimate.mean_pairing;
  j["lhs_stderr"] = estimate.std_error;
  j["rhs"] = rhs;
  j["n_samples"] = estimate.n_samples;
  j["slack"] = slack;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace rzc
