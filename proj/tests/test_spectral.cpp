#include <doctest.h>

#include <cmath>

#include "rzc/bundle.hpp"
#include "rzc/errors.hpp"
#include "rzc/mesh.hpp"
#include "rzc/rng.hpp"
#include "rzc/spectral.hpp"

using namespace rzc;

namespace {

struct Setup {
  MeshPtr mesh;
  HermitianLineBundle bundle;
  LaplacianWeights weights;
  LaplacianPair pair;
  SpectralData spec;
};

Setup make_setup(int N, int d, int k = 0) {
  Setup s;
  s.mesh = std::make_shared<const TriangleMesh>(make_flat_torus(N));
  s.bundle = d == 0 ? trivial_bundle(s.mesh) : flat_torus_bundle(s.mesh, d);
  s.weights = laplacian_weights(*s.mesh);
  s.pair = connection_laplacian(s.bundle, s.weights);
  s.spec = eigensolve(s.pair, k > 0 ? k : s.mesh->vertex_count(), s.mesh);
  return s;
}

Eigen::VectorXcd random_section(int n, CounterRng& rng) {
  Eigen::VectorXcd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.complex_normal();
  return x;
}

}  // namespace

TEST_CASE("trivial bundle has a constant kernel") {
  const Setup s = make_setup(6, 0);
  CHECK(std::abs(s.spec.eigenvalues[0]) < 1e-8);
  // lowest eigenvector is constant up to scale
  const Eigen::VectorXcd v = s.spec.eigenvectors.col(0);
  const cplx mean = v.mean();
  CHECK((v.array() - mean).abs().maxCoeff() < 1e-8 * std::abs(mean));
}

TEST_CASE("spectrum is gauge invariant") {
  const Setup s = make_setup(6, 1);
  CounterRng rng(11);
  Eigen::VectorXcd u(s.mesh->vertex_count());
  for (int i = 0; i < u.size(); ++i) u[i] = std::polar(1.0, 2.0 * M_PI * rng.uniform01());
  const LaplacianPair gauged = connection_laplacian(gauge_transform(s.bundle, u), s.weights);
  const SpectralData gspec = eigensolve(gauged, s.mesh->vertex_count(), s.mesh);
  for (int i = 0; i < s.spec.count(); ++i)
    CHECK(std::abs(gspec.eigenvalues[i] - s.spec.eigenvalues[i]) <
          1e-10 * (1.0 + std::abs(s.spec.eigenvalues[i])));
}

TEST_CASE("nonzero flux removes the kernel") {
  const Setup s = make_setup(16, 1);
  CHECK(s.spec.eigenvalues[0] > 0.0);
  // spectral gap is reported, not pinned
  const double ratio = s.spec.eigenvalues[1] / s.spec.eigenvalues[0];
  MESSAGE("flat torus N=16 d=1: lambda0 = ", s.spec.eigenvalues[0], ", lambda1/lambda0 = ", ratio);
}

TEST_CASE("heat semigroup") {
  const Setup s = make_setup(8, 1);
  CounterRng rng(5);
  const Eigen::VectorXcd psi = random_section(s.mesh->vertex_count(), rng);

  // t = 0 with the full basis resolves the identity
  CHECK((heat_apply(s.spec, 0.0, psi) - psi).cwiseAbs().maxCoeff() < 1e-10);

  // eigenvectors decay with their own rate
  const Eigen::VectorXcd e3 = s.spec.eigenvectors.col(3);
  const Eigen::VectorXcd he3 = heat_apply(s.spec, 0.7, e3);
  CHECK((he3 - std::exp(-0.7 * s.spec.eigenvalues[3]) * e3).cwiseAbs().maxCoeff() < 1e-12);

  // semigroup law, relative to the result's scale
  for (int rep = 0; rep < 10; ++rep) {
    const double r = 0.05 + 0.4 * rng.uniform01();
    const double t = 0.05 + 0.4 * rng.uniform01();
    const Eigen::VectorXcd x = random_section(s.mesh->vertex_count(), rng);
    const Eigen::VectorXcd once = heat_apply(s.spec, r + t, x);
    const Eigen::VectorXcd twice = heat_apply(s.spec, r, heat_apply(s.spec, t, x));
    CHECK((once - twice).norm() <= 1e-12 * once.norm());
  }

  CHECK_THROWS_AS(heat_apply(s.spec, -0.1, psi), std::invalid_argument);
}

TEST_CASE("heat kernel embedding gram identity") {
  const Setup s = make_setup(8, 1);
  const double t = 0.08;
  const CPnImmersion imm = heat_kernel_embedding(s.spec, t);
  CHECK(imm.ambient_dim() == s.spec.count() - 1);
  for (int p = 0; p < s.mesh->vertex_count(); ++p)
    CHECK(std::abs(imm.vectors.row(p).norm() - 1.0) < 1e-10);

  // unnormalized columns reproduce the heat kernel at 2t evaluated at (q, p)
  CounterRng rng(17);
  const Eigen::VectorXd w = (-t * s.spec.eigenvalues.array()).exp();
  for (int rep = 0; rep < 30; ++rep) {
    const int p = static_cast<int>(rng.next() % s.mesh->vertex_count());
    const int q = static_cast<int>(rng.next() % s.mesh->vertex_count());
    const Eigen::VectorXcd hp = (s.spec.eigenvectors.row(p).conjugate() * w.asDiagonal()).transpose();
    const Eigen::VectorXcd hq = (s.spec.eigenvectors.row(q).conjugate() * w.asDiagonal()).transpose();
    cplx gram = 0.0;
    for (int i = 0; i < hp.size(); ++i) gram += hp[i] * std::conj(hq[i]);
    cplx kernel = 0.0;
    for (int i = 0; i < s.spec.count(); ++i)
      kernel += std::exp(-2.0 * t * s.spec.eigenvalues[i]) * s.spec.eigenvectors(q, i) *
                std::conj(s.spec.eigenvectors(p, i));
    CHECK(std::abs(gram - kernel) <= 1e-10 * std::abs(kernel) + 1e-14);
  }
}

TEST_CASE("embedding collapses onto a simple ground state at large t") {
  // bump bundle to split the ground level
  auto mesh = std::make_shared<const TriangleMesh>(make_flat_torus(8));
  const HermitianLineBundle bundle =
      prescribed_curvature_bundle(mesh, gaussian_bump_curvature(*mesh, 1, 0.2));
  const LaplacianPair pair = connection_laplacian(bundle, laplacian_weights(*mesh));
  const SpectralData spec = eigensolve(pair, mesh->vertex_count(), mesh);
  REQUIRE(spec.ground_indices().size() == 1);

  const double gap = spec.spectral_gap();
  const double t = std::log(1e10) / gap;  // e^{-t gap} = 1e-10
  const CPnImmersion imm = heat_kernel_embedding(spec, t);
  CounterRng rng(23);
  for (int rep = 0; rep < 40; ++rep) {
    const int p = static_cast<int>(rng.next() % mesh->vertex_count());
    const int q = static_cast<int>(rng.next() % mesh->vertex_count());
    cplx g = 0.0;
    for (int i = 0; i < imm.vectors.cols(); ++i)
      g += imm.vectors(p, i) * std::conj(imm.vectors(q, i));
    const double fs_dist = std::acos(std::min(1.0, std::abs(g)));
    CHECK(fs_dist < 1e-4);
  }
}

TEST_CASE("iterative eigensolver matches the dense path") {
  const Setup s = make_setup(8, 1);  // 64 vertices
  const int k = 12;
  const SpectralData lanczos = detail::eigensolve_lanczos(s.pair, k, s.mesh);
  for (int i = 0; i < k; ++i)
    CHECK(std::abs(lanczos.eigenvalues[i] - s.spec.eigenvalues[i]) <
          1e-8 * (1.0 + std::abs(s.spec.eigenvalues[i])));
}

TEST_CASE("truncation rank rule") {
  Eigen::VectorXd lambda(5);
  lambda << 0.0, 1.0, 10.0, 100.0, 1000.0;
  // reach = ln(1e12)/t
  CHECK(truncation_rank(lambda, 1000.0) == 2);   // reach ~ 0.028: keep lambda0, guard lambda1
  CHECK(truncation_rank(lambda, 0.001) == 5);    // reach ~ 27631: everything
  CHECK(truncation_rank(lambda, 0.30) == 4);     // reach ~ 92: {0,1,10} + guard
  CHECK_THROWS_AS(truncation_rank(lambda, 0.0), std::invalid_argument);
}

TEST_CASE("curvature convergence report") {
  // trivial bundle: heat kernel entries are real positive, so the pullback
  // phases vanish at any moderate t
  const Setup trivial = make_setup(8, 0);
  const auto zero_rows = curvature_convergence_report(trivial.bundle, trivial.spec, {0.2, 0.1});
  for (const auto& row : zero_rows) {
    CHECK(row.chern == 0);
    CHECK(row.sup_err < 1e-10);
  }

  const Setup s = make_setup(16, 1);
  const double h2 = std::pow(s.mesh->max_edge_length(), 2);
  const std::vector<double> t_list{0.4, 0.2, 0.1, 0.05, 4.0 * h2};
  const auto rows = curvature_convergence_report(s.bundle, s.spec, t_list);
  for (const auto& row : rows) {
    REQUIRE(row.note.empty());
    CHECK(row.chern == 1);
    CHECK(row.reliable);
  }
  // trend: sup error shrinks toward the mesh floor (5% jitter allowed)
  for (size_t i = 0; i + 1 < rows.size(); ++i)
    CHECK(rows[i + 1].sup_err <= 1.05 * rows[i].sup_err);

  CHECK_THROWS_AS(curvature_convergence_report(s.bundle, s.spec, {0.1, 0.2}),
                  std::invalid_argument);
}
