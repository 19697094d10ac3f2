#include <doctest.h>

#include <cmath>
#include <complex>

#include "rzc/bundle.hpp"
#include "rzc/cpn.hpp"
#include "rzc/errors.hpp"
#include "rzc/mesh.hpp"
#include "rzc/rng.hpp"
#include "rzc/spectral.hpp"
#include "rzc/zeros.hpp"

using namespace rzc;

namespace {

// winding of the continuous function f along the (straight-edge) boundary of
// face fid, by dense angle accumulation; independent of the extraction path
template <class F>
int brute_force_winding(const TriangleMesh& mesh, int fid, const F& f, int samples_per_edge = 400) {
  const auto& c = mesh.face_corners[static_cast<size_t>(fid)];
  double acc = 0.0;
  std::complex<double> prev = f(c[0]);
  for (int s = 0; s < 3; ++s) {
    const Eigen::Vector3d a = c[static_cast<size_t>(s)];
    const Eigen::Vector3d b = c[static_cast<size_t>((s + 1) % 3)];
    for (int i = 1; i <= samples_per_edge; ++i) {
      const Eigen::Vector3d p = a + (b - a) * (static_cast<double>(i) / samples_per_edge);
      const std::complex<double> cur = f(p);
      acc += std::arg(cur / prev);
      prev = cur;
    }
  }
  return static_cast<int>(std::lround(acc / (2.0 * M_PI)));
}

bool is_seam_face(const TriangleMesh& mesh, int f) {
  for (int s = 0; s < 3; ++s) {
    const Eigen::Vector3d v = mesh.vertices[static_cast<size_t>(
        mesh.faces[static_cast<size_t>(f)][static_cast<size_t>(s)])];
    if ((v - mesh.face_corners[static_cast<size_t>(f)][static_cast<size_t>(s)]).norm() > 1e-12)
      return true;
  }
  return false;
}

}  // namespace

TEST_CASE("planted vortex against the brute-force oracle") {
  auto mesh = std::make_shared<const TriangleMesh>(make_flat_torus(8));
  const HermitianLineBundle bundle = trivial_bundle(mesh);
  const double cx = 0.438, cy = 0.317;  // interior to a face, away from the seam
  const auto f = [&](const Eigen::Vector3d& p) {
    return std::complex<double>(p.x() - cx, p.y() - cy);
  };
  Section psi(mesh->vertex_count());
  for (int v = 0; v < mesh->vertex_count(); ++v)
    psi[v] = f(mesh->vertices[static_cast<size_t>(v)]);

  const ZeroCurrent current = zero_current(bundle, psi);

  // facewise agreement with the continuous winding on every non-seam face
  int interior_total = 0;
  for (int fid = 0; fid < mesh->face_count(); ++fid) {
    if (is_seam_face(*mesh, fid)) continue;
    const int oracle = brute_force_winding(*mesh, fid, f);
    int extracted = 0;
    for (const auto& [face, n] : current.indices)
      if (face == fid) extracted = n;
    CHECK(extracted == oracle);
    interior_total += extracted;
  }
  // one positive vortex planted
  CHECK(interior_total == 1);
  // the trivial bundle forces total zero: the seam carries the compensation
  CHECK(current.total() == 0);
}

TEST_CASE("two planted vortices") {
  auto mesh = std::make_shared<const TriangleMesh>(make_flat_torus(8));
  const auto f = [](const Eigen::Vector3d& p) {
    const std::complex<double> z(p.x(), p.y());
    return (z - std::complex<double>(0.438, 0.317)) * (z - std::complex<double>(0.688, 0.563));
  };
  Section psi(mesh->vertex_count());
  for (int v = 0; v < mesh->vertex_count(); ++v)
    psi[v] = f(mesh->vertices[static_cast<size_t>(v)]);
  const ZeroCurrent current = zero_current(trivial_bundle(mesh), psi);
  int interior_total = 0;
  for (int fid = 0; fid < mesh->face_count(); ++fid) {
    if (is_seam_face(*mesh, fid)) continue;
    const int oracle = brute_force_winding(*mesh, fid, f);
    int extracted = 0;
    for (const auto& [face, n] : current.indices)
      if (face == fid) extracted = n;
    CHECK(extracted == oracle);
    interior_total += extracted;
  }
  CHECK(interior_total == 2);
}

TEST_CASE("degenerate sections are rejected") {
  auto mesh = std::make_shared<const TriangleMesh>(make_flat_torus(4));
  const HermitianLineBundle bundle = trivial_bundle(mesh);

  Section with_zero = Section::Ones(mesh->vertex_count());
  with_zero[3] = 0.0;
  CHECK_THROWS_AS(zero_current(bundle, with_zero), DegenerateSectionError);

  Section branch = Section::Ones(mesh->vertex_count());
  branch[mesh->edges[0].v1] = -1.0;  // edge phase exactly pi
  CHECK_THROWS_AS(zero_current(bundle, branch), DegenerateSectionError);

  // constant section on the trivial bundle: no winding anywhere
  CHECK(zero_current(bundle, Section::Ones(mesh->vertex_count())).indices.empty());
}

TEST_CASE("conjugation, scaling and gauge equivariance") {
  auto mesh = std::make_shared<const TriangleMesh>(make_flat_torus(8));
  const HermitianLineBundle bundle = flat_torus_bundle(mesh, 1);
  const LaplacianPair pair = connection_laplacian(bundle, laplacian_weights(*mesh));
  const SpectralData spec = eigensolve(pair, mesh->vertex_count(), mesh);

  CounterRng rng(29);
  for (int rep = 0; rep < 20; ++rep) {
    Section psi(mesh->vertex_count());
    for (int v = 0; v < psi.size(); ++v) psi[v] = rng.complex_normal();
    psi = heat_apply(spec, 0.05, psi);
    const ZeroCurrent current = zero_current(bundle, psi);
    CHECK(current.total() == 1);

    // conjugated section on the conjugated bundle: facewise negation
    const ZeroCurrent neg = zero_current(conjugate_bundle(bundle), psi.conjugate());
    REQUIRE(neg.indices.size() == current.indices.size());
    for (size_t i = 0; i < neg.indices.size(); ++i) {
      CHECK(neg.indices[i].first == current.indices[i].first);
      CHECK(neg.indices[i].second == -current.indices[i].second);
    }

    // scale invariance, exactly
    const cplx scale = 3.7 * rng.complex_normal();
    CHECK(zero_current(bundle, (scale * psi).eval()) == current);

    // gauge equivariance, exactly
    Eigen::VectorXcd u(mesh->vertex_count());
    for (int i = 0; i < u.size(); ++i) u[i] = std::polar(1.0, 2.0 * M_PI * rng.uniform01());
    const ZeroCurrent gauged =
        zero_current(gauge_transform(bundle, u), (u.array() * psi.array()).matrix());
    CHECK(gauged == current);
  }
}

TEST_CASE("pairing") {
  auto mesh = std::make_shared<const TriangleMesh>(make_flat_torus(4));
  const TestForm ones = constant_form(*mesh);

  ZeroCurrent current;
  current.indices = {{2, 1}, {5, -1}};
  CHECK(pair_current(current, ones) == 0.0);
  CHECK(pair_current(ZeroCurrent{}, ones) == 0.0);

  TestForm indicator{Eigen::VectorXd::Zero(mesh->face_count())};
  indicator.values[2] = 1.0;
  CHECK(pair_current(current, indicator) == 1.0);

  TestForm tiny{Eigen::VectorXd::Zero(2)};
  CHECK_THROWS_AS(pair_current(current, tiny), std::invalid_argument);
}

TEST_CASE("intersection currents on the projective line") {
  auto sphere = std::make_shared<const TriangleMesh>(make_sphere(2));
  CounterRng rng(31);

  // identity CP^1: one positive intersection per generic hyperplane
  const CPnImmersion identity = veronese_immersion(sphere, 1);
  const HermitianLineBundle pb1 = pancharatnam_pullback(identity);
  for (int rep = 0; rep < 20; ++rep) {
    const Hyperplane h = uniform_hyperplane(1, rng);
    const ZeroCurrent sigma = intersection_current(pb1, identity, h);
    REQUIRE(sigma.indices.size() == 1);
    CHECK(sigma.indices[0].second == 1);
  }

  // veronese degree 2: total +2
  const CPnImmersion v2 = veronese_immersion(sphere, 2);
  const HermitianLineBundle pb2 = pancharatnam_pullback(v2);
  for (int rep = 0; rep < 10; ++rep) {
    const Hyperplane h = uniform_hyperplane(2, rng);
    CHECK(intersection_current(pb2, v2, h).total() == 2);
  }
}

TEST_CASE("lemma: intersection current negates the smoothed zero current") {
  auto mesh = std::make_shared<const TriangleMesh>(make_flat_torus(8));
  const HermitianLineBundle bundle = flat_torus_bundle(mesh, 1);
  const LaplacianPair pair = connection_laplacian(bundle, laplacian_weights(*mesh));
  const SpectralData spec = eigensolve(pair, mesh->vertex_count(), mesh);

  CounterRng rng(37);
  for (double t : {0.05, 0.1, 0.5}) {
    const CPnImmersion embedding = heat_kernel_embedding(spec, t);
    const HermitianLineBundle pullback = pancharatnam_pullback(embedding);
    // the smoothed section's zeros live on the embedding's own pullback
    const HermitianLineBundle tautological = conjugate_bundle(pullback);
    int agree_e = 0;
    for (int rep = 0; rep < 20; ++rep) {
      Section psi(mesh->vertex_count());
      for (int v = 0; v < psi.size(); ++v) psi[v] = rng.complex_normal();
      const ZeroCurrent zeta = zero_current(tautological, heat_apply(spec, t, psi));
      const ZeroCurrent sigma =
          intersection_current(pullback, embedding, section_hyperplane(spec, psi));
      REQUIRE(sigma.indices.size() == zeta.indices.size());
      for (size_t i = 0; i < sigma.indices.size(); ++i) {
        CHECK(sigma.indices[i].first == zeta.indices[i].first);
        CHECK(sigma.indices[i].second == -zeta.indices[i].second);
      }
      // diagnostics: the E-bundle extraction agrees except for O(h)
      // vortex-to-face assignment flips near cell boundaries
      ZeroCurrent neg = sigma;
      for (auto& [f, n] : neg.indices) n = -n;
      if (zero_current(bundle, heat_apply(spec, t, psi)) == neg) ++agree_e;
      CHECK(zeta.total() == chern_number(face_curvature(bundle)));
    }
    MESSAGE("t=", t, ": E-extraction agreed on ", agree_e, "/20 samples");
  }
}
