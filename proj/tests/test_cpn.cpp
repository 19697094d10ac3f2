#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rzc/bundle.hpp"
#include "rzc/cpn.hpp"
#include "rzc/errors.hpp"
#include "rzc/mesh.hpp"
#include "rzc/rng.hpp"

using namespace rzc;

namespace {

Eigen::MatrixXcd random_unitary(int n, CounterRng& rng) {
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.complex_normal();
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  Eigen::MatrixXcd q = qr.householderQ();
  // fix the diagonal phases so Q is haar-like rather than R-sign-skewed
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
  return q;
}

}  // namespace

TEST_CASE("projective volumes") {
  CHECK(cpn_volume(0) == 1.0);
  CHECK(cpn_volume(1) == doctest::Approx(M_PI).epsilon(1e-15));
  CHECK(cpn_volume(2) == doctest::Approx(M_PI * M_PI / 2.0).epsilon(1e-15));
  CHECK(cpn_volume(4) == doctest::Approx(std::pow(M_PI, 4) / 24.0).epsilon(1e-15));
}

TEST_CASE("uniform hyperplane moments and determinism") {
  const int n = 2;
  double second = 0.0;
  for (long s = 0; s < 10000; ++s) {
    CounterRng rng = sample_stream(13, static_cast<std::uint64_t>(s));
    const Hyperplane h = uniform_hyperplane(n, rng);
    second += h.psi.squaredNorm() / (n + 1);
  }
  second /= 10000.0;
  CHECK(std::abs(second - 2.0) < 0.05 * 2.0);

  CounterRng a = sample_stream(3, 8), b = sample_stream(3, 8);
  CHECK((uniform_hyperplane(4, a).psi - uniform_hyperplane(4, b).psi).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("veronese immersions are unit norm") {
  auto sphere = std::make_shared<const TriangleMesh>(make_sphere(2));
  for (int d : {1, 2, 3}) {
    const CPnImmersion imm = veronese_immersion(sphere, d);
    CHECK(imm.ambient_dim() == d);
    for (int p = 0; p < sphere->vertex_count(); ++p)
      CHECK(std::abs(imm.vectors.row(p).norm() - 1.0) < 1e-12);
  }
  auto torus = std::make_shared<const TriangleMesh>(make_flat_torus(4));
  CHECK_THROWS_AS(veronese_immersion(torus, 1), std::invalid_argument);
}

TEST_CASE("fubini-study areas of rational curves") {
  auto sphere = std::make_shared<const TriangleMesh>(make_sphere(3));
  const TestForm ones = constant_form(*sphere);
  for (int d : {1, 2, 3}) {
    const double area = fs_area_integral(veronese_immersion(sphere, d), ones);
    CHECK(std::abs(area - d) < 0.02 * d);
  }

  // constant immersion: zero area
  CPnImmersion constant;
  constant.mesh = sphere;
  constant.vectors = Eigen::MatrixXcd::Zero(sphere->vertex_count(), 2);
  for (int p = 0; p < sphere->vertex_count(); ++p) constant.vectors(p, 0) = 1.0;
  CHECK(fs_area_integral(constant, ones) == 0.0);

  // unitary invariance to 1e-10
  CounterRng rng(19);
  const CPnImmersion v2 = veronese_immersion(sphere, 2);
  CPnImmersion rotated = v2;
  rotated.vectors = v2.vectors * random_unitary(3, rng).transpose();
  CHECK(std::abs(fs_area_integral(rotated, ones) - fs_area_integral(v2, ones)) < 1e-10);
}

TEST_CASE("monte carlo intersection expectation") {
  auto sphere = std::make_shared<const TriangleMesh>(make_sphere(3));
  const TestForm ones = constant_form(*sphere);

  // identity CP^1: every sample is exactly one positive intersection
  std::vector<SampleRecord> records;
  const CPnImmersion identity = veronese_immersion(sphere, 1);
  const CurrentEstimate exact =
      mc_intersection_expectation(identity, ones, 300, 21, 2, &records);
  CHECK(exact.mean_pairing == 1.0);
  CHECK(exact.std_error == 0.0);
  for (const auto& r : records) {
    CHECK(r.pairing == 1.0);
    CHECK(r.n_plus == 1);
    CHECK(r.n_minus == 0);
  }

  // degree 3 with the constant form: topologically exact on both sides up to
  // roundoff in the holonomy sum
  const CPnImmersion v3 = veronese_immersion(sphere, 3);
  const CurrentEstimate est3 = mc_intersection_expectation(v3, ones, 2000, 23, 4);
  CHECK(est3.mean_pairing == 3.0);
  CHECK(est3.std_error == 0.0);
  CHECK(std::abs(est3.mean_pairing - fs_area_integral(v3, ones)) <= 1e-9);

  // a nonconstant form probes the spatial content
  const TestForm cap = [&] {
    TestForm form{Eigen::VectorXd::Zero(sphere->face_count())};
    for (int f = 0; f < sphere->face_count(); ++f) {
      const double z = sphere->face_centroid(f).normalized().z();
      form.values[f] = std::exp(-std::pow(std::acos(std::clamp(z, -1.0, 1.0)), 2));
    }
    return form;
  }();
  const CurrentEstimate capped = mc_intersection_expectation(v3, cap, 2000, 29, 4);
  CHECK(std::abs(capped.mean_pairing - fs_area_integral(v3, cap)) <= 3.0 * capped.std_error);

  // hemisphere indicator halves the area integral by symmetry
  const TestForm north = hemisphere_form(*sphere);
  const CurrentEstimate half = mc_intersection_expectation(identity, north, 2000, 25, 4);
  CHECK(std::abs(half.mean_pairing - 0.5) <= 3.0 * half.std_error + 0.01);

  // unitary invariance within 3 stderr of a paired run
  CounterRng rng(27);
  CPnImmersion rotated = v3;
  rotated.vectors = v3.vectors * random_unitary(4, rng).transpose();
  const CurrentEstimate rot = mc_intersection_expectation(rotated, ones, 2000, 23, 4);
  CHECK(std::abs(rot.mean_pairing - est3.mean_pairing) <=
        3.0 * std::hypot(rot.std_error, est3.std_error));
}

TEST_CASE("intersection report json") {
  CurrentEstimate est;
  est.mean_pairing = 3.01;
  est.std_error = 0.02;
  est.n_samples = 1000;
  const std::string path = "thm2_test.json";
  write_intersection_report_json(path, est, 3.0, 0.06);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  for (const char* key : {"\"lhs_mean\": 3.01", "\"lhs_stderr\": 0.02", "\"rhs\": 3.0",
                          "\"n_samples\": 1000", "\"slack\": 0.06"})
    CHECK(text.find(key) != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("degree via preimages") {
  auto sphere = std::make_shared<const TriangleMesh>(make_sphere(3));

  // identity map: exactly one preimage per point
  std::vector<SampleRecord> records;
  const CurrentEstimate identity =
      degree_via_preimages(spinor_power_map(sphere, 1), 300, 31, 2, &records);
  CHECK(identity.mean_pairing == 1.0);
  CHECK(identity.std_error == 0.0);
  for (const auto& r : records) CHECK(r.pairing == 1.0);

  // squared spinor: degree 2
  const CurrentEstimate squared = degree_via_preimages(spinor_power_map(sphere, 2), 2000, 33, 4);
  CHECK(std::abs(squared.mean_pairing - 2.0) <= 3.0 * squared.std_error);

  // constant map: no preimages, every sample zero
  const CurrentEstimate constant = degree_via_preimages(spinor_power_map(sphere, 0), 200, 35, 2);
  CHECK(constant.mean_pairing == 0.0);
  CHECK(constant.std_error == 0.0);

  const CPnImmersion v2 = veronese_immersion(sphere, 2);
  CHECK_THROWS_AS(degree_via_preimages(v2, 10, 1), std::invalid_argument);
}
