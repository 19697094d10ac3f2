#pragma once

#include <cstdint>
#include <vector>

#include "rzc/immersion.hpp"
#include "rzc/mesh.hpp"
#include "rzc/rng.hpp"
#include "rzc/sampling.hpp"
#include "rzc/zeros.hpp"

namespace rzc {

// vol(CP^n) = pi^n / n!
double cpn_volume(int n);

// Standard complex Gaussian in C^{n+1}; its projective class is uniform.
Hyperplane uniform_hyperplane(int n, CounterRng& rng);

// Degree-d rational normal curve through the spinor chart: component k is
// sqrt(binom(d,k)) z0^{d-k} z1^k with z0 = cos(theta/2), z1 = sin(theta/2)e^{i phi}.
CPnImmersion veronese_immersion(MeshPtr sphere_mesh, int degree);

// Vertexwise (z0^d, z1^d)/norm into CP^1 (degree-d self-map of the sphere).
CPnImmersion spinor_power_map(MeshPtr sphere_mesh, int d);

// (1/pi) sum_f (Omega_f / 2) eta_f over the immersion's Pancharatnam pullback;
// the half-holonomy is the discrete Fubini-Study pullback integrand.
double fs_area_integral(const CPnImmersion& immersion, const TestForm& eta);

// Monte Carlo mean of <sigma_{f,H} | eta> over uniform hyperplanes H.
CurrentEstimate mc_intersection_expectation(const CPnImmersion& immersion, const TestForm& eta,
                                            long n_samples, std::uint64_t master_seed,
                                            int workers = 1,
                                            std::vector<SampleRecord>* records = nullptr);

// Signed preimage counts of uniform points of CP^1 through the same
// machinery; the mean estimates the degree of the map.
CurrentEstimate degree_via_preimages(const CPnImmersion& map, long n_samples,
                                     std::uint64_t master_seed, int workers = 1,
                                     std::vector<SampleRecord>* records = nullptr);

// {"lhs_mean": ..., "lhs_stderr": ..., "rhs": ..., "n_samples": ..., "slack": ...}
void write_intersection_report_json(const std::string& path, const CurrentEstimate& estimate,
                                    double rhs, double slack);

}  // namespace rzc
