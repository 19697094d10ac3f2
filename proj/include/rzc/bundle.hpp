#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <iosfwd>
#include <string>

#include "rzc/immersion.hpp"
#include "rzc/mesh.hpp"

namespace rzc {

using cplx = std::complex<double>;

// Unit complex transport per edge, stored in the edge's v0 -> v1 direction;
// the reverse transport is the conjugate.
struct HermitianLineBundle {
  MeshPtr mesh;
  Eigen::VectorXcd transport;  // per edge

  // transport along face f's side s, in traversal direction
  cplx side_transport(int f, int s) const {
    const int e = mesh->face_edges[static_cast<size_t>(f)][static_cast<size_t>(s)];
    const cplx t = transport[e];
    return mesh->side_is_forward(f, s) ? t : std::conj(t);
  }

  void validate(double tol = 1e-12) const;
};

// Holonomy angle of each face boundary loop, in (-pi, pi].
struct FaceCurvature {
  Eigen::VectorXd omega;
};

HermitianLineBundle trivial_bundle(MeshPtr mesh);

// Hofstadter-type gauge on make_flat_torus(N) output with total flux 2*pi*d
// spread uniformly: every triangle carries pi*d/N^2.
HermitianLineBundle flat_torus_bundle(MeshPtr mesh, int d);

// Spanning-tree gauge reproducing `target` facewise to 1e-9. The 2*genus
// leftover cycle freedoms default to trivial holonomy; nonempty
// `harmonic_holonomies` assigns those edge angles instead (face curvature is
// unaffected, the spectrum is not).
HermitianLineBundle prescribed_curvature_bundle(MeshPtr mesh, const FaceCurvature& target,
                                                const std::vector<double>& harmonic_holonomies = {});

// Gaussian bump of total flux 2*pi*d centered at (cx, cy) on the unit torus.
FaceCurvature gaussian_bump_curvature(const TriangleMesh& mesh, int d, double sigma_b,
                                      double cx = 0.5, double cy = 0.5);

// Discrete pullback of the hyperplane-dual connection: r_ij = <h_j, h_i>/|.|
// with <a,b> = sum_k a_k conj(b_k). Degree-d rational curves come out with
// Chern number +d under this convention.
HermitianLineBundle pancharatnam_pullback(const CPnImmersion& immersion,
                                          double eps_panch = 1e-8);

FaceCurvature face_curvature(const HermitianLineBundle& bundle);

// round(total holonomy / 2 pi); throws NonQuantizedError beyond 1e-6.
int chern_number(const FaceCurvature& curv);

// Stiffness A with (A psi)_i = sum_j w_ij (psi_i - conj(r_ij) psi_j), and the
// diagonal lumped mass.
struct LaplacianPair {
  Eigen::SparseMatrix<cplx> stiffness;
  Eigen::VectorXd mass;
};

LaplacianPair connection_laplacian(const HermitianLineBundle& bundle,
                                   const LaplacianWeights& weights);

HermitianLineBundle conjugate_bundle(const HermitianLineBundle& bundle);

// r_ij -> u_j r_ij conj(u_i) for unit u
HermitianLineBundle gauge_transform(const HermitianLineBundle& bundle,
                                    const Eigen::VectorXcd& u);

// text format: one line per oriented edge "i j re im"
void save_bundle(std::ostream& out, const HermitianLineBundle& bundle);
void save_bundle(const std::string& path, const HermitianLineBundle& bundle);
HermitianLineBundle load_bundle(std::istream& in, MeshPtr mesh);
HermitianLineBundle load_bundle(const std::string& path, MeshPtr mesh);

void write_curvature_csv(const std::string& path, const FaceCurvature& curv);

}  // namespace rzc
