#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rzc/bundle.hpp"
#include "rzc/immersion.hpp"
#include "rzc/mesh.hpp"

namespace rzc {

using Section = Eigen::VectorXcd;  // one fiber coordinate per vertex

// Lowest eigenpairs of A x = lambda M x. Eigenvectors are M-orthonormal
// columns; residual and orthonormality contracts are checked at solve time.
struct SpectralData {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXcd eigenvectors; // V x k
  Eigen::VectorXd mass;
  MeshPtr mesh;

  int count() const { return static_cast<int>(eigenvalues.size()); }
  SpectralData truncated(int k) const;

  // ground eigenspace Eig_0 = { i : lambda_i <= lambda_0 + tol_deg },
  // tol_deg = 1e-8 (1 + lambda_0)
  std::vector<int> ground_indices() const;
  double spectral_gap() const;  // lambda_{|Eig0|} - lambda_0

  // <phi, psi_i>_M for all retained i, linear in phi
  Eigen::VectorXcd coefficients(const Section& phi) const;
};

// Dense full decomposition for <= dense_limit vertices, shift-invert Lanczos
// above it; both paths satisfy residual <= 1e-8 ||A||_inf and M-orthonormality
// to 1e-10 or throw ConvergenceFailureError.
SpectralData eigensolve(const LaplacianPair& pair, int k, MeshPtr mesh = nullptr);

namespace detail {
SpectralData eigensolve_dense(const LaplacianPair& pair, int k, MeshPtr mesh);
SpectralData eigensolve_lanczos(const LaplacianPair& pair, int k, MeshPtr mesh);
}  // namespace detail

// Number of eigenpairs to keep so the dropped heat weights at time t_min are
// below 1e-12: all i with e^{-t_min (lambda_i - lambda_0)} > 1e-12 plus one
// guard mode, capped at the retained count.
int truncation_rank(const Eigen::VectorXd& eigenvalues, double t_min);

// S_t psi = sum_i e^{-t lambda_i} <psi, psi_i>_M psi_i over the retained span
Section heat_apply(const SpectralData& spec, double t, const Section& psi);

// Row p is the normalized coefficient vector (e^{-t lambda_i} conj(psi_i(p))),
// i.e. the smoothed Dirac delta at p in eigen coordinates; the Gram matrix is
// proportional to the heat kernel at time 2t.
CPnImmersion heat_kernel_embedding(const SpectralData& spec, double t);

double mesh_floor_time(const TriangleMesh& mesh, double c_floor = 1.0);

struct ConvergenceRow {
  double t = 0.0;
  double sup_err = 0.0;
  int chern = 0;
  bool reliable = false;
  std::string note;  // nonempty when the embedding failed at this t
};

// Omega^t = face curvature of the tautological pullback (conjugate of the
// hyperplane-dual Pancharatnam pullback) of the heat kernel embedding at t,
// compared facewise against the bundle's curvature. t_list must be descending.
std::vector<ConvergenceRow> curvature_convergence_report(const HermitianLineBundle& bundle,
                                                         const SpectralData& spec,
                                                         const std::vector<double>& t_list,
                                                         double c_floor = 1.0);

void write_eigenvalue_csv(const std::string& path, const Eigen::VectorXd& eigenvalues);
void write_convergence_csv(const std::string& path, const std::vector<ConvergenceRow>& rows);

}  // namespace rzc
