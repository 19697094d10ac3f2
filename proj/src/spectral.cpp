#include "rzc/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "rzc/errors.hpp"

namespace rzc {

namespace {

double stiffness_norm_inf(const Eigen::SparseMatrix<cplx>& a) {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(a.rows());
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(a, k); it; ++it)
      row_sums[it.row()] += std::abs(it.value());
  return row_sums.maxCoeff();
}

void check_contracts(const LaplacianPair& pair, const Eigen::VectorXd& lambda,
                     const Eigen::MatrixXcd& vecs) {
  const double norm_a = stiffness_norm_inf(pair.stiffness);
  double worst = 0.0;
  for (int i = 0; i < lambda.size(); ++i) {
    const Eigen::VectorXcd r =
        pair.stiffness * vecs.col(i) - lambda[i] * pair.mass.asDiagonal() * vecs.col(i);
    worst = std::max(worst, r.norm());
  }
  if (worst > 1e-8 * norm_a)
    throw ConvergenceFailureError("eigen residual " + std::to_string(worst) + " exceeds 1e-8*" +
                                      std::to_string(norm_a),
                                  worst);
  const Eigen::MatrixXcd gram =
      vecs.adjoint() * pair.mass.asDiagonal() * vecs -
      Eigen::MatrixXcd::Identity(vecs.cols(), vecs.cols());
  const double ortho = gram.cwiseAbs().maxCoeff();
  if (ortho > 1e-10)
    throw ConvergenceFailureError("eigenvectors not M-orthonormal: " + std::to_string(ortho),
                                  ortho);
  if (lambda.size() > 0 && lambda[0] < -1e-8)
    throw ConvergenceFailureError("negative lowest eigenvalue " + std::to_string(lambda[0]),
                                  lambda[0]);
}

}  // namespace

SpectralData SpectralData::truncated(int k) const {
  if (k < 1 || k > count()) throw std::invalid_argument("truncation rank out of range");
  SpectralData out;
  out.eigenvalues = eigenvalues.head(k);
  out.eigenvectors = eigenvectors.leftCols(k);
  out.mass = mass;
  out.mesh = mesh;
  return out;
}

std::vector<int> SpectralData::ground_indices() const {
  const double tol = 1e-8 * (1.0 + eigenvalues[0]);
  std::vector<int> idx;
  for (int i = 0; i < count(); ++i)
    if (eigenvalues[i] <= eigenvalues[0] + tol) idx.push_back(i);
  return idx;
}

double SpectralData::spectral_gap() const {
  const auto g = ground_indices();
  if (static_cast<int>(g.size()) >= count())
    throw std::invalid_argument("all retained modes lie in the ground eigenspace");
  return eigenvalues[static_cast<int>(g.size())] - eigenvalues[0];
}

Eigen::VectorXcd SpectralData::coefficients(const Section& phi) const {
  // <phi, psi_i>_M = sum_v m_v phi_v conj(psi_i(v))
  return eigenvectors.adjoint() * (mass.asDiagonal() * phi);
}

SpectralData detail::eigensolve_dense(const LaplacianPair& pair, int k, MeshPtr mesh) {
  const int n = static_cast<int>(pair.stiffness.rows());
  const Eigen::VectorXd inv_sqrt_m = pair.mass.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXcd b = Eigen::MatrixXcd(pair.stiffness);
  b = inv_sqrt_m.asDiagonal() * b * inv_sqrt_m.asDiagonal();
  // symmetrize against assembly roundoff
  b = (b + b.adjoint().eval()) / 2.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(b);
  if (solver.info() != Eigen::Success)
    throw ConvergenceFailureError("dense eigensolver failed", 0.0);

  SpectralData spec;
  spec.eigenvalues = solver.eigenvalues().head(k);
  spec.eigenvectors = inv_sqrt_m.asDiagonal() * solver.eigenvectors().leftCols(k);
  spec.mass = pair.mass;
  spec.mesh = std::move(mesh);
  (void)n;
  check_contracts(pair, spec.eigenvalues, spec.eigenvectors);
  return spec;
}

SpectralData detail::eigensolve_lanczos(const LaplacianPair& pair, int k, MeshPtr mesh) {
  // Shift-invert Lanczos with full reorthogonalization on the operator
  // C = M^{1/2} (A + sigma M)^{-1} M^{1/2}, whose top eigenvalues 1/(lambda +
  // sigma) correspond to the lowest eigenvalues of (A, M).
  const int n = static_cast<int>(pair.stiffness.rows());
  const Eigen::VectorXd sqrt_m = pair.mass.cwiseSqrt();
  const Eigen::VectorXd inv_sqrt_m = sqrt_m.cwiseInverse();

  double diag_scale = 0.0;
  for (int i = 0; i < n; ++i)
    diag_scale = std::max(diag_scale, std::abs(pair.stiffness.coeff(i, i)) / pair.mass[i]);
  const double sigma = std::max(1e-3 * diag_scale, 1e-12);

  Eigen::SparseMatrix<cplx> shifted = pair.stiffness;
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += cplx(sigma * pair.mass[i], 0.0);
  shifted.makeCompressed();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<cplx>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success)
    throw ConvergenceFailureError("sparse factorization failed in shift-invert Lanczos", 0.0);

  const int m = std::min(n, std::max(2 * k + 30, 60));
  Eigen::MatrixXcd basis(n, m);
  Eigen::VectorXd alpha(m), beta(m);

  // deterministic start vector
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
  for (int i = 0; i < n; ++i)
    v[i] = cplx(std::cos(0.7 * (i + 1)), std::sin(1.3 * (i + 1) + 0.25));
  v /= v.norm();

  int built = 0;
  double prev_beta = 0.0;
  Eigen::VectorXcd prev = Eigen::VectorXcd::Zero(n);
  for (int j = 0; j < m; ++j) {
    basis.col(j) = v;
    Eigen::VectorXcd w = sqrt_m.asDiagonal() * v;
    w = ldlt.solve(w);
    w = sqrt_m.asDiagonal() * w;
    w -= prev_beta * prev;
    alpha[j] = std::real(v.dot(w));
    w -= alpha[j] * v;
    // full reorthogonalization, twice
    for (int pass = 0; pass < 2; ++pass)
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).adjoint() * w);
    built = j + 1;
    const double nb = w.norm();
    beta[j] = nb;
    if (nb < 1e-14) break;
    prev = v;
    prev_beta = nb;
    v = w / nb;
  }

  Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(built, built);
  for (int j = 0; j < built; ++j) {
    tri(j, j) = alpha[j];
    if (j + 1 < built) {
      tri(j, j + 1) = beta[j];
      tri(j + 1, j) = beta[j];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(tri);
  if (small.info() != Eigen::Success)
    throw ConvergenceFailureError("tridiagonal eigensolver failed", 0.0);
  if (built < k)
    throw ConvergenceFailureError("Lanczos space exhausted before k vectors", 0.0);

  // top Ritz values of C <-> lowest of (A, M)
  SpectralData spec;
  spec.eigenvalues.resize(k);
  spec.eigenvectors.resize(n, k);
  for (int i = 0; i < k; ++i) {
    const int col = built - 1 - i;
    const double mu = small.eigenvalues()[col];
    if (mu <= 0.0)
      throw ConvergenceFailureError("shift-invert produced nonpositive Ritz value", mu);
    spec.eigenvalues[i] = 1.0 / mu - sigma;
    const Eigen::VectorXcd y = basis.leftCols(built) * small.eigenvectors().col(col).cast<cplx>();
    spec.eigenvectors.col(i) = inv_sqrt_m.asDiagonal() * y;
  }
  // ascending
  for (int i = 0; i + 1 < k; ++i)
    if (spec.eigenvalues[i] > spec.eigenvalues[i + 1])
      throw ConvergenceFailureError("Lanczos Ritz values out of order", 0.0);
  spec.mass = pair.mass;
  spec.mesh = std::move(mesh);
  check_contracts(pair, spec.eigenvalues, spec.eigenvectors);
  return spec;
}

SpectralData eigensolve(const LaplacianPair& pair, int k, MeshPtr mesh) {
  const int n = static_cast<int>(pair.stiffness.rows());
  if (k < 1 || k > n) throw std::invalid_argument("eigensolve: k out of range");
  constexpr int kDenseLimit = 2000;
  if (n <= kDenseLimit) return detail::eigensolve_dense(pair, k, std::move(mesh));
  return detail::eigensolve_lanczos(pair, k, std::move(mesh));
}

int truncation_rank(const Eigen::VectorXd& eigenvalues, double t_min) {
  if (t_min <= 0.0) throw std::invalid_argument("truncation_rank: t_min must be positive");
  const double reach = std::log(1e12) / t_min;  // keep lambda - lambda_0 < reach
  int k = 0;
  while (k < eigenvalues.size() && eigenvalues[k] - eigenvalues[0] < reach) ++k;
  if (k < eigenvalues.size()) ++k;  // one guard mode at weight <= 1e-12
  return std::max(k, 1);
}

Section heat_apply(const SpectralData& spec, double t, const Section& psi) {
  if (t < 0.0) throw std::invalid_argument("heat_apply: t must be >= 0");
  if (psi.size() != spec.eigenvectors.rows())
    throw std::invalid_argument("heat_apply: section size mismatch");
  const Eigen::VectorXcd c = spec.coefficients(psi);
  const Eigen::VectorXd w = (-t * spec.eigenvalues.array()).exp();
  return spec.eigenvectors * (w.asDiagonal() * c);
}

CPnImmersion heat_kernel_embedding(const SpectralData& spec, double t) {
  if (t <= 0.0) throw std::invalid_argument("heat_kernel_embedding: t must be positive");
  const Eigen::VectorXd w = (-t * spec.eigenvalues.array()).exp();
  CPnImmersion imm;
  imm.mesh = spec.mesh;
  imm.vectors = spec.eigenvectors.conjugate() * w.asDiagonal();
  for (int p = 0; p < imm.vectors.rows(); ++p) {
    const double norm = imm.vectors.row(p).norm();
    if (norm < 1e-14)
      throw TruncationError("heat kernel column at vertex " + std::to_string(p) +
                            " collapsed below 1e-14; retain more modes or lower t");
    imm.vectors.row(p) /= norm;
  }
  return imm;
}

double mesh_floor_time(const TriangleMesh& mesh, double c_floor) {
  const double h = mesh.max_edge_length();
  return c_floor * h * h;
}

std::vector<ConvergenceRow> curvature_convergence_report(const HermitianLineBundle& bundle,
                                                         const SpectralData& spec,
                                                         const std::vector<double>& t_list,
                                                         double c_floor) {
  for (size_t i = 0; i + 1 < t_list.size(); ++i)
    if (t_list[i] <= t_list[i + 1])
      throw std::invalid_argument("curvature_convergence_report: t_list must be descending");
  const double t_floor = mesh_floor_time(*spec.mesh, c_floor);
  const FaceCurvature reference = face_curvature(bundle);

  std::vector<ConvergenceRow> rows;
  rows.reserve(t_list.size());
  for (double t : t_list) {
    ConvergenceRow row;
    row.t = t;
    row.reliable = t >= t_floor;
    try {
      const CPnImmersion imm = heat_kernel_embedding(spec, t);
      // tautological convention: conjugate of the hyperplane-dual pullback
      const FaceCurvature omega_t = face_curvature(conjugate_bundle(pancharatnam_pullback(imm)));
      row.sup_err = (omega_t.omega - reference.omega).cwiseAbs().maxCoeff();
      row.chern = chern_number(omega_t);
    } catch (const EmbeddingTooCoarseError& err) {
      row.note = err.what();
      row.sup_err = std::numeric_limits<double>::quiet_NaN();
      row.reliable = false;
    } catch (const TruncationError& err) {
      row.note = err.what();
      row.sup_err = std::numeric_limits<double>::quiet_NaN();
      row.reliable = false;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_eigenvalue_csv(const std::string& path, const Eigen::VectorXd& eigenvalues) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "index,lambda\n";
  out.precision(17);
  for (int i = 0; i < eigenvalues.size(); ++i) out << i << ',' << eigenvalues[i] << '\n';
}

void write_convergence_csv(const std::string& path, const std::vector<ConvergenceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,sup_err,chern,reliable\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.t << ',' << r.sup_err << ',' << r.chern << ',' << (r.reliable ? 1 : 0) << '\n';
}

}  // namespace rzc
