#include "rzc/zeros.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rzc/errors.hpp"

namespace rzc {

ZeroCurrent zero_current(const HermitianLineBundle& bundle, const Section& psi, double eps_zero) {
  const TriangleMesh& mesh = *bundle.mesh;
  if (psi.size() != mesh.vertex_count())
    throw std::invalid_argument("zero_current: section size mismatch");

  const double max_abs = psi.cwiseAbs().maxCoeff();
  if (!(max_abs > 0.0)) throw DegenerateSectionError("section vanishes identically");
  const double floor = eps_zero * max_abs;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (std::abs(psi[v]) < floor)
      throw DegenerateSectionError("section vanishes at vertex " + std::to_string(v));
  }

  ZeroCurrent current;
  double omega_sum = 0.0;
  int index_sum = 0;
  for (int f = 0; f < mesh.face_count(); ++f) {
    double delta_sum = 0.0;
    cplx hol = 1.0;
    for (int s = 0; s < 3; ++s) {
      const int a = mesh.faces[static_cast<size_t>(f)][static_cast<size_t>(s)];
      const int b = mesh.faces[static_cast<size_t>(f)][static_cast<size_t>((s + 1) % 3)];
      const cplx r = bundle.side_transport(f, s);
      const double delta = std::arg(psi[b] * std::conj(r * psi[a]));
      if (M_PI - std::abs(delta) < 1e-9)
        throw DegenerateSectionError("edge phase on the branch cut between vertices " +
                                     std::to_string(a) + " and " + std::to_string(b));
      delta_sum += delta;
      hol *= r;
    }
    const double omega = std::arg(hol);
    omega_sum += omega;
    const double winding = (delta_sum + omega) / (2.0 * M_PI);
    const double rounded = std::round(winding);
    if (std::abs(winding - rounded) > 1e-6)
      throw std::logic_error("non-integral winding " + std::to_string(winding) + " on face " +
                             std::to_string(f));
    const int n = static_cast<int>(rounded);
    if (n != 0) current.indices.emplace_back(f, n);
    index_sum += n;
  }

  // topological total: sum of indices equals the bundle's Chern number
  const int chern = static_cast<int>(std::round(omega_sum / (2.0 * M_PI)));
  if (index_sum != chern)
    throw std::logic_error("zero current total " + std::to_string(index_sum) +
                           " does not match Chern number " + std::to_string(chern));
  return current;
}

ZeroCurrent intersection_current(const HermitianLineBundle& pullback,
                                 const CPnImmersion& immersion, const Hyperplane& hyperplane) {
  if (hyperplane.psi.size() != immersion.vectors.cols())
    throw std::invalid_argument("hyperplane dimension mismatch");
  if (!(hyperplane.psi.norm() > 0.0)) throw std::invalid_argument("hyperplane vector is zero");
  // g_p = <h_p, psi> = sum_k (h_p)_k conj(psi_k)
  const Section g = immersion.vectors * hyperplane.psi.conjugate();
  return zero_current(pullback, g);
}

ZeroCurrent intersection_current(const CPnImmersion& immersion, const Hyperplane& hyperplane) {
  return intersection_current(pancharatnam_pullback(immersion), immersion, hyperplane);
}

double pair_current(const ZeroCurrent& current, const TestForm& eta) {
  double s = 0.0;
  for (const auto& [f, n] : current.indices) {
    if (f < 0 || f >= eta.values.size())
      throw std::invalid_argument("current face outside the test form's mesh");
    s += n * eta.values[f];
  }
  return s;
}

Hyperplane section_hyperplane(const SpectralData& spec, const Section& psi) {
  return {spec.coefficients(psi)};
}

void write_current_csv(const std::string& path, const ZeroCurrent& current) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "face_id,index\n";
  for (const auto& [f, n] : current.indices) out << f << ',' << n << '\n';
}

}  // namespace rzc
