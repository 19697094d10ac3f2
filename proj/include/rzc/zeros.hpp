#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "rzc/bundle.hpp"
#include "rzc/immersion.hpp"
#include "rzc/mesh.hpp"
#include "rzc/spectral.hpp"

namespace rzc {

// Sparse face -> winding index map; the total equals the Chern number of the
// bundle the current was extracted over.
struct ZeroCurrent {
  std::vector<std::pair<int, int>> indices;  // (face, index), face-sorted, index != 0

  int total() const {
    int s = 0;
    for (const auto& [f, n] : indices) s += n;
    return s;
  }
  int count_plus() const {
    int s = 0;
    for (const auto& [f, n] : indices)
      if (n > 0) s += n;
    return s;
  }
  int count_minus() const {
    int s = 0;
    for (const auto& [f, n] : indices)
      if (n < 0) s -= n;
    return s;
  }
  bool operator==(const ZeroCurrent& other) const { return indices == other.indices; }
};

struct Hyperplane {
  Eigen::VectorXcd psi;  // nonzero vector in C^{n+1}
};

// Winding extraction: per side delta = arg(psi_j conj(r_ij psi_i)) in
// (-pi, pi], per face n_f = (sum delta + omega_f)/2pi. Vertex values below
// eps_zero * max|psi| or side phases within 1e-9 of the branch cut throw
// DegenerateSectionError (callers resample).
ZeroCurrent zero_current(const HermitianLineBundle& bundle, const Section& psi,
                         double eps_zero = 1e-12);

// Intersection current of the immersed surface with the hyperplane [psi^perp]:
// winding of g_p = <h_p, psi> over the immersion's Pancharatnam pullback.
ZeroCurrent intersection_current(const CPnImmersion& immersion, const Hyperplane& hyperplane);
// fast path with the pullback bundle precomputed
ZeroCurrent intersection_current(const HermitianLineBundle& pullback,
                                 const CPnImmersion& immersion, const Hyperplane& hyperplane);

// <current | eta> = sum_f n_f eta_f
double pair_current(const ZeroCurrent& current, const TestForm& eta);

// Coefficient vector of a section in the retained eigenbasis; the hyperplane
// [psi^perp] of the heat-kernel embedding picture.
Hyperplane section_hyperplane(const SpectralData& spec, const Section& psi);

void write_current_csv(const std::string& path, const ZeroCurrent& current);

}  // namespace rzc
