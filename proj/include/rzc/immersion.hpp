#pragma once

#include <Eigen/Dense>

#include "rzc/mesh.hpp"

namespace rzc {

// Vertex map into CP^n represented by unit vectors in C^{n+1}, one per vertex
// (row p of `vectors` is h_p).
struct CPnImmersion {
  MeshPtr mesh;
  Eigen::MatrixXcd vectors;  // V x (n+1)

  int ambient_dim() const { return static_cast<int>(vectors.cols()) - 1; }
};

}  // namespace rzc
