#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <string>
#include <vector>

namespace rzc {

// Closed oriented triangle mesh. Geometry (areas, angles) is taken from
// per-face corner positions, which coincide with vertex positions except on
// the flat torus where seam faces are unwrapped to their true flat shape.
//
// Parallel edges are allowed (the 2x2 torus has them), so edges are explicit
// objects and faces reference edge ids side by side instead of vertex pairs.
struct TriangleMesh {
  struct Edge {
    int v0 = -1, v1 = -1;   // endpoints; transport direction v0 -> v1
    int f_fwd = -1;         // face traversing v0 -> v1
    int f_rev = -1;         // face traversing v1 -> v0
  };

  // Grid identity of a flat-torus edge (used by the Hofstadter gauge).
  struct TorusEdgeRef {
    int kind = -1;  // 0 = x, 1 = y, 2 = diagonal
    int a = 0, b = 0;
  };

  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;                    // ccw vertex ids
  std::vector<std::array<Eigen::Vector3d, 3>> face_corners; // geometry per corner
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> face_edges;  // edge id of side s: faces[f][s] -> faces[f][(s+1)%3]

  int torus_N = 0;  // > 0 when built by make_flat_torus
  std::vector<TorusEdgeRef> torus_edges;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }
  int euler_characteristic() const { return vertex_count() - edge_count() + face_count(); }

  // true when face f traverses edge e from v0 to v1
  bool side_is_forward(int f, int s) const {
    const Edge& e = edges[static_cast<size_t>(face_edges[f][s])];
    return e.f_fwd == f && faces[f][s] == e.v0;
  }

  double face_area(int f) const;
  Eigen::Vector3d face_centroid(int f) const;  // from face corners (unwrapped on tori)
  double total_area() const;
  double max_edge_length() const;

  // Builds edges/face_edges from the face list (meshes without parallel
  // edges), then checks closedness and orientation consistency.
  void finalize();
  // Invariant checks shared with explicitly-built meshes.
  void check_invariants() const;
};

TriangleMesh make_flat_torus(int N);
TriangleMesh make_sphere(int subdivisions);
TriangleMesh load_obj(const std::string& path);

// Cotangent edge weights and lumped (1/3-area) vertex masses.
struct LaplacianWeights {
  Eigen::VectorXd edge_weights;   // per edge
  Eigen::VectorXd vertex_masses;  // per vertex, positive
};

LaplacianWeights laplacian_weights(const TriangleMesh& mesh);

// Degree-0 test form: one real value per face.
struct TestForm {
  Eigen::VectorXd values;
};

TestForm constant_form(const TriangleMesh& mesh, double value = 1.0);
// Indicator of faces whose wrapped centroid has x < 0.5 (flat torus).
TestForm half_torus_form(const TriangleMesh& mesh);
// Indicator of faces with centroid z > 0 (sphere).
TestForm hemisphere_form(const TriangleMesh& mesh);
// Smooth bump exp(-d^2 / (2 width^2)) of torus-wrapped centroid distance.
TestForm torus_bump_form(const TriangleMesh& mesh, double cx, double cy, double width);
// Indicator of the square of half-width 0.25 around (cx, cy), torus-wrapped.
TestForm torus_box_form(const TriangleMesh& mesh, double cx, double cy, double half_width = 0.25);

using MeshPtr = std::shared_ptr<const TriangleMesh>;

}  // namespace rzc
