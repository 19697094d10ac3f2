#include "rzc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "rzc/errors.hpp"

namespace rzc {

double TriangleMesh::face_area(int f) const {
  const auto& c = face_corners[static_cast<size_t>(f)];
  return 0.5 * ((c[1] - c[0]).cross(c[2] - c[0])).norm();
}

Eigen::Vector3d TriangleMesh::face_centroid(int f) const {
  const auto& c = face_corners[static_cast<size_t>(f)];
  return (c[0] + c[1] + c[2]) / 3.0;
}

double TriangleMesh::total_area() const {
  double s = 0.0;
  for (int f = 0; f < face_count(); ++f) s += face_area(f);
  return s;
}

double TriangleMesh::max_edge_length() const {
  double h = 0.0;
  for (int f = 0; f < face_count(); ++f) {
    const auto& c = face_corners[static_cast<size_t>(f)];
    for (int s = 0; s < 3; ++s) h = std::max(h, (c[(s + 1) % 3] - c[s]).norm());
  }
  return h;
}

void TriangleMesh::finalize() {
  if (face_corners.empty()) {
    face_corners.resize(faces.size());
    for (size_t f = 0; f < faces.size(); ++f)
      for (int s = 0; s < 3; ++s)
        face_corners[f][s] = vertices[static_cast<size_t>(faces[f][s])];
  }

  edges.clear();
  face_edges.assign(faces.size(), {-1, -1, -1});
  std::map<std::pair<int, int>, int> by_pair;  // (min,max) -> edge id

  for (int f = 0; f < face_count(); ++f) {
    for (int s = 0; s < 3; ++s) {
      const int a = faces[static_cast<size_t>(f)][static_cast<size_t>(s)];
      const int b = faces[static_cast<size_t>(f)][static_cast<size_t>((s + 1) % 3)];
      if (a == b) throw std::invalid_argument("face " + std::to_string(f) + " repeats a vertex");
      const auto key = std::minmax(a, b);
      auto it = by_pair.find(key);
      if (it == by_pair.end()) {
        Edge e;
        e.v0 = a;
        e.v1 = b;
        e.f_fwd = f;
        edges.push_back(e);
        by_pair.emplace(key, static_cast<int>(edges.size()) - 1);
        face_edges[static_cast<size_t>(f)][static_cast<size_t>(s)] = static_cast<int>(edges.size()) - 1;
      } else {
        Edge& e = edges[static_cast<size_t>(it->second)];
        if (a == e.v1 && b == e.v0) {
          if (e.f_rev >= 0)
            throw std::invalid_argument("non-manifold edge " + std::to_string(e.v0) + "-" +
                                        std::to_string(e.v1));
          e.f_rev = f;
        } else {
          throw std::invalid_argument("inconsistent orientation across edge " +
                                      std::to_string(e.v0) + "-" + std::to_string(e.v1));
        }
        face_edges[static_cast<size_t>(f)][static_cast<size_t>(s)] = it->second;
      }
    }
  }
  check_invariants();
}

void TriangleMesh::check_invariants() const {
  std::string open;
  for (const Edge& e : edges) {
    if (e.f_fwd < 0 || e.f_rev < 0) {
      if (!open.empty()) open += ", ";
      open += std::to_string(e.v0) + "-" + std::to_string(e.v1);
    }
  }
  if (!open.empty())
    throw std::invalid_argument("mesh has boundary edges: " + open);

  // every edge is traversed exactly once in each direction
  std::vector<int> fwd(edges.size(), 0), rev(edges.size(), 0);
  for (int f = 0; f < face_count(); ++f) {
    for (int s = 0; s < 3; ++s) {
      const int eid = face_edges[static_cast<size_t>(f)][static_cast<size_t>(s)];
      const Edge& e = edges[static_cast<size_t>(eid)];
      const int a = faces[static_cast<size_t>(f)][static_cast<size_t>(s)];
      const int b = faces[static_cast<size_t>(f)][static_cast<size_t>((s + 1) % 3)];
      if (a == e.v0 && b == e.v1 && e.f_fwd == f)
        ++fwd[static_cast<size_t>(eid)];
      else if (a == e.v1 && b == e.v0 && e.f_rev == f)
        ++rev[static_cast<size_t>(eid)];
      else
        throw std::invalid_argument("face/edge incidence mismatch at face " + std::to_string(f));
    }
  }
  for (size_t e = 0; e < edges.size(); ++e) {
    if (fwd[e] != 1 || rev[e] != 1)
      throw std::invalid_argument("edge " + std::to_string(e) +
                                  " is not traversed once in each direction");
  }

  for (int f = 0; f < face_count(); ++f) {
    if (face_area(f) <= 0.0)
      throw DegenerateGeometryError("face " + std::to_string(f) + " has zero area");
  }
}

TriangleMesh make_flat_torus(int N) {
  if (N < 2) throw std::invalid_argument("make_flat_torus: N must be >= 2");
  TriangleMesh m;
  m.torus_N = N;
  const double h = 1.0 / N;
  const auto vid = [N](int a, int b) { return ((a % N) + N) % N + N * (((b % N) + N) % N); };

  m.vertices.resize(static_cast<size_t>(N) * N);
  for (int b = 0; b < N; ++b)
    for (int a = 0; a < N; ++a)
      m.vertices[static_cast<size_t>(vid(a, b))] = Eigen::Vector3d(a * h, b * h, 0.0);

  // cell (a,b): lower face 2*(a+N*b), upper face 2*(a+N*b)+1
  const auto lower = [N](int a, int b) { return 2 * (((a % N) + N) % N + N * (((b % N) + N) % N)); };
  const auto upper = [&lower](int a, int b) { return lower(a, b) + 1; };

  m.faces.resize(static_cast<size_t>(2) * N * N);
  m.face_corners.resize(m.faces.size());
  for (int b = 0; b < N; ++b) {
    for (int a = 0; a < N; ++a) {
      const Eigen::Vector3d p00(a * h, b * h, 0.0), p10((a + 1) * h, b * h, 0.0);
      const Eigen::Vector3d p11((a + 1) * h, (b + 1) * h, 0.0), p01(a * h, (b + 1) * h, 0.0);
      m.faces[static_cast<size_t>(lower(a, b))] = {vid(a, b), vid(a + 1, b), vid(a + 1, b + 1)};
      m.face_corners[static_cast<size_t>(lower(a, b))] = {p00, p10, p11};
      m.faces[static_cast<size_t>(upper(a, b))] = {vid(a, b), vid(a + 1, b + 1), vid(a, b + 1)};
      m.face_corners[static_cast<size_t>(upper(a, b))] = {p00, p11, p01};
    }
  }

  // Edges are built explicitly: unordered vertex pairs do not identify edges
  // on small tori (N = 2 has parallel edges).
  m.edges.resize(static_cast<size_t>(3) * N * N);
  m.torus_edges.resize(m.edges.size());
  const auto xe = [N](int a, int b) { return 3 * (((a % N) + N) % N + N * (((b % N) + N) % N)); };
  const auto ye = [&xe](int a, int b) { return xe(a, b) + 1; };
  const auto de = [&xe](int a, int b) { return xe(a, b) + 2; };

  for (int b = 0; b < N; ++b) {
    for (int a = 0; a < N; ++a) {
      TriangleMesh::Edge ex;
      ex.v0 = vid(a, b);
      ex.v1 = vid(a + 1, b);
      ex.f_fwd = lower(a, b);
      ex.f_rev = upper(a, b - 1);
      m.edges[static_cast<size_t>(xe(a, b))] = ex;
      m.torus_edges[static_cast<size_t>(xe(a, b))] = {0, a, b};

      TriangleMesh::Edge ey;
      ey.v0 = vid(a, b);
      ey.v1 = vid(a, b + 1);
      ey.f_fwd = lower(a - 1, b);
      ey.f_rev = upper(a, b);
      m.edges[static_cast<size_t>(ye(a, b))] = ey;
      m.torus_edges[static_cast<size_t>(ye(a, b))] = {1, a, b};

      TriangleMesh::Edge ed;
      ed.v0 = vid(a, b);
      ed.v1 = vid(a + 1, b + 1);
      ed.f_fwd = upper(a, b);
      ed.f_rev = lower(a, b);
      m.edges[static_cast<size_t>(de(a, b))] = ed;
      m.torus_edges[static_cast<size_t>(de(a, b))] = {2, a, b};
    }
  }

  m.face_edges.resize(m.faces.size());
  for (int b = 0; b < N; ++b) {
    for (int a = 0; a < N; ++a) {
      m.face_edges[static_cast<size_t>(lower(a, b))] = {xe(a, b), ye(a + 1, b), de(a, b)};
      m.face_edges[static_cast<size_t>(upper(a, b))] = {de(a, b), xe(a, b + 1), ye(a, b)};
    }
  }

  m.check_invariants();
  return m;
}

namespace {

TriangleMesh icosahedron() {
  TriangleMesh m;
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  const double s = std::sqrt(1.0 + p * p);
  const auto v = [&](double x, double y, double z) {
    m.vertices.emplace_back(x / s, y / s, z / s);
  };
  v(-1, p, 0); v(1, p, 0); v(-1, -p, 0); v(1, -p, 0);
  v(0, -1, p); v(0, 1, p); v(0, -1, -p); v(0, 1, -p);
  v(p, 0, -1); v(p, 0, 1); v(-p, 0, -1); v(-p, 0, 1);
  m.faces = {{0, 11, 5},  {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},   {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},   {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},   {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  return m;
}

}  // namespace

TriangleMesh make_sphere(int subdivisions) {
  if (subdivisions < 0) throw std::invalid_argument("make_sphere: subdivisions must be >= 0");
  TriangleMesh m = icosahedron();
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    const auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::Vector3d p = (m.vertices[static_cast<size_t>(a)] + m.vertices[static_cast<size_t>(b)]).normalized();
      m.vertices.push_back(p);
      const int id = static_cast<int>(m.vertices.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.faces.size() * 4);
    for (const auto& f : m.faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.faces = std::move(next);
  }
  m.face_corners.clear();
  m.finalize();

  // orient outward
  double vol = 0.0;
  for (int f = 0; f < m.face_count(); ++f) {
    const auto& c = m.face_corners[static_cast<size_t>(f)];
    vol += c[0].dot((c[1] - c[0]).cross(c[2] - c[0]));
  }
  if (vol < 0.0) {
    for (auto& f : m.faces) std::swap(f[1], f[2]);
    m.face_corners.clear();
    m.finalize();
  }
  return m;
}

TriangleMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open OBJ file: " + path);
  TriangleMesh m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": malformed vertex");
      m.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> ids;
      std::string tok;
      while (ss >> tok) {
        const std::string head = tok.substr(0, tok.find('/'));
        int idx = std::stoi(head);
        if (idx < 0) idx = static_cast<int>(m.vertices.size()) + idx + 1;
        if (idx < 1 || idx > static_cast<int>(m.vertices.size()))
          throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                      ": vertex index out of range");
        ids.push_back(idx - 1);
      }
      if (ids.size() != 3)
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": only triangular faces are supported");
      m.faces.push_back({ids[0], ids[1], ids[2]});
    }
  }
  if (m.faces.empty()) throw std::invalid_argument(path + ": no faces");
  m.finalize();
  return m;
}

LaplacianWeights laplacian_weights(const TriangleMesh& mesh) {
  LaplacianWeights w;
  w.edge_weights = Eigen::VectorXd::Zero(mesh.edge_count());
  w.vertex_masses = Eigen::VectorXd::Zero(mesh.vertex_count());

  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& c = mesh.face_corners[static_cast<size_t>(f)];
    const double area = mesh.face_area(f);
    const double scale = (c[1] - c[0]).norm() * (c[2] - c[0]).norm();
    if (!(area > 1e-14 * std::max(scale, 1e-300)))
      throw DegenerateGeometryError("degenerate face " + std::to_string(f));
    for (int s = 0; s < 3; ++s) {
      // side s is opposite corner (s+2)%3
      const int opp = (s + 2) % 3;
      const Eigen::Vector3d u = c[static_cast<size_t>(s)] - c[static_cast<size_t>(opp)];
      const Eigen::Vector3d v = c[static_cast<size_t>((s + 1) % 3)] - c[static_cast<size_t>(opp)];
      const double cross = u.cross(v).norm();
      if (cross < 1e-14 * std::max(u.norm() * v.norm(), 1e-300))
        throw DegenerateGeometryError("degenerate corner angle in face " + std::to_string(f));
      w.edge_weights[mesh.face_edges[static_cast<size_t>(f)][static_cast<size_t>(s)]] +=
          0.5 * u.dot(v) / cross;
      w.vertex_masses[mesh.faces[static_cast<size_t>(f)][static_cast<size_t>(s)]] += area / 3.0;
    }
  }
  return w;
}

TestForm constant_form(const TriangleMesh& mesh, double value) {
  return {Eigen::VectorXd::Constant(mesh.face_count(), value)};
}

namespace {
inline double wrap01(double x) { return x - std::floor(x); }
inline double torus_dist1(double a, double b) {
  const double d = std::abs(wrap01(a) - wrap01(b));
  return std::min(d, 1.0 - d);
}
}  // namespace

TestForm half_torus_form(const TriangleMesh& mesh) {
  TestForm eta{Eigen::VectorXd::Zero(mesh.face_count())};
  for (int f = 0; f < mesh.face_count(); ++f)
    eta.values[f] = wrap01(mesh.face_centroid(f).x()) < 0.5 ? 1.0 : 0.0;
  return eta;
}

TestForm hemisphere_form(const TriangleMesh& mesh) {
  TestForm eta{Eigen::VectorXd::Zero(mesh.face_count())};
  for (int f = 0; f < mesh.face_count(); ++f)
    eta.values[f] = mesh.face_centroid(f).z() > 0.0 ? 1.0 : 0.0;
  return eta;
}

TestForm torus_bump_form(const TriangleMesh& mesh, double cx, double cy, double width) {
  TestForm eta{Eigen::VectorXd::Zero(mesh.face_count())};
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3d c = mesh.face_centroid(f);
    const double dx = torus_dist1(c.x(), cx);
    const double dy = torus_dist1(c.y(), cy);
    eta.values[f] = std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
  }
  return eta;
}

TestForm torus_box_form(const TriangleMesh& mesh, double cx, double cy, double half_width) {
  TestForm eta{Eigen::VectorXd::Zero(mesh.face_count())};
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3d c = mesh.face_centroid(f);
    eta.values[f] =
        (torus_dist1(c.x(), cx) < half_width && torus_dist1(c.y(), cy) < half_width) ? 1.0 : 0.0;
  }
  return eta;
}

}  // namespace rzc
