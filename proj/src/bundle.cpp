#include "rzc/bundle.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "rzc/errors.hpp"

namespace rzc {

void HermitianLineBundle::validate(double tol) const {
  for (int e = 0; e < mesh->edge_count(); ++e) {
    if (std::abs(std::abs(transport[e]) - 1.0) > tol)
      throw std::invalid_argument("transport on edge " + std::to_string(e) + " is not unitary");
  }
}

HermitianLineBundle trivial_bundle(MeshPtr mesh) {
  HermitianLineBundle b;
  b.transport = Eigen::VectorXcd::Ones(mesh->edge_count());
  b.mesh = std::move(mesh);
  return b;
}

HermitianLineBundle flat_torus_bundle(MeshPtr mesh, int d) {
  const int N = mesh->torus_N;
  if (N <= 0 || mesh->torus_edges.size() != static_cast<size_t>(mesh->edge_count()))
    throw std::invalid_argument("flat_torus_bundle: mesh was not built by make_flat_torus");
  if (std::abs(d) >= static_cast<long>(N) * N)
    throw BranchOverflowError("flat_torus_bundle: |d| must be < N^2");

  const double flux = 2.0 * M_PI * d / (static_cast<double>(N) * N);  // per square cell
  // Landau gauge with the periodic seam correction on the last column.
  const auto theta_x = [&](int a, int b) {
    return a == N - 1 ? -2.0 * M_PI * d * b / N : 0.0;
  };
  const auto theta_y = [&](int a, int) { return 2.0 * M_PI * d * a / (static_cast<double>(N) * N); };

  HermitianLineBundle bundle;
  bundle.mesh = mesh;
  bundle.transport.resize(mesh->edge_count());
  for (int e = 0; e < mesh->edge_count(); ++e) {
    const auto& ref = mesh->torus_edges[static_cast<size_t>(e)];
    double th = 0.0;
    switch (ref.kind) {
      case 0: th = theta_x(ref.a, ref.b); break;
      case 1: th = theta_y(ref.a, ref.b); break;
      // diagonal splits the cell flux equally between its two triangles
      case 2: th = theta_x(ref.a, ref.b) + theta_y((ref.a + 1) % N, ref.b) - 0.5 * flux; break;
      default: throw std::logic_error("bad torus edge kind");
    }
    bundle.transport[e] = std::polar(1.0, th);
  }
  return bundle;
}

FaceCurvature face_curvature(const HermitianLineBundle& bundle) {
  const TriangleMesh& mesh = *bundle.mesh;
  FaceCurvature curv{Eigen::VectorXd::Zero(mesh.face_count())};
  for (int f = 0; f < mesh.face_count(); ++f) {
    cplx hol = 1.0;
    for (int s = 0; s < 3; ++s) hol *= bundle.side_transport(f, s);
    curv.omega[f] = std::arg(hol);
  }
  return curv;
}

int chern_number(const FaceCurvature& curv) {
  const double total = curv.omega.sum() / (2.0 * M_PI);
  const double nearest = std::round(total);
  if (std::abs(total - nearest) > 1e-6)
    throw NonQuantizedError("total curvature / 2 pi = " + std::to_string(total) +
                            " is not an integer");
  return static_cast<int>(nearest);
}

FaceCurvature gaussian_bump_curvature(const TriangleMesh& mesh, int d, double sigma_b,
                                      double cx, double cy) {
  if (mesh.torus_N <= 0)
    throw std::invalid_argument("gaussian_bump_curvature requires a flat torus");
  if (sigma_b <= 0.0) throw std::invalid_argument("sigma_b must be positive");
  Eigen::VectorXd g(mesh.face_count());
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3d c = mesh.face_centroid(f);
    double dx = std::abs(c.x() - std::floor(c.x()) - cx);
    dx = std::min(dx, 1.0 - dx);
    double dy = std::abs(c.y() - std::floor(c.y()) - cy);
    dy = std::min(dy, 1.0 - dy);
    g[f] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_b * sigma_b));
  }
  g *= 2.0 * M_PI * d / g.sum();
  if (g.cwiseAbs().maxCoeff() >= M_PI)
    throw BranchOverflowError("bump curvature exceeds the principal branch; widen sigma_b");
  return {g};
}

HermitianLineBundle prescribed_curvature_bundle(MeshPtr mesh, const FaceCurvature& target,
                                                const std::vector<double>& harmonic_holonomies) {
  const TriangleMesh& m = *mesh;
  if (target.omega.size() != m.face_count())
    throw std::invalid_argument("curvature target size mismatch");

  const double total = target.omega.sum();
  const double cycles = total / (2.0 * M_PI);
  if (std::abs(cycles - std::round(cycles)) > 1e-6)
    throw QuantizationError("target flux " + std::to_string(total) +
                            " is not an integer multiple of 2 pi");
  for (int f = 0; f < m.face_count(); ++f) {
    if (std::abs(target.omega[f]) >= M_PI)
      throw BranchOverflowError("target curvature on face " + std::to_string(f) +
                                " is outside (-pi, pi)");
  }
  // fold the quantization residual uniformly so the telescoped root face
  // lands on its target
  Eigen::VectorXd adj = target.omega;
  adj.array() -= (total - 2.0 * M_PI * std::round(cycles)) / m.face_count();

  // spanning tree of the vertex graph
  std::vector<char> in_tree(static_cast<size_t>(m.edge_count()), 0);
  {
    std::vector<char> seen(static_cast<size_t>(m.vertex_count()), 0);
    std::vector<std::vector<int>> incident(static_cast<size_t>(m.vertex_count()));
    for (int e = 0; e < m.edge_count(); ++e) {
      incident[static_cast<size_t>(m.edges[static_cast<size_t>(e)].v0)].push_back(e);
      incident[static_cast<size_t>(m.edges[static_cast<size_t>(e)].v1)].push_back(e);
    }
    std::deque<int> queue{0};
    seen[0] = 1;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int e : incident[static_cast<size_t>(v)]) {
        const auto& ed = m.edges[static_cast<size_t>(e)];
        const int w = ed.v0 == v ? ed.v1 : ed.v0;
        if (!seen[static_cast<size_t>(w)]) {
          seen[static_cast<size_t>(w)] = 1;
          in_tree[static_cast<size_t>(e)] = 1;
          queue.push_back(w);
        }
      }
    }
  }

  // dual spanning tree over faces through non-tree edges; process leaves
  // inward, each face fixing the edge toward its parent
  std::vector<double> theta(static_cast<size_t>(m.edge_count()), 0.0);
  std::vector<char> known = in_tree;  // tree edges carry theta = 0

  std::vector<int> parent_edge(static_cast<size_t>(m.face_count()), -1);
  std::vector<int> order;
  order.reserve(static_cast<size_t>(m.face_count()));
  {
    std::vector<char> crossed(static_cast<size_t>(m.edge_count()), 0);
    std::vector<char> visited(static_cast<size_t>(m.face_count()), 0);
    std::deque<int> queue{0};
    visited[0] = 1;
    while (!queue.empty()) {
      const int f = queue.front();
      queue.pop_front();
      order.push_back(f);
      for (int s = 0; s < 3; ++s) {
        const int e = m.face_edges[static_cast<size_t>(f)][static_cast<size_t>(s)];
        if (in_tree[static_cast<size_t>(e)]) continue;
        const auto& ed = m.edges[static_cast<size_t>(e)];
        const int g = ed.f_fwd == f ? ed.f_rev : ed.f_fwd;
        if (!visited[static_cast<size_t>(g)]) {
          visited[static_cast<size_t>(g)] = 1;
          parent_edge[static_cast<size_t>(g)] = e;
          crossed[static_cast<size_t>(e)] = 1;
          queue.push_back(g);
        }
      }
    }
    // leftover edges (neither tree nor dual-tree) carry the 2g harmonic
    // cycle freedoms; trivial unless angles were supplied
    std::vector<int> leftover;
    for (int e = 0; e < m.edge_count(); ++e)
      if (!in_tree[static_cast<size_t>(e)] && !crossed[static_cast<size_t>(e)])
        leftover.push_back(e);
    if (!harmonic_holonomies.empty() && harmonic_holonomies.size() != leftover.size())
      throw std::invalid_argument("expected " + std::to_string(leftover.size()) +
                                  " harmonic holonomies, got " +
                                  std::to_string(harmonic_holonomies.size()));
    for (size_t i = 0; i < leftover.size(); ++i) {
      if (!harmonic_holonomies.empty())
        theta[static_cast<size_t>(leftover[i])] = harmonic_holonomies[i];
      known[static_cast<size_t>(leftover[i])] = 1;
    }
  }

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int f = *it;
    const int fix = parent_edge[static_cast<size_t>(f)];
    if (fix < 0) continue;  // dual root: holonomy telescopes to its target
    double acc = 0.0;
    double sign = 0.0;
    for (int s = 0; s < 3; ++s) {
      const int e = m.face_edges[static_cast<size_t>(f)][static_cast<size_t>(s)];
      const double orient = m.side_is_forward(f, s) ? 1.0 : -1.0;
      if (e == fix) {
        sign = orient;
      } else {
        if (!known[static_cast<size_t>(e)])
          throw std::logic_error("dual traversal hit two unknown edges on one face");
        acc += orient * theta[static_cast<size_t>(e)];
      }
    }
    theta[static_cast<size_t>(fix)] = (adj[f] - acc) / sign;
    known[static_cast<size_t>(fix)] = 1;
  }

  HermitianLineBundle bundle;
  bundle.mesh = std::move(mesh);
  bundle.transport.resize(m.edge_count());
  for (int e = 0; e < m.edge_count(); ++e)
    bundle.transport[e] = std::polar(1.0, theta[static_cast<size_t>(e)]);

  const FaceCurvature realized = face_curvature(bundle);
  const double worst = (realized.omega - target.omega).cwiseAbs().maxCoeff();
  if (worst > 1e-9)
    throw QuantizationError("prescribed curvature solve residual " + std::to_string(worst));
  return bundle;
}

HermitianLineBundle pancharatnam_pullback(const CPnImmersion& immersion, double eps_panch) {
  const TriangleMesh& mesh = *immersion.mesh;
  if (immersion.vectors.rows() != mesh.vertex_count())
    throw std::invalid_argument("immersion vertex count mismatch");
  HermitianLineBundle bundle;
  bundle.mesh = immersion.mesh;
  bundle.transport.resize(mesh.edge_count());
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const auto& ed = mesh.edges[static_cast<size_t>(e)];
    // hyperplane-dual convention: r_{v0 v1} = <h_{v1}, h_{v0}> / |.|
    const cplx z = (immersion.vectors.row(ed.v1) * immersion.vectors.row(ed.v0).adjoint())(0, 0);
    if (std::abs(z) < eps_panch)
      throw EmbeddingTooCoarseError("near-orthogonal immersion vectors on edge " +
                                        std::to_string(ed.v0) + "-" + std::to_string(ed.v1),
                                    ed.v0, ed.v1);
    bundle.transport[e] = z / std::abs(z);
  }
  return bundle;
}

LaplacianPair connection_laplacian(const HermitianLineBundle& bundle,
                                   const LaplacianWeights& weights) {
  const TriangleMesh& mesh = *bundle.mesh;
  if (weights.edge_weights.size() != mesh.edge_count() ||
      weights.vertex_masses.size() != mesh.vertex_count())
    throw std::invalid_argument("weights were built from a different mesh");

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<size_t>(mesh.edge_count()) * 4);
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const auto& ed = mesh.edges[static_cast<size_t>(e)];
    const double w = weights.edge_weights[e];
    const cplx r = bundle.transport[e];  // v0 -> v1
    trip.emplace_back(ed.v0, ed.v0, cplx(w, 0.0));
    trip.emplace_back(ed.v1, ed.v1, cplx(w, 0.0));
    trip.emplace_back(ed.v0, ed.v1, -w * std::conj(r));
    trip.emplace_back(ed.v1, ed.v0, -w * r);
  }
  LaplacianPair pair;
  pair.stiffness.resize(mesh.vertex_count(), mesh.vertex_count());
  pair.stiffness.setFromTriplets(trip.begin(), trip.end());
  pair.mass = weights.vertex_masses;
  return pair;
}

HermitianLineBundle conjugate_bundle(const HermitianLineBundle& bundle) {
  HermitianLineBundle out;
  out.mesh = bundle.mesh;
  out.transport = bundle.transport.conjugate();
  return out;
}

HermitianLineBundle gauge_transform(const HermitianLineBundle& bundle,
                                    const Eigen::VectorXcd& u) {
  const TriangleMesh& mesh = *bundle.mesh;
  if (u.size() != mesh.vertex_count()) throw std::invalid_argument("gauge size mismatch");
  HermitianLineBundle out;
  out.mesh = bundle.mesh;
  out.transport.resize(mesh.edge_count());
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const auto& ed = mesh.edges[static_cast<size_t>(e)];
    const cplx ui = u[ed.v0] / std::abs(u[ed.v0]);
    const cplx uj = u[ed.v1] / std::abs(u[ed.v1]);
    out.transport[e] = uj * bundle.transport[e] * std::conj(ui);
  }
  return out;
}

void save_bundle(std::ostream& out, const HermitianLineBundle& bundle) {
  const TriangleMesh& mesh = *bundle.mesh;
  out.precision(17);
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const auto& ed = mesh.edges[static_cast<size_t>(e)];
    const cplx r = bundle.transport[e];
    out << ed.v0 << ' ' << ed.v1 << ' ' << r.real() << ' ' << r.imag() << '\n';
    out << ed.v1 << ' ' << ed.v0 << ' ' << r.real() << ' ' << -r.imag() << '\n';
  }
}

void save_bundle(const std::string& path, const HermitianLineBundle& bundle) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_bundle(out, bundle);
}

HermitianLineBundle load_bundle(std::istream& in, MeshPtr mesh) {
  // Lines come in v0->v1 / v1->v0 pairs in edge order, matching save_bundle.
  HermitianLineBundle bundle;
  bundle.transport.resize(mesh->edge_count());
  for (int e = 0; e < mesh->edge_count(); ++e) {
    int i0, j0, i1, j1;
    double re0, im0, re1, im1;
    if (!(in >> i0 >> j0 >> re0 >> im0 >> i1 >> j1 >> re1 >> im1))
      throw std::runtime_error("bundle file truncated at edge " + std::to_string(e));
    const auto& ed = mesh->edges[static_cast<size_t>(e)];
    if (i0 != ed.v0 || j0 != ed.v1 || i1 != ed.v1 || j1 != ed.v0)
      throw std::runtime_error("bundle file edge order mismatch at edge " + std::to_string(e));
    const cplx fwd(re0, im0), rev(re1, im1);
    if (std::abs(fwd * rev - cplx(1.0, 0.0)) > 1e-12)
      throw std::runtime_error("bundle file transports are not conjugate on edge " +
                               std::to_string(e));
    bundle.transport[e] = fwd;
  }
  bundle.mesh = std::move(mesh);
  bundle.validate();
  return bundle;
}

HermitianLineBundle load_bundle(const std::string& path, MeshPtr mesh) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_bundle(in, std::move(mesh));
}

void write_curvature_csv(const std::string& path, const FaceCurvature& curv) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "face_id,omega\n";
  out.precision(17);
  for (int f = 0; f < curv.omega.size(); ++f) out << f << ',' << curv.omega[f] << '\n';
}

}  // namespace rzc
