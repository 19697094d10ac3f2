#pragma once

#include <stdexcept>
#include <string>

namespace rzc {

// Geometry with a zero-area or otherwise unusable face.
struct DegenerateGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Curvature target whose total flux is not an integer multiple of 2*pi.
struct QuantizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A face curvature at or beyond the principal branch (|omega| >= pi).
struct BranchOverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An immersion whose adjacent vertex vectors are near-orthogonal; the
// Pancharatnam transport is not resolved on that edge.
struct EmbeddingTooCoarseError : std::runtime_error {
  EmbeddingTooCoarseError(const std::string& msg, int v0, int v1)
      : std::runtime_error(msg), edge_v0(v0), edge_v1(v1) {}
  int edge_v0;
  int edge_v1;
};

// Heat-kernel column collapsed below representable norm before normalization.
struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A section with a vertex zero or an edge phase on the branch cut; the
// winding extraction is not defined and the caller is expected to resample.
struct DegenerateSectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// More than the allowed number of consecutive degenerate resamples; signals a
// non-generic configuration rather than bad luck.
struct DegenerateMeasureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceFailureError : std::runtime_error {
  ConvergenceFailureError(const std::string& msg, double worst)
      : std::runtime_error(msg), worst_residual(worst) {}
  double worst_residual;
};

struct NonQuantizedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config-file problems, anchored to a line number (0 = file level).
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& msg, int line_no)
      : std::runtime_error(msg), line(line_no) {}
  int line;
};

}  // namespace rzc
