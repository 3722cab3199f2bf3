#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace promforge::sampling {

struct ParamRange {
  double min = 0.0;
  double max = 1.0;
  std::string unit;
};

/// Box of admissible physical parameters.
struct ParamBounds {
  std::vector<ParamRange> ranges;

  int dims() const { return static_cast<int>(ranges.size()); }
  void validate() const;
};

using Point = Eigen::VectorXd;

enum class SampleRole { kTrain, kValidation, kTest };

const char* role_name(SampleRole r);

struct SampleSet {
  std::vector<Point> points;  // normalized, inside the unit hypercube
  SampleRole role = SampleRole::kTrain;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(points.size()); }
};

/// Affine map of the box onto [0,1]^n_p; rejects points outside the box.
Point normalize(const Point& p, const ParamBounds& b);
Point denormalize(const Point& p_hat, const ParamBounds& b);

/// Latin hypercube design on the unit cube. Keeps the best (maximin) of
/// `candidates` random designs drawn from the seeded generator.
SampleSet lhs_sample(int n_points, int n_p, std::uint64_t seed, SampleRole role = SampleRole::kTrain,
                     int candidates = 50);

double distance(const Point& a, const Point& b);

/// Index of the point in `set` nearest to `p` (lowest index on ties).
int nearest(const std::vector<Point>& set, const Point& p);

}  // namespace promforge::sampling
