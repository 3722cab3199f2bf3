#include "promforge/sampling.hpp"

#include "promforge/errors.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace promforge::sampling {

void ParamBounds::validate() const {
  require(!ranges.empty(), "parameter bounds are empty", ErrorCode::kConfig);
  for (const auto& r : ranges)
    require(r.min < r.max, "parameter bounds need min < max", ErrorCode::kConfig);
}

const char* role_name(SampleRole r) {
  switch (r) {
    case SampleRole::kTrain: return "train";
    case SampleRole::kValidation: return "validation";
    case SampleRole::kTest: return "test";
  }
  return "unknown";
}

Point normalize(const Point& p, const ParamBounds& b) {
  require(p.size() == b.dims(), "normalize: dimension mismatch");
  Point out(p.size());
  for (int i = 0; i < p.size(); ++i) {
    const auto& r = b.ranges[i];
    if (p[i] < r.min || p[i] > r.max) {
      std::ostringstream msg;
      msg << "normalize: component " << i << " = " << p[i] << " outside [" << r.min << ", " << r.max << "]";
      throw Error(ErrorCode::kInvalidArgument, msg.str());
    }
    out[i] = (p[i] - r.min) / (r.max - r.min);
  }
  return out;
}

Point denormalize(const Point& p_hat, const ParamBounds& b) {
  require(p_hat.size() == b.dims(), "denormalize: dimension mismatch");
  Point out(p_hat.size());
  for (int i = 0; i < p_hat.size(); ++i) {
    const auto& r = b.ranges[i];
    out[i] = r.min + p_hat[i] * (r.max - r.min);
  }
  return out;
}

double distance(const Point& a, const Point& b) {
  require(a.size() == b.size(), "distance: dimension mismatch");
  return (a - b).norm();
}

int nearest(const std::vector<Point>& set, const Point& p) {
  require(!set.empty(), "nearest: empty point set");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(set.size()); ++i) {
    const double d = distance(set[i], p);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

namespace {

double min_pairwise(const std::vector<Point>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, (pts[i] - pts[j]).norm());
  return best;
}

}  // namespace

SampleSet lhs_sample(int n_points, int n_p, std::uint64_t seed, SampleRole role, int candidates) {
  require(n_points >= 1, "lhs_sample: need at least one point");
  require(n_p >= 1, "lhs_sample: need at least one dimension");
  require(candidates >= 1, "lhs_sample: need at least one candidate design");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Point> best;
  double best_score = -1.0;
  std::vector<int> perm(n_points);
  for (int c = 0; c < candidates; ++c) {
    std::vector<Point> pts(n_points, Point::Zero(n_p));
    for (int d = 0; d < n_p; ++d) {
      std::iota(perm.begin(), perm.end(), 0);
      // Fisher-Yates with the engine directly; std::shuffle is not portable across stdlibs.
      for (int i = n_points - 1; i > 0; --i) {
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[i], perm[j]);
      }
      for (int i = 0; i < n_points; ++i) pts[i][d] = (perm[i] + unit(rng)) / n_points;
    }
    const double score = n_points > 1 ? min_pairwise(pts) : 0.0;
    if (score > best_score) {
      best_score = score;
      best = std::move(pts);
    }
  }
  return SampleSet{std::move(best), role, seed};
}

}  // namespace promforge::sampling
