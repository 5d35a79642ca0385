#include <cmath>
#include <limits>

#include "cbtm/clustering.hpp"
#include "cbtm/random.hpp"

namespace cbtm {
namespace {

// Squared distances from every point to `center`.
Eigen::VectorXd sq_dist_to(const RowMatrix& points, const Eigen::RowVectorXd& center) {
  return (points.rowwise() - center).rowwise().squaredNorm();
}

// Greedy k-means++: each new center is the best of several D^2-sampled
// candidates by resulting potential.
RowMatrix kmeans_plus_plus(const RowMatrix& points, std::size_t k, SplitMix& rng) {
  const Eigen::Index n = points.rows();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  RowMatrix centers(static_cast<Eigen::Index>(k), points.cols());

  centers.row(0) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  Eigen::VectorXd closest = sq_dist_to(points, centers.row(0));
  double potential = closest.sum();

  for (std::size_t c = 1; c < k; ++c) {
    Eigen::Index best = -1;
    double best_potential = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_closest;
    for (std::size_t t = 0; t < trials; ++t) {
      Eigen::Index cand = 0;
      if (potential > 0.0) {
        double r = rng.uniform() * potential;
        double acc = 0.0;
        cand = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
          acc += closest(i);
          if (acc > r) {
            cand = i;
            break;
          }
        }
      } else {
        cand = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
      }
      Eigen::VectorXd d = sq_dist_to(points, points.row(cand)).cwiseMin(closest);
      const double pot = d.sum();
      if (best < 0 || pot < best_potential) {
        best_potential = pot;
        best = cand;
        best_closest = std::move(d);
      }
    }
    centers.row(static_cast<Eigen::Index>(c)) = points.row(best);
    closest = std::move(best_closest);
    potential = best_potential;
  }
  return centers;
}

KMeansResult lloyd(const RowMatrix& points, RowMatrix centers, std::size_t max_iter,
                   double shift_tol) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centers.rows();
  KMeansResult res;
  res.labels.assign(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd best_d(n);

  auto assign = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      double bd = std::numeric_limits<double>::infinity();
      std::size_t bl = 0;
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          bl = static_cast<std::size_t>(c);
        }
      }
      res.labels[static_cast<std::size_t>(i)] = bl;
      best_d(i) = bd;
    }
  };

  for (std::size_t it = 0; it < max_iter; ++it) {
    assign();
    RowMatrix next = RowMatrix::Zero(k, points.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(static_cast<Eigen::Index>(res.labels[i])) += points.row(i);
      ++counts[res.labels[i]];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        next.row(c) /= static_cast<double>(counts[c]);
      } else {
        // Empty cluster: move it to the point farthest from its center.
        Eigen::Index far = 0;
        best_d.maxCoeff(&far);
        next.row(c) = points.row(far);
        best_d(far) = 0.0;
      }
    }
    const double shift = (next - centers).squaredNorm();
    centers = std::move(next);
    if (shift <= shift_tol) break;
  }
  assign();
  res.inertia = best_d.sum();
  res.centers = std::move(centers);
  return res;
}

}  // namespace

KMeansResult kmeans(const RowMatrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t restarts, std::size_t max_iter, double tol) {
  if (k == 0 || k > static_cast<std::size_t>(points.rows())) {
    throw Error(ErrorCode::kInvalidArgument,
                "k-means: K=" + std::to_string(k) + " with " +
                    std::to_string(points.rows()) + " points");
  }
  // Tolerance is relative to the mean per-feature variance.
  const Eigen::RowVectorXd mu = points.colwise().mean();
  const double var =
      (points.rowwise() - mu).array().square().colwise().mean().mean();
  if (!std::isfinite(var)) {
    throw Error(ErrorCode::kNumerical, "k-means: feature variance overflows");
  }
  const double shift_tol = tol * var;

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
    SplitMix rng(counter_hash(seed, 0x6B6D65616E73ULL, r));
    KMeansResult res = lloyd(points, kmeans_plus_plus(points, k, rng), max_iter, shift_tol);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

}  // namespace cbtm
