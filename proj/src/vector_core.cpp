#include "cbtm/vector_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cbtm {

double cosine_similarity(const Eigen::Ref<const Vector>& a,
                         const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cosine similarity of vectors with dimension " +
                    std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "undefined similarity for zero vector");
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

Vector centroid(std::span<const Vector> vectors) {
  if (vectors.empty()) {
    throw Error(ErrorCode::kEmptyInput, "centroid of an empty list");
  }
  Vector sum = Vector::Zero(vectors.front().size());
  for (const auto& v : vectors) {
    if (v.size() != sum.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "centroid inputs differ in dimension");
    }
    sum += v;
  }
  return sum / static_cast<double>(vectors.size());
}

Vector centroid(const RowMatrix& rows) {
  if (rows.rows() == 0) {
    throw Error(ErrorCode::kEmptyInput, "centroid of an empty list");
  }
  return rows.colwise().mean().transpose();
}

Vector weighted_centroid(std::span<const Vector> vectors,
                         std::span<const double> weights) {
  if (vectors.empty()) {
    throw Error(ErrorCode::kEmptyInput, "weighted centroid of an empty list");
  }
  if (vectors.size() != weights.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weighted centroid: " + std::to_string(vectors.size()) +
                    " vectors but " + std::to_string(weights.size()) + " weights");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "weighted centroid: negative weight");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "weighted centroid: weights sum to " << total << ", expected 1";
    throw Error(ErrorCode::kInvalidArgument, msg.str());
  }
  Vector sum = Vector::Zero(vectors.front().size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != sum.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "weighted centroid inputs differ in dimension");
    }
    sum += weights[i] * vectors[i];
  }
  return sum / static_cast<double>(vectors.size());
}

StopwordCentroid stopword_centroid(const EmbeddingSet& stopwords) {
  if (stopwords.empty()) {
    throw Error(ErrorCode::kEmptyInput, "stopword set is empty");
  }
  return {centroid(stopwords.matrix())};
}

RowMatrix normalized_rows(const RowMatrix& rows) {
  RowMatrix out = rows;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n == 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "undefined similarity for zero vector (row " +
                      std::to_string(i) + ")");
    }
    out.row(i) /= n;
  }
  return out;
}

}  // namespace cbtm
