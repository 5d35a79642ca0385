#pragma once

#include <span>
#include <vector>

#include "cbtm/embed_io.hpp"

namespace cbtm {

/// Cosine similarity clamped to [-1, 1]. Throws on dimension mismatch or a
/// zero-norm argument.
double cosine_similarity(const Eigen::Ref<const Vector>& a,
                         const Eigen::Ref<const Vector>& b);

/// Component-wise arithmetic mean.
Vector centroid(std::span<const Vector> vectors);
Vector centroid(const RowMatrix& rows);

/// (1/Z) * sum_i w_i v_i with Z = vectors.size(). The weights must be
/// non-negative and sum to 1 (within 1e-9); the extra 1/Z is part of the
/// topic-centroid definition and only rescales the result.
Vector weighted_centroid(std::span<const Vector> vectors,
                         std::span<const double> weights);

struct StopwordCentroid {
  Vector vector;
};

StopwordCentroid stopword_centroid(const EmbeddingSet& stopwords);

/// Unit-normalised copies of each row; zero rows are reported by index.
RowMatrix normalized_rows(const RowMatrix& rows);

}  // namespace cbtm
