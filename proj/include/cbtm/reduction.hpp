#pragma once

#include <memory>
#include <string>

#include "cbtm/embed_io.hpp"

namespace cbtm {

/// Fitted linear projection: reduced = basis * (x - mean).
struct ReductionModel {
  std::size_t input_dimension = 0;
  std::size_t output_dimension = 0;
  Vector mean;
  RowMatrix basis;  // output_dimension x input_dimension, orthonormal rows
  std::vector<double> explained_variance_ratio;
};

inline constexpr std::size_t kDefaultReducedDimension = 5;

/// Exact PCA of the mean-centred document matrix. Components are ordered by
/// decreasing variance and the largest-magnitude entry of each basis vector
/// is made positive.
ReductionModel fit_reduction(const EmbeddingSet& docs, std::size_t target_dim);

EmbeddingSet transform(const ReductionModel& model, const EmbeddingSet& vectors);
Vector transform(const ReductionModel& model, const Vector& x);

std::string reduction_to_json(const ReductionModel& model);
ReductionModel reduction_from_json(const std::string& text);

/// Pluggable reducer so a non-linear method can replace PCA without touching
/// the clustering stage.
class Reducer {
 public:
  virtual ~Reducer() = default;
  virtual std::string name() const = 0;
  /// Fits on `docs` and returns their reduced coordinates.
  virtual EmbeddingSet fit_transform(const EmbeddingSet& docs,
                                     std::size_t target_dim) = 0;
};

class PcaReducer final : public Reducer {
 public:
  std::string name() const override { return "pca"; }
  EmbeddingSet fit_transform(const EmbeddingSet& docs,
                             std::size_t target_dim) override;
  const ReductionModel& model() const { return model_; }

 private:
  ReductionModel model_;
};

}  // namespace cbtm
