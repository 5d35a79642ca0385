#include "cbtm/reduction.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "json.hpp"

namespace cbtm {

ReductionModel fit_reduction(const EmbeddingSet& docs, std::size_t target_dim) {
  const std::size_t m = docs.size();
  const std::size_t l = docs.dimension();
  if (m < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "reduction needs at least 2 documents, got " + std::to_string(m));
  }
  if (target_dim == 0 || target_dim > std::min(l, m)) {
    throw Error(ErrorCode::kInvalidArgument,
                "target dimension " + std::to_string(target_dim) +
                    " must be in [1, " + std::to_string(std::min(l, m)) + "]");
  }

  ReductionModel model;
  model.input_dimension = l;
  model.output_dimension = target_dim;
  model.mean = docs.matrix().colwise().mean().transpose();
  const RowMatrix centered = docs.matrix().rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(m - 1);
  const double total = cov.trace();
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kNumerical, "zero variance: all documents identical");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumerical, "eigen-decomposition failed");
  }
  // Eigenvalues come back ascending.
  model.basis.resize(static_cast<Eigen::Index>(target_dim),
                     static_cast<Eigen::Index>(l));
  for (std::size_t c = 0; c < target_dim; ++c) {
    const Eigen::Index src = static_cast<Eigen::Index>(l - 1 - c);
    Vector v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    model.basis.row(static_cast<Eigen::Index>(c)) = v.transpose();
    model.explained_variance_ratio.push_back(
        std::max(0.0, eig.eigenvalues()(src)) / total);
  }
  return model;
}

Vector transform(const ReductionModel& model, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != model.input_dimension) {
    throw Error(ErrorCode::kDimensionMismatch,
                "reduction expects dimension " +
                    std::to_string(model.input_dimension) + ", got " +
                    std::to_string(x.size()));
  }
  return model.basis * (x - model.mean);
}

EmbeddingSet transform(const ReductionModel& model, const EmbeddingSet& vectors) {
  if (vectors.dimension() != model.input_dimension) {
    throw Error(ErrorCode::kDimensionMismatch,
                "reduction expects dimension " +
                    std::to_string(model.input_dimension) + ", got " +
                    std::to_string(vectors.dimension()));
  }
  RowMatrix centered = vectors.matrix().rowwise() - model.mean.transpose();
  RowMatrix out = centered * model.basis.transpose();
  return EmbeddingSet(vectors.labels(), std::move(out));
}

std::string reduction_to_json(const ReductionModel& model) {
  nlohmann::json j;
  j["method"] = "pca";
  j["input_dimension"] = model.input_dimension;
  j["output_dimension"] = model.output_dimension;
  j["mean"] = std::vector<double>(model.mean.begin(), model.mean.end());
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < model.basis.rows(); ++r) {
    rows.push_back(std::vector<double>(model.basis.row(r).begin(),
                                       model.basis.row(r).end()));
  }
  j["basis"] = std::move(rows);
  j["explained_variance_ratio"] = model.explained_variance_ratio;
  return j.dump(1) + "\n";
}

ReductionModel reduction_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ReductionModel model;
    model.input_dimension = j.at("input_dimension").get<std::size_t>();
    model.output_dimension = j.at("output_dimension").get<std::size_t>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    model.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    const auto basis = j.at("basis").get<std::vector<std::vector<double>>>();
    model.basis.resize(static_cast<Eigen::Index>(basis.size()),
                       static_cast<Eigen::Index>(model.input_dimension));
    for (std::size_t r = 0; r < basis.size(); ++r) {
      if (basis[r].size() != model.input_dimension) {
        throw Error(ErrorCode::kDimensionMismatch, "basis row has wrong dimension");
      }
      for (std::size_t c = 0; c < basis[r].size(); ++c) model.basis(r, c) = basis[r][c];
    }
    model.explained_variance_ratio =
        j.at("explained_variance_ratio").get<std::vector<double>>();
    if (static_cast<std::size_t>(model.mean.size()) != model.input_dimension ||
        basis.size() != model.output_dimension) {
      throw Error(ErrorCode::kDimensionMismatch, "inconsistent reduction model");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("reduction model: ") + e.what());
  }
}

EmbeddingSet PcaReducer::fit_transform(const EmbeddingSet& docs,
                                       std::size_t target_dim) {
  model_ = fit_reduction(docs, target_dim);
  return transform(model_, docs);
}

}  // namespace cbtm
