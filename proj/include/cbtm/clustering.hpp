#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbtm/embed_io.hpp"

namespace cbtm {

struct KMeansResult {
  RowMatrix centers;                // K x r
  std::vector<std::size_t> labels;  // per point
  double inertia = 0.0;
};

/// Lloyd's algorithm with greedy k-means++ seeding; the best of `restarts`
/// runs by inertia is returned. Deterministic in `seed`.
KMeansResult kmeans(const RowMatrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t restarts = 10, std::size_t max_iter = 300,
                    double tol = 1e-4);

struct GmmOptions {
  double tol = 1e-4;          // on the change of mean per-sample log-likelihood
  double reg_covar = 1e-6;    // added to covariance diagonals
  std::size_t max_iter = 100;
  std::size_t kmeans_restarts = 10;
};

struct GmmModel {
  std::size_t k = 0;
  std::vector<double> weights;
  RowMatrix means;                         // K x r
  std::vector<Eigen::MatrixXd> covariances;  // K of r x r
  /// Mean per-sample log-likelihood of the final parameters.
  double mean_log_likelihood = 0.0;
  /// Total log-likelihood (mean * M), used by the information criteria.
  double log_likelihood = 0.0;
  /// Mean per-sample log-likelihood at each E-step.
  std::vector<double> log_likelihood_trace;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t num_samples = 0;

  std::size_t dimension() const { return static_cast<std::size_t>(means.cols()); }
  /// Free parameters: (K-1) weights + K*r means + K*r(r+1)/2 covariances.
  std::size_t num_parameters() const;
};

/// Rows: documents, columns: components. Each row sums to 1.
struct DocumentTopicMatrix {
  std::vector<std::string> doc_ids;
  RowMatrix responsibilities;

  std::size_t rows() const { return static_cast<std::size_t>(responsibilities.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(responsibilities.cols()); }
  /// Index of the largest responsibility per row (first on ties).
  std::vector<std::size_t> hard_assignments() const;
};

struct GmmFit {
  GmmModel model;
  DocumentTopicMatrix theta;
};

/// EM for a full-covariance Gaussian mixture, initialised from K-Means.
GmmFit fit_gmm(const EmbeddingSet& reduced_docs, std::size_t k,
               std::uint64_t seed, const GmmOptions& options = {});

/// Posterior responsibilities of `points` under `model`.
RowMatrix predict_proba(const GmmModel& model, const RowMatrix& points);

enum class Criterion { kAic, kBic };

double aic(const GmmModel& model);
double bic(const GmmModel& model);
double criterion_value(const GmmModel& model, Criterion c);

struct KSelection {
  std::size_t best_k = 0;
  std::vector<std::size_t> ks;
  std::vector<double> scores;
  std::vector<GmmFit> fits;  // parallel to ks
};

/// Fits every K in [k_min, k_max] (per-K seed = seed + K) and returns the
/// argmin of the criterion; equal scores favour the smaller K.
KSelection select_k(const EmbeddingSet& reduced_docs, std::size_t k_min,
                    std::size_t k_max, Criterion criterion, std::uint64_t seed,
                    const GmmOptions& options = {});

/// Responsibility-weighted means of the ORIGINAL document vectors.
RowMatrix original_space_centroids(const DocumentTopicMatrix& theta,
                                   const EmbeddingSet& original_docs);

std::string gmm_to_json(const GmmModel& model);
GmmModel gmm_from_json(const std::string& text);
std::string theta_to_csv(const DocumentTopicMatrix& theta);
std::string theta_to_json(const DocumentTopicMatrix& theta);

}  // namespace cbtm
