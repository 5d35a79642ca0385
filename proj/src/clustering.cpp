#include "cbtm/clustering.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <numbers>

#include "cbtm/csv.hpp"
#include "json.hpp"

namespace cbtm {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct EStep {
  RowMatrix log_resp;      // M x K
  double mean_log_prob;    // mean over samples of log p(x)
};

// log w_k + log N(x_i | mu_k, Sigma_k) for all i, k.
RowMatrix weighted_log_prob(const GmmModel& model, const RowMatrix& x) {
  const Eigen::Index m = x.rows();
  const Eigen::Index r = x.cols();
  const auto k = static_cast<Eigen::Index>(model.k);
  RowMatrix out(m, k);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::LLT<Eigen::MatrixXd> llt(model.covariances[static_cast<std::size_t>(c)]);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::kNumerical,
                  "covariance of component " + std::to_string(c) +
                      " is not positive definite despite regularization");
    }
    const Eigen::MatrixXd lower = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index d = 0; d < r; ++d) log_det += std::log(lower(d, d));
    log_det *= 2.0;
    Eigen::MatrixXd diff = (x.rowwise() - model.means.row(c)).transpose();  // r x M
    lower.triangularView<Eigen::Lower>().solveInPlace(diff);
    const Eigen::VectorXd maha = diff.colwise().squaredNorm().transpose();
    out.col(c) = (-0.5 * (static_cast<double>(r) * log2pi + log_det + maha.array())).matrix() +
                 Eigen::VectorXd::Constant(m, std::log(model.weights[static_cast<std::size_t>(c)]));
  }
  return out;
}

EStep e_step(const GmmModel& model, const RowMatrix& x) {
  RowMatrix lp = weighted_log_prob(model, x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    const double mx = lp.row(i).maxCoeff();
    const double lse = mx + std::log((lp.row(i).array() - mx).exp().sum());
    lp.row(i).array() -= lse;
    total += lse;
  }
  if (!std::isfinite(total)) {
    throw Error(ErrorCode::kNumerical, "log-likelihood is not finite");
  }
  return {std::move(lp), total / static_cast<double>(x.rows())};
}

void m_step(GmmModel& model, const RowMatrix& x, const RowMatrix& resp,
            double reg_covar) {
  const Eigen::Index k = resp.cols();
  Eigen::VectorXd nk = resp.colwise().sum().transpose();
  nk.array() += 10.0 * kEps;
  model.means = (resp.transpose() * x).array().colwise() / nk.array();
  model.covariances.resize(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) {
    const RowMatrix diff = x.rowwise() - model.means.row(c);
    Eigen::MatrixXd cov =
        (diff.array().colwise() * resp.col(c).array()).matrix().transpose() * diff / nk(c);
    cov = 0.5 * (cov + cov.transpose());
    cov.diagonal().array() += reg_covar;
    model.covariances[static_cast<std::size_t>(c)] = std::move(cov);
  }
  model.weights.assign(nk.data(), nk.data() + nk.size());
  const double sum = nk.sum();
  for (auto& w : model.weights) w /= sum;
}

}  // namespace

std::size_t GmmModel::num_parameters() const {
  const std::size_t r = dimension();
  return (k - 1) + k * r + k * r * (r + 1) / 2;
}

std::vector<std::size_t> DocumentTopicMatrix::hard_assignments() const {
  std::vector<std::size_t> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) {
    Eigen::Index arg = 0;
    responsibilities.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    out[i] = static_cast<std::size_t>(arg);
  }
  return out;
}

GmmFit fit_gmm(const EmbeddingSet& reduced_docs, std::size_t k, std::uint64_t seed,
               const GmmOptions& options) {
  const RowMatrix& x = reduced_docs.matrix();
  const std::size_t m = reduced_docs.size();
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "K must be >= 1");
  if (k > m) {
    throw Error(ErrorCode::kInvalidArgument,
                "K=" + std::to_string(k) + " exceeds document count " + std::to_string(m));
  }

  GmmModel model;
  model.k = k;
  model.num_samples = m;

  const KMeansResult km = kmeans(x, k, seed, options.kmeans_restarts);
  RowMatrix resp = RowMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < m; ++i) resp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(km.labels[i])) = 1.0;
  m_step(model, x, resp, options.reg_covar);

  double lower_bound = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    const double prev = lower_bound;
    EStep e = e_step(model, x);
    model.log_likelihood_trace.push_back(e.mean_log_prob);
    m_step(model, x, e.log_resp.array().exp().matrix(), options.reg_covar);
    lower_bound = e.mean_log_prob;
    model.iterations = it;
    if (std::abs(lower_bound - prev) < options.tol) {
      model.converged = true;
      break;
    }
  }

  // Final E-step so the responsibilities match the returned parameters.
  EStep final_e = e_step(model, x);
  model.log_likelihood_trace.push_back(final_e.mean_log_prob);
  model.mean_log_likelihood = final_e.mean_log_prob;
  model.log_likelihood = final_e.mean_log_prob * static_cast<double>(m);

  GmmFit fit;
  fit.theta.doc_ids = reduced_docs.labels();
  fit.theta.responsibilities = final_e.log_resp.array().exp().matrix();
  // Renormalise so rows sum to 1 to the last ulp of the exponentials.
  for (Eigen::Index i = 0; i < fit.theta.responsibilities.rows(); ++i) {
    fit.theta.responsibilities.row(i) /= fit.theta.responsibilities.row(i).sum();
  }
  fit.model = std::move(model);
  return fit;
}

RowMatrix predict_proba(const GmmModel& model, const RowMatrix& points) {
  if (static_cast<std::size_t>(points.cols()) != model.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch, "predict_proba: dimension mismatch");
  }
  RowMatrix p = e_step(model, points).log_resp.array().exp().matrix();
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
  return p;
}

double aic(const GmmModel& model) {
  return 2.0 * static_cast<double>(model.num_parameters()) - 2.0 * model.log_likelihood;
}

double bic(const GmmModel& model) {
  return static_cast<double>(model.num_parameters()) *
             std::log(static_cast<double>(model.num_samples)) -
         2.0 * model.log_likelihood;
}

double criterion_value(const GmmModel& model, Criterion c) {
  return c == Criterion::kAic ? aic(model) : bic(model);
}

KSelection select_k(const EmbeddingSet& reduced_docs, std::size_t k_min,
                    std::size_t k_max, Criterion criterion, std::uint64_t seed,
                    const GmmOptions& options) {
  if (k_min == 0 || k_min > k_max || k_max > reduced_docs.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "K range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                    "] must lie within [1, " + std::to_string(reduced_docs.size()) + "]");
  }
  std::vector<std::future<GmmFit>> jobs;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    jobs.push_back(std::async(std::launch::async, [&, k] {
      return fit_gmm(reduced_docs, k, seed + k, options);
    }));
  }
  KSelection sel;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    GmmFit fit;
    try {
      fit = jobs[k - k_min].get();
    } catch (const Error& e) {
      throw Error(e.code(), "K=" + std::to_string(k) + ": " + e.what());
    }
    sel.ks.push_back(k);
    sel.scores.push_back(criterion_value(fit.model, criterion));
    sel.fits.push_back(std::move(fit));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < sel.scores.size(); ++i) {
    if (sel.scores[i] < sel.scores[best]) best = i;
  }
  sel.best_k = sel.ks[best];
  return sel;
}

RowMatrix original_space_centroids(const DocumentTopicMatrix& theta,
                                   const EmbeddingSet& original_docs) {
  if (theta.rows() != original_docs.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "theta has " + std::to_string(theta.rows()) + " rows but there are " +
                    std::to_string(original_docs.size()) + " documents");
  }
  const Eigen::VectorXd mass = theta.responsibilities.colwise().sum().transpose();
  for (Eigen::Index c = 0; c < mass.size(); ++c) {
    if (mass(c) < 1e-12) {
      throw Error(ErrorCode::kNumerical, "empty component " + std::to_string(c));
    }
  }
  RowMatrix mu = theta.responsibilities.transpose() * original_docs.matrix();
  return mu.array().colwise() / mass.array();
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd json_matrix(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged matrix in JSON");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace

std::string gmm_to_json(const GmmModel& model) {
  nlohmann::json j;
  j["k"] = model.k;
  j["dimension"] = model.dimension();
  j["weights"] = model.weights;
  j["means"] = matrix_json(model.means);
  auto covs = nlohmann::json::array();
  for (const auto& c : model.covariances) covs.push_back(matrix_json(c));
  j["covariances"] = std::move(covs);
  j["log_likelihood"] = model.log_likelihood;
  j["mean_log_likelihood"] = model.mean_log_likelihood;
  j["log_likelihood_trace"] = model.log_likelihood_trace;
  j["iterations"] = model.iterations;
  j["converged"] = model.converged;
  j["num_samples"] = model.num_samples;
  return j.dump(1) + "\n";
}

GmmModel gmm_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    GmmModel m;
    m.k = j.at("k").get<std::size_t>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.means = json_matrix(j.at("means"));
    for (const auto& c : j.at("covariances")) m.covariances.push_back(json_matrix(c));
    m.log_likelihood = j.at("log_likelihood").get<double>();
    m.mean_log_likelihood = j.at("mean_log_likelihood").get<double>();
    m.log_likelihood_trace = j.at("log_likelihood_trace").get<std::vector<double>>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.converged = j.at("converged").get<bool>();
    m.num_samples = j.at("num_samples").get<std::size_t>();
    if (m.weights.size() != m.k || static_cast<std::size_t>(m.means.rows()) != m.k ||
        m.covariances.size() != m.k) {
      throw Error(ErrorCode::kDimensionMismatch, "inconsistent GMM model");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("GMM model: ") + e.what());
  }
}

std::string theta_to_csv(const DocumentTopicMatrix& theta) {
  std::string out = "doc_id";
  for (std::size_t k = 0; k < theta.cols(); ++k) out += ",topic_" + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < theta.rows(); ++i) {
    out += csv_field(theta.doc_ids[i]);
    for (std::size_t k = 0; k < theta.cols(); ++k) {
      out += ',';
      out += csv_number(theta.responsibilities(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(k)));
    }
    out += "\n";
  }
  return out;
}

std::string theta_to_json(const DocumentTopicMatrix& theta) {
  nlohmann::json j;
  j["doc_ids"] = theta.doc_ids;
  j["responsibilities"] = matrix_json(theta.responsibilities);
  return j.dump(1) + "\n";
}

}  // namespace cbtm
