#include <algorithm>
#include <map>
#include <random>

#include "cbtm/clustering.hpp"
#include "doctest.h"
#include "synthetic.hpp"

using namespace cbtm;

namespace {

void check_fit_invariants(const GmmFit& fit) {
  const auto& m = fit.model;
  double wsum = 0.0;
  for (double w : m.weights) {
    CHECK(w > 0.0);
    wsum += w;
  }
  CHECK(std::abs(wsum - 1.0) < 1e-9);
  for (const auto& c : m.covariances) {
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(c).info() == Eigen::Success);
  }
  for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i) {
    CHECK(m.log_likelihood_trace[i] >= m.log_likelihood_trace[i - 1] - 1e-8);
  }
  const auto& r = fit.theta.responsibilities;
  CHECK(r.minCoeff() >= 0.0);
  CHECK(r.maxCoeff() <= 1.0);
  for (Eigen::Index i = 0; i < r.rows(); ++i) CHECK(std::abs(r.row(i).sum() - 1.0) < 1e-9);
}

double purity(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
  std::map<std::size_t, std::map<std::size_t, std::size_t>> table;
  for (std::size_t i = 0; i < pred.size(); ++i) ++table[pred[i]][truth[i]];
  std::size_t hit = 0;
  for (const auto& [c, counts] : table) {
    std::size_t best = 0;
    for (const auto& [t, n] : counts) best = std::max(best, n);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("two separated point masses") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> jitter(0.0, 0.01);
  EmbeddingSet s(2);
  for (int i = 0; i < 100; ++i) {
    const double cx = i < 50 ? -10.0 : 10.0;
    s.push_back("d" + std::to_string(i), synth::to_eigen({cx + jitter(rng), jitter(rng)}));
  }
  const auto fit = fit_gmm(s, 2, 42);
  check_fit_invariants(fit);
  const auto& r = fit.theta.responsibilities;
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    CHECK(r.row(i).maxCoeff() > 1.0 - 1e-6);
  }
  std::vector<double> xs = {fit.model.means(0, 0), fit.model.means(1, 0)};
  std::sort(xs.begin(), xs.end());
  CHECK(std::abs(xs[0] + 10.0) < 0.01);
  CHECK(std::abs(xs[1] - 10.0) < 0.01);
  CHECK(std::abs(fit.model.means(0, 1)) < 0.01);
}

TEST_CASE("K=1 closed form") {
  std::mt19937_64 rng(3);
  EmbeddingSet s(3);
  for (int i = 0; i < 40; ++i) s.push_back("d" + std::to_string(i), synth::to_eigen(synth::gaussian(rng, 3)));
  const auto fit = fit_gmm(s, 1, 0);
  check_fit_invariants(fit);
  const Vector mean = s.matrix().colwise().mean().transpose();
  CHECK((fit.model.means.row(0).transpose() - mean).norm() < 1e-12);
  const RowMatrix centred = s.matrix().rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centred.transpose() * centred / 40.0;
  cov.diagonal().array() += 1e-6;
  CHECK((fit.model.covariances[0] - cov).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fit.theta.responsibilities.array() == 1.0).all());
  CHECK(fit.model.num_parameters() == 0 + 3 + 6);
}

TEST_CASE("fit is deterministic in the seed") {
  std::mt19937_64 rng(5);
  const auto s = synth::blobs(rng, 30, 3, 2, 6.0, 1.0);
  const auto a = fit_gmm(s, 3, 9);
  const auto b = fit_gmm(s, 3, 9);
  CHECK(a.model.means == b.model.means);
  CHECK(a.model.weights == b.model.weights);
  CHECK(a.model.log_likelihood_trace == b.model.log_likelihood_trace);
  CHECK(a.theta.responsibilities == b.theta.responsibilities);
  CHECK(gmm_to_json(a.model) == gmm_to_json(b.model));
}

TEST_CASE("BIC picks the planted number of blobs") {
  std::mt19937_64 rng(17);
  std::vector<std::size_t> truth;
  const auto s = synth::blobs(rng, 100, 3, 2, 10.0, 1.0, &truth);
  const auto sel = select_k(s, 1, 6, Criterion::kBic, 5);
  CHECK(sel.best_k == 3);
  REQUIRE(sel.ks.size() == 6);
  // exhaustive recomputation of the criterion from each fitted model
  for (std::size_t i = 0; i < sel.ks.size(); ++i) {
    const auto& m = sel.fits[i].model;
    const double p = static_cast<double>(m.k - 1 + m.k * 2 + m.k * 3);
    CHECK(sel.scores[i] == doctest::Approx(p * std::log(300.0) - 2.0 * m.log_likelihood).epsilon(1e-12));
    CHECK(m.log_likelihood == doctest::Approx(m.mean_log_likelihood * 300.0).epsilon(1e-12));
    check_fit_invariants(sel.fits[i]);
  }
  const auto best = std::min_element(sel.scores.begin(), sel.scores.end()) - sel.scores.begin();
  CHECK(sel.ks[best] == 3);
  CHECK(purity(sel.fits[2].theta.hard_assignments(), truth) >= 0.98);

  // hard assignments agree with K-Means on separated data
  const auto km = kmeans(s.matrix(), 3, 5);
  CHECK(purity(km.labels, truth) >= 0.98);
}

TEST_CASE("degenerate range and structureless data") {
  std::mt19937_64 rng(23);
  const auto s = synth::blobs(rng, 200, 1, 2, 0.0, 1.0);
  const auto two = select_k(s, 2, 2, Criterion::kAic, 0);
  CHECK(two.best_k == 2);
  CHECK(two.scores.size() == 1);
  CHECK(two.scores[0] == doctest::Approx(aic(two.fits[0].model)));
  CHECK(select_k(s, 1, 4, Criterion::kBic, 0).best_k == 1);
}

TEST_CASE("AIC and BIC formulas") {
  GmmModel m;
  m.k = 2;
  m.means = RowMatrix::Zero(2, 3);
  m.num_samples = 100;
  m.log_likelihood = -250.0;
  const double p = 1 + 6 + 12;
  CHECK(m.num_parameters() == 19);
  CHECK(aic(m) == doctest::Approx(2 * p + 500.0));
  CHECK(bic(m) == doctest::Approx(p * std::log(100.0) + 500.0));
}

TEST_CASE("clustering errors") {
  std::mt19937_64 rng(0);
  const auto s = synth::blobs(rng, 3, 1, 2, 0.0, 1.0);
  CHECK_THROWS_AS(fit_gmm(s, 4, 0), Error);
  CHECK_THROWS_AS(fit_gmm(s, 0, 0), Error);
  CHECK_THROWS_WITH_AS(select_k(s, 1, 4, Criterion::kBic, 0), doctest::Contains("K range"), Error);
  EmbeddingSet overflow(1);
  for (int i = 0; i < 4; ++i) overflow.push_back("x" + std::to_string(i), Vector::Constant(1, i % 2 ? 1e300 : -1e300));
  CHECK_THROWS_WITH_AS(select_k(overflow, 1, 2, Criterion::kBic, 0), doctest::Contains("K=1"), Error);
}

TEST_CASE("permutation equivariance") {
  std::mt19937_64 rng(31);
  const auto s = synth::blobs(rng, 40, 2, 2, 12.0, 1.0);
  std::vector<std::string> perm = s.labels();
  std::reverse(perm.begin(), perm.end());
  const auto p = s.subset(perm);
  const auto a = fit_gmm(s, 2, 1);
  const auto b = fit_gmm(p, 2, 1);
  const auto ha = a.theta.hard_assignments();
  const auto hb = b.theta.hard_assignments();
  // same partition up to relabeling
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; j += 5) {
      CHECK((ha[i] == ha[j]) == (hb[n - 1 - i] == hb[n - 1 - j]));
    }
  }
  std::vector<double> ma = {a.model.means(0, 0), a.model.means(1, 0)};
  std::vector<double> mb = {b.model.means(0, 0), b.model.means(1, 0)};
  std::sort(ma.begin(), ma.end());
  std::sort(mb.begin(), mb.end());
  CHECK(ma[0] == doctest::Approx(mb[0]).epsilon(1e-6));
  CHECK(ma[1] == doctest::Approx(mb[1]).epsilon(1e-6));
}

TEST_CASE("original-space centroids") {
  std::mt19937_64 rng(13);
  EmbeddingSet docs(4);
  std::vector<oracle::Vec> raw;
  for (int i = 0; i < 6; ++i) {
    raw.push_back(synth::gaussian(rng, 4));
    docs.push_back("d" + std::to_string(i), synth::to_eigen(raw.back()));
  }
  DocumentTopicMatrix theta;
  theta.doc_ids = docs.labels();

  SUBCASE("one-hot") {
    theta.responsibilities = RowMatrix::Zero(6, 2);
    for (int i = 0; i < 6; ++i) theta.responsibilities(i, i < 2 ? 0 : 1) = 1.0;
    const auto mu = original_space_centroids(theta, docs);
    const auto m0 = oracle::mean({raw[0], raw[1]});
    const auto m1 = oracle::mean({raw[2], raw[3], raw[4], raw[5]});
    for (int d = 0; d < 4; ++d) {
      CHECK(mu(0, d) == doctest::Approx(m0[d]).epsilon(1e-12));
      CHECK(mu(1, d) == doctest::Approx(m1[d]).epsilon(1e-12));
    }
  }
  SUBCASE("uniform rows") {
    theta.responsibilities = RowMatrix::Constant(6, 2, 0.5);
    const auto mu = original_space_centroids(theta, docs);
    const auto g = oracle::mean(raw);
    for (int d = 0; d < 4; ++d) {
      CHECK(mu(0, d) == doctest::Approx(g[d]).epsilon(1e-12));
      CHECK(mu(1, d) == doctest::Approx(g[d]).epsilon(1e-12));
    }
  }
  SUBCASE("random responsibilities") {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    theta.responsibilities.resize(6, 3);
    for (int i = 0; i < 6; ++i) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += theta.responsibilities(i, k) = u(rng);
      theta.responsibilities.row(i) /= s;
    }
    const auto mu = original_space_centroids(theta, docs);
    for (int k = 0; k < 3; ++k) {
      double mass = 0.0;
      oracle::Vec acc(4, 0.0);
      for (int i = 0; i < 6; ++i) {
        mass += theta.responsibilities(i, k);
        for (int d = 0; d < 4; ++d) acc[d] += theta.responsibilities(i, k) * raw[i][d];
      }
      for (int d = 0; d < 4; ++d) CHECK(std::abs(mu(k, d) - acc[d] / mass) < 1e-12);
    }
  }
  SUBCASE("empty component") {
    theta.responsibilities = RowMatrix::Zero(6, 2);
    theta.responsibilities.col(0).setOnes();
    CHECK_THROWS_WITH_AS(original_space_centroids(theta, docs), doctest::Contains("empty component"), Error);
  }
}

TEST_CASE("serialisation round trip") {
  std::mt19937_64 rng(19);
  const auto s = synth::blobs(rng, 20, 2, 3, 8.0, 1.0);
  const auto fit = fit_gmm(s, 2, 4);
  const auto back = gmm_from_json(gmm_to_json(fit.model));
  CHECK(back.k == 2);
  CHECK(back.weights == fit.model.weights);
  CHECK(back.means == fit.model.means);
  CHECK((predict_proba(back, s.matrix()) - fit.theta.responsibilities).cwiseAbs().maxCoeff() < 1e-9);
  const auto csv = theta_to_csv(fit.theta);
  CHECK(csv.rfind("doc_id", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 41);
}
