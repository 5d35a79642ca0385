#include "cbtm/topics.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "cbtm/csv.hpp"
#include "cbtm/vector_core.hpp"
#include "json.hpp"

namespace cbtm {

CandidateVocabulary build_candidates(const Corpus& corpus,
                                     const EmbeddingSet& vocab_embeddings,
                                     const WordList* nouns,
                                     const WordList* expansion,
                                     const std::vector<std::string>* exclude) {
  std::unordered_set<std::string> excluded;
  if (exclude) excluded.insert(exclude->begin(), exclude->end());
  std::unordered_set<std::string> noun_set;
  if (nouns) noun_set = nouns->as_set();

  std::vector<std::string> words;
  std::vector<Provenance> provenance;
  std::unordered_set<std::string> taken;
  auto consider = [&](const std::string& w, Provenance p) {
    if (excluded.count(w)) return;
    if (nouns && !noun_set.count(w)) return;
    if (!taken.insert(w).second) return;
    words.push_back(w);
    provenance.push_back(p);
  };
  for (const auto& w : corpus.vocabulary) consider(w, Provenance::kInCorpus);
  if (expansion) {
    for (const auto& w : expansion->words) consider(w, Provenance::kExpansion);
  }
  if (words.empty()) {
    throw Error(ErrorCode::kEmptyInput, "candidate vocabulary is empty");
  }
  EmbeddingSet emb = vocab_embeddings.subset(words);
  return CandidateVocabulary{std::move(words), std::move(emb), std::move(provenance)};
}

std::vector<double> similarity_weights(const std::vector<double>& similarities) {
  std::vector<double> phi(similarities.size());
  double total = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    phi[i] = similarities[i] + 1.0;
    total += phi[i];
  }
  if (!(total > 0.0)) {
    std::fill(phi.begin(), phi.end(), 1.0 / static_cast<double>(phi.size()));
    return phi;
  }
  for (auto& p : phi) p /= total;
  return phi;
}

void finalize_topic(Topic& topic) {
  if (topic.words.empty()) {
    throw Error(ErrorCode::kEmptyInput, "topic " + std::to_string(topic.id) + " has no words");
  }
  std::vector<double> sims;
  std::vector<Vector> vecs;
  for (std::size_t i = 0; i < topic.words.size(); ++i) {
    sims.push_back(topic.words[i].similarity);
    vecs.push_back(topic.vectors.row(static_cast<Eigen::Index>(i)).transpose());
  }
  const auto phi = similarity_weights(sims);
  for (std::size_t i = 0; i < phi.size(); ++i) topic.words[i].phi = phi[i];
  topic.gamma = weighted_centroid(vecs, phi);
  topic.gamma_tilde = centroid(vecs);
}

namespace {

Topic topic_from_ranking(const TopicSet& set, std::size_t k,
                         const std::vector<std::size_t>& chosen,
                         const CandidateVocabulary& candidates) {
  Topic t;
  t.id = k;
  t.vectors.resize(static_cast<Eigen::Index>(chosen.size()),
                   static_cast<Eigen::Index>(candidates.embeddings.dimension()));
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const std::size_t c = chosen[i];
    t.words.push_back({candidates.words[c],
                       set.beta(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)),
                       0.0});
    t.vectors.row(static_cast<Eigen::Index>(i)) = candidates.embeddings.row(c);
  }
  finalize_topic(t);
  return t;
}

}  // namespace

TopicSet extract_topics(const CandidateVocabulary& candidates,
                        const RowMatrix& centroids, std::size_t z) {
  const std::size_t n = candidates.size();
  const auto l = static_cast<Eigen::Index>(candidates.embeddings.dimension());
  if (centroids.cols() != l) {
    throw Error(ErrorCode::kDimensionMismatch,
                "centroids have dimension " + std::to_string(centroids.cols()) +
                    ", candidates " + std::to_string(l));
  }
  if (centroids.rows() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "no cluster centroids");
  }
  if (z == 0 || z > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "Z=" + std::to_string(z) + " must be in [1, " + std::to_string(n) + "]");
  }

  RowMatrix words = candidates.embeddings.matrix();
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = words.row(static_cast<Eigen::Index>(i)).norm();
    if (norm == 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "zero-norm embedding for candidate '" + candidates.words[i] + "'");
    }
    words.row(static_cast<Eigen::Index>(i)) /= norm;
  }
  const RowMatrix centers = normalized_rows(centroids);

  TopicSet set;
  set.z = z;
  set.candidate_words = candidates.words;
  set.beta = (words * centers.transpose()).cwiseMax(-1.0).cwiseMin(1.0);

  const std::size_t k_count = static_cast<std::size_t>(centroids.rows());
  for (std::size_t k = 0; k < k_count; ++k) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto col = set.beta.col(static_cast<Eigen::Index>(k));
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double sa = col(static_cast<Eigen::Index>(a));
      const double sb = col(static_cast<Eigen::Index>(b));
      if (sa != sb) return sa > sb;
      return candidates.words[a] < candidates.words[b];
    });
    set.rankings.push_back(std::move(order));
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    std::vector<std::size_t> top(set.rankings[k].begin(),
                                 set.rankings[k].begin() + static_cast<std::ptrdiff_t>(z));
    set.topics.push_back(topic_from_ranking(set, k, top, candidates));
  }
  return set;
}

RowMatrix normalized_beta(const TopicSet& topics) {
  RowMatrix out = topics.beta.array() + 1.0;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double s = out.col(c).sum();
    if (s > 0.0) {
      out.col(c) /= s;
    } else {
      out.col(c).setConstant(1.0 / static_cast<double>(out.rows()));
    }
  }
  return out;
}

Topic clean_topic(const TopicSet& topics, std::size_t k,
                  const CandidateVocabulary& candidates, const CleanOptions& options) {
  if (k >= topics.rankings.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "cleaning needs the full ranking of topic " + std::to_string(k));
  }
  if (!(options.threshold > 0.0 && options.threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cleaning threshold must lie in (0, 1]");
  }
  const auto& ranking = topics.rankings[k];
  const std::size_t z = std::min(options.z, ranking.size());
  std::vector<std::size_t> current(ranking.begin(),
                                   ranking.begin() + static_cast<std::ptrdiff_t>(z));
  std::size_t next = z;
  const RowMatrix& emb = candidates.embeddings.matrix();

  for (;;) {
    std::optional<std::size_t> victim;
    for (std::size_t i = 0; i < current.size() && !victim; ++i) {
      for (std::size_t j = i + 1; j < current.size(); ++j) {
        const double s = cosine_similarity(emb.row(static_cast<Eigen::Index>(current[i])).transpose(),
                                           emb.row(static_cast<Eigen::Index>(current[j])).transpose());
        if (s > options.threshold) {
          victim = j;
          break;
        }
      }
    }
    if (!victim) break;
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(*victim));
    if (options.refill && next < ranking.size()) current.push_back(ranking[next++]);
  }

  Topic t = topic_from_ranking(topics, k, current, candidates);
  t.truncated = current.size() < options.z;
  return t;
}

TopicSet clean_topics(const TopicSet& topics, const CandidateVocabulary& candidates,
                      const CleanOptions& options) {
  TopicSet out = topics;
  for (std::size_t k = 0; k < topics.k(); ++k) {
    out.topics[k] = clean_topic(topics, k, candidates, options);
  }
  return out;
}

TopicSet reembed_topics(const TopicSet& topics, const EmbeddingSet& embeddings) {
  TopicSet out = topics;
  for (auto& t : out.topics) {
    t.vectors.resize(static_cast<Eigen::Index>(t.words.size()),
                     static_cast<Eigen::Index>(embeddings.dimension()));
    for (std::size_t i = 0; i < t.words.size(); ++i) {
      t.vectors.row(static_cast<Eigen::Index>(i)) = embeddings.at(t.words[i].word).transpose();
    }
    finalize_topic(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

std::string topics_to_json(const TopicSet& topics) {
  nlohmann::json j;
  j["z"] = topics.z;
  j["num_topics"] = topics.k();
  auto arr = nlohmann::json::array();
  for (const auto& t : topics.topics) {
    auto words = nlohmann::json::array();
    for (const auto& w : t.words) {
      words.push_back({{"word", w.word}, {"similarity", w.similarity}, {"phi", w.phi}});
    }
    arr.push_back({{"id", t.id}, {"truncated", t.truncated}, {"words", std::move(words)}});
  }
  j["topics"] = std::move(arr);
  return j.dump(1) + "\n";
}

std::string topics_to_csv(const TopicSet& topics) {
  std::string out = "topic_id,rank,word,similarity,phi\n";
  for (const auto& t : topics.topics) {
    for (std::size_t r = 0; r < t.words.size(); ++r) {
      out += std::to_string(t.id) + "," + std::to_string(r + 1) + "," +
             csv_field(t.words[r].word) + "," + csv_number(t.words[r].similarity) +
             "," + csv_number(t.words[r].phi) + "\n";
    }
  }
  return out;
}

std::string beta_to_csv(const TopicSet& topics) {
  std::string out = "word";
  for (std::size_t k = 0; k < static_cast<std::size_t>(topics.beta.cols()); ++k) {
    out += ",topic_" + std::to_string(k);
  }
  out += "\n";
  for (Eigen::Index i = 0; i < topics.beta.rows(); ++i) {
    out += csv_field(topics.candidate_words[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < topics.beta.cols(); ++k) {
      out += "," + csv_number(topics.beta(i, k));
    }
    out += "\n";
  }
  return out;
}

TopicSet topics_from_json(const std::string& text, const EmbeddingSet& embeddings) {
  TopicSet set;
  try {
    const auto j = nlohmann::json::parse(text);
    set.z = j.at("z").get<std::size_t>();
    for (const auto& jt : j.at("topics")) {
      Topic t;
      t.id = jt.at("id").get<std::size_t>();
      t.truncated = jt.value("truncated", false);
      for (const auto& jw : jt.at("words")) {
        t.words.push_back({jw.at("word").get<std::string>(),
                           jw.at("similarity").get<double>(), 0.0});
      }
      set.topics.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("topics file: ") + e.what());
  }
  return reembed_topics(set, embeddings);
}

}  // namespace cbtm
