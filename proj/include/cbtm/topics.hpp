#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbtm/embed_io.hpp"

namespace cbtm {

enum class Provenance : std::uint8_t { kInCorpus, kExpansion };

/// The candidate dictionary: corpus words (optionally noun-filtered) followed
/// by expansion words that were not already present.
struct CandidateVocabulary {
  std::vector<std::string> words;
  EmbeddingSet embeddings;  // same order as `words`
  std::vector<Provenance> provenance;

  std::size_t size() const { return words.size(); }
};

/// Builds the candidate dictionary. With `nouns`, candidates are
/// (V ∩ nouns) ∪ (expansion ∩ nouns); otherwise V ∪ expansion. Words in
/// `exclude` (the stopword list) are never candidates.
CandidateVocabulary build_candidates(const Corpus& corpus,
                                     const EmbeddingSet& vocab_embeddings,
                                     const WordList* nouns,
                                     const WordList* expansion,
                                     const std::vector<std::string>* exclude = nullptr);

struct TopicWord {
  std::string word;
  double similarity = 0.0;  // cosine to the cluster centroid
  double phi = 0.0;
};

struct Topic {
  std::size_t id = 0;
  std::vector<TopicWord> words;  // descending similarity, ties by word
  RowMatrix vectors;             // one row per entry of `words`
  Vector gamma;                  // weighted centroid (1/Z) sum phi_i w_i
  Vector gamma_tilde;            // unweighted centroid
  bool truncated = false;        // fewer than Z words survived cleaning

  std::size_t size() const { return words.size(); }
};

/// Fills phi, gamma and gamma_tilde from the similarities and vectors. phi is
/// the +1-shifted similarity normalised to sum 1 (uniform if all shifts are 0).
void finalize_topic(Topic& topic);

/// phi weights for a list of similarities.
std::vector<double> similarity_weights(const std::vector<double>& similarities);

struct TopicSet {
  std::vector<Topic> topics;
  std::size_t z = 0;
  /// |candidates| x K cosine similarities; empty for topic sets loaded from
  /// disk.
  RowMatrix beta;
  /// Per topic: candidate indices sorted by similarity (desc), ties by word.
  std::vector<std::vector<std::size_t>> rankings;
  std::vector<std::string> candidate_words;

  std::size_t k() const { return topics.size(); }
};

/// Ranks every candidate against every centroid and keeps the top Z per topic.
TopicSet extract_topics(const CandidateVocabulary& candidates,
                        const RowMatrix& centroids, std::size_t z);

/// Column-wise +1-shifted, unit-sum view of beta.
RowMatrix normalized_beta(const TopicSet& topics);

struct CleanOptions {
  double threshold = 0.85;
  std::size_t z = 10;
  bool refill = true;
};

/// Greedy near-duplicate removal over topic `k`: while two current words have
/// similarity above the threshold, the one ranked lower is dropped and
/// (with refill) the next-ranked candidate appended.
Topic clean_topic(const TopicSet& topics, std::size_t k,
                  const CandidateVocabulary& candidates, const CleanOptions& options);
TopicSet clean_topics(const TopicSet& topics, const CandidateVocabulary& candidates,
                      const CleanOptions& options);

/// Replaces each topic's word vectors with those from `embeddings` and
/// recomputes the centroids (used to evaluate under another embedding model).
TopicSet reembed_topics(const TopicSet& topics, const EmbeddingSet& embeddings);

std::string topics_to_json(const TopicSet& topics);
std::string topics_to_csv(const TopicSet& topics);
std::string beta_to_csv(const TopicSet& topics);
/// Reads topics_to_json output; vectors come from `embeddings`.
TopicSet topics_from_json(const std::string& text, const EmbeddingSet& embeddings);

}  // namespace cbtm
