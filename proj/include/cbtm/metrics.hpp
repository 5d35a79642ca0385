#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbtm/embed_io.hpp"
#include "cbtm/topics.hpp"
#include "cbtm/vector_core.hpp"

namespace cbtm {

inline constexpr std::size_t kDefaultTopWords = 10;
inline constexpr std::size_t kDefaultRepetitions = 50;

// --- Deterministic geometry metrics ----------------------------------------

/// Per-topic similarity of the weighted centroid gamma_k to the stopword
/// centroid.
std::vector<double> expressivity_per_topic(const TopicSet& topics,
                                           const StopwordCentroid& psi);
/// Mean of expressivity_per_topic; lower is better.
double expressivity(const TopicSet& topics, const StopwordCentroid& psi);

/// Raw sum of pairwise similarities among the first min(z, size) words.
double embedding_coherence(const Topic& topic, std::size_t z);
/// Mean pairwise similarity of one topic (raw sum / number of pairs).
double mean_pairwise_coherence(const Topic& topic, std::size_t z);
/// Model coherence: mean over topics of mean_pairwise_coherence, which is
/// 2 / (K (Z-1) Z) * sum_k COH(t_k) when every topic has Z words.
double model_coherence(const TopicSet& topics, std::size_t z);

/// Mean similarity over the K(K-1)/2 pairs of weighted topic centroids.
/// `verbatim` multiplies the pair sum by K(K-1)/2 instead of dividing.
double wess(const TopicSet& topics, bool verbatim = false);

/// |unique words in all top-z lists| / (K z).
double topic_diversity(const TopicSet& topics, std::size_t z);

// --- Intruder metrics ------------------------------------------------------

/// Fraction of the top-z words whose least similar word (among the other top
/// words and the intruder) is strictly the intruder.
double intruder_accuracy(const Topic& topic, const Vector& intruder, std::size_t z);
/// Mean similarity of the top-z words to the intruder.
double intruder_similarity(const Topic& topic, const Vector& intruder, std::size_t z);
/// Similarity of the unweighted top-z centroid before and after the word at
/// `replaced_rank` is swapped for the intruder.
double intruder_shift_single(const Topic& topic, std::size_t replaced_rank,
                             const Vector& intruder, std::size_t z);

/// One random intruder substitution. All indices derive from a counter-based
/// hash of (seed, repetition, topic), so the draw is order-independent.
struct IntruderDraw {
  std::size_t source = 0;         // topic being scored
  std::size_t target = 0;         // topic the intruder comes from, != source
  std::size_t intruder_rank = 0;  // position of the intruder in target's top words
  std::size_t replaced_rank = 0;  // position replaced in source (shift metric)
  std::size_t repetition = 0;
};

IntruderDraw draw_intruder(const TopicSet& topics, std::size_t source,
                           std::size_t repetition, std::size_t z, std::uint64_t seed);

struct RepeatedMetric {
  double value = 0.0;
  std::vector<double> per_topic;                 // mean over repetitions
  std::vector<std::vector<double>> per_draw;     // [repetition][topic]
};

RepeatedMetric intruder_shift(const TopicSet& topics, std::size_t z,
                              std::uint64_t seed, std::size_t repetitions);
RepeatedMetric intruder_accuracy_model(const TopicSet& topics, std::size_t z,
                                       std::uint64_t seed, std::size_t repetitions);
RepeatedMetric intruder_similarity_model(const TopicSet& topics, std::size_t z,
                                         std::uint64_t seed, std::size_t repetitions);

// --- Co-occurrence ---------------------------------------------------------

struct NpmiOptions {
  std::size_t window = 10;
  double epsilon = 1e-12;
};

/// Boolean sliding-window counts for a fixed set of target words.
class WindowCounts {
 public:
  WindowCounts(const Corpus& reference, const std::vector<std::string>& targets,
               std::size_t window);

  std::size_t windows() const { return windows_; }
  std::size_t count(const std::string& w) const;
  std::size_t count(const std::string& a, const std::string& b) const;

 private:
  std::map<std::string, std::size_t> ids_;
  std::vector<std::size_t> singles_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pairs_;
  std::size_t windows_ = 0;
};

/// NPMI of one word pair. Pairs involving a word that never occurs score -1;
/// a pair present in every window scores 1.
double npmi_pair(const WindowCounts& counts, const std::string& a,
                 const std::string& b, double epsilon);

std::vector<double> npmi_per_topic(const TopicSet& topics, const Corpus& reference,
                                   std::size_t z, const NpmiOptions& options = {});
double npmi_coherence(const TopicSet& topics, const Corpus& reference,
                      std::size_t z, const NpmiOptions& options = {});

// --- Report ----------------------------------------------------------------

struct EvalOptions {
  std::size_t z = kDefaultTopWords;
  std::size_t repetitions = kDefaultRepetitions;
  std::uint64_t seed = 0;
  NpmiOptions npmi;
  bool wess_verbatim = false;
  std::string embedding_id;
};

struct MetricReport {
  std::map<std::string, std::vector<double>> per_topic;
  std::map<std::string, double> model;
  std::size_t z = 0;
  std::size_t effective_z = 0;  // smallest topic length used
  std::size_t repetitions = 0;
  std::uint64_t seed = 0;
  std::size_t num_topics = 0;
  std::string embedding_id;
  NpmiOptions npmi;
  bool wess_verbatim = false;

  std::optional<double> get(const std::string& metric) const;
};

/// Every metric over one topic set. `cohpw_topics`, if given, is the same
/// topic set embedded with an alternate model; its coherence is COHPW.
MetricReport evaluate_all(const TopicSet& topics, const StopwordCentroid& psi,
                          const Corpus& reference, const EvalOptions& options,
                          const TopicSet* cohpw_topics = nullptr);

std::string report_to_json(const MetricReport& report);
/// One header row and one value row: NPMI,COHPW,COH,TOP DIV,WESS,EXPRS,ISIM,INT.
std::string report_to_csv(const MetricReport& report);

}  // namespace cbtm
