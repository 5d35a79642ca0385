#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbtm/embed_io.hpp"

namespace cbtm {

enum class ScoreStyle { kIsh, kInt, kIsim };
enum class Direction { kLowest, kHighest };

std::string_view to_string(ScoreStyle s);
/// The score extreme that marks the intruder for each style.
Direction intruder_direction(ScoreStyle s);

/// Per displayed word score under the given style:
///  - ISIM: mean similarity to the other displayed words (intruder lowest)
///  - INT:  fraction of other words whose strictly least similar displayed
///          word is this one (intruder highest)
///  - ISH:  similarity of the all-word centroid to the centroid without this
///          word (intruder lowest)
std::map<std::string, double> score_words(const IntruderInstance& instance,
                                          const EmbeddingSet& embeddings,
                                          ScoreStyle style);

struct IntruderPick {
  std::string word;
  bool tie = false;
  /// |score(pick) - score(runner-up)|; 0 with fewer than two words.
  double margin = 0.0;
};

/// argmin/argmax of the scores; ties go to the lexicographically first word.
IntruderPick identify_intruder(const std::map<std::string, double>& scores,
                               Direction direction);

/// Sample Pearson correlation; nullopt when either series has zero variance.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct ValidationOptions {
  /// Permissive: a pick among tied human modes counts as a human hit.
  bool strict_ties = false;
};

struct MetricValidation {
  ScoreStyle style = ScoreStyle::kInt;
  std::size_t hits_true = 0;
  std::size_t hits_human = 0;
  double accuracy_true = 0.0;
  double accuracy_human = 0.0;
  std::optional<double> pearson_true;
  std::optional<double> pearson_human;
  std::size_t ties = 0;
};

struct ValidationResult {
  std::size_t instance_count = 0;
  std::string embedding_id;
  bool strict_ties = false;
  std::vector<MetricValidation> metrics;  // ISH, INT, ISIM

  const MetricValidation& at(ScoreStyle s) const;
};

/// Fraction of annotators choosing the true intruder.
double human_detection_rate(const IntruderInstance& instance);
/// Most frequent human selections (several on ties; empty without picks).
std::vector<std::string> modal_selections(const IntruderInstance& instance);

/// Scores every instance under every style and aggregates accuracy against
/// the true and the modal human intruder. Pearson vs human correlates the
/// per-instance true-hit indicator with the human detection rate; Pearson vs
/// true correlates the pick margin with the true-hit indicator.
ValidationResult validate(const std::vector<IntruderInstance>& instances,
                          const EmbeddingSet& embeddings,
                          const ValidationOptions& options = {},
                          const std::string& embedding_id = "");

std::string validation_to_json(const ValidationResult& result);
std::string validation_to_csv(const ValidationResult& result);

}  // namespace cbtm
