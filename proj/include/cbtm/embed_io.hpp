#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "cbtm/error.hpp"

namespace cbtm {

using Vector = Eigen::VectorXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Labelled vectors of a common dimension. Values are stored in double
/// precision; the binary format holds float32, so anything read from disk
/// round-trips exactly.
class EmbeddingSet {
 public:
  explicit EmbeddingSet(std::size_t dimension = 1);
  /// Validates uniqueness, finiteness and dimension; throws Error otherwise.
  EmbeddingSet(std::vector<std::string> labels, RowMatrix vectors);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const RowMatrix& matrix() const noexcept { return vectors_; }
  Vector vector(std::size_t i) const { return vectors_.row(i).transpose(); }
  auto row(std::size_t i) const { return vectors_.row(i); }

  std::optional<std::size_t> find(std::string_view label) const;
  bool contains(std::string_view label) const { return find(label).has_value(); }
  /// Vector for a label; throws kMissingEmbedding if absent.
  Vector at(std::string_view label) const;

  /// Appends one entry, enforcing the set invariants.
  void push_back(std::string label, const Vector& v);

  /// Entries restricted to `labels`, in that order.
  EmbeddingSet subset(const std::vector<std::string>& labels) const;

  /// Every component multiplied by `factor` (labels unchanged).
  EmbeddingSet scaled(double factor) const;

  friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b);

 private:
  std::size_t dimension_;
  std::vector<std::string> labels_;
  RowMatrix vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Union of two sets. Labels present in both must carry identical vectors.
EmbeddingSet merge_embedding_sets(const EmbeddingSet& a, const EmbeddingSet& b);

/// Reads HEMB1 binary or the JSON alternative (detected from the first bytes).
EmbeddingSet read_embedding_set(const std::filesystem::path& path);
void write_embedding_set(const EmbeddingSet& set,
                         const std::filesystem::path& path);
void write_embedding_set_json(const EmbeddingSet& set,
                              const std::filesystem::path& path);

/// In-memory codec for the binary format; read/write delegate here.
std::string encode_hemb(const EmbeddingSet& set);
EmbeddingSet decode_hemb(std::string_view bytes);
EmbeddingSet decode_embedding_json(std::string_view text);
std::string encode_embedding_json(const EmbeddingSet& set);

struct Document {
  std::string id;
  std::vector<std::string> tokens;
};

struct Corpus {
  std::vector<Document> documents;
  /// Distinct tokens in order of first occurrence.
  std::vector<std::string> vocabulary;

  std::size_t size() const noexcept { return documents.size(); }
};

/// One document per line, whitespace tokenized, optional "id<TAB>" prefix.
/// Lines without an id are named by their 1-based line number.
Corpus read_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::string_view text);

enum class WordListKind { kStopwords, kNouns, kExpansionNouns };

struct WordList {
  WordListKind kind = WordListKind::kNouns;
  std::vector<std::string> words;  // file order

  bool contains(std::string_view w) const;
  std::unordered_set<std::string> as_set() const;
};

/// One word per line; blank lines skipped. Duplicates and empty lists are
/// rejected.
WordList read_word_list(const std::filesystem::path& path, WordListKind kind);
WordList make_word_list(std::vector<std::string> words, WordListKind kind);

struct IntruderInstance {
  std::string topic_id;
  std::vector<std::string> displayed_words;
  std::string true_intruder;
  std::vector<std::string> human_selections;
};

/// Checks the instance invariants; throws kValidation with `context`.
void validate_instance(const IntruderInstance& inst, const std::string& context);

/// JSON Lines reader; invariants are validated per line.
std::vector<IntruderInstance> read_intruder_instances(
    const std::filesystem::path& path);
std::vector<IntruderInstance> parse_intruder_instances(std::string_view text);

enum class HyphenPolicy {
  kDropWord,      // remove hyphenated words; drop the instance if it breaks
  kDropInstance,  // drop any instance showing a hyphenated word
  kKeep,
};

/// Applies the hyphen reduction used for the published annotation data.
/// Under kDropWord, annotator picks of a removed word are removed too; an
/// instance is discarded when its intruder is removed, fewer than three words
/// remain, or no annotator picks remain.
std::vector<IntruderInstance> apply_hyphen_policy(
    std::vector<IntruderInstance> instances, HyphenPolicy policy);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace cbtm
