#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cbtm/clustering.hpp"
#include "cbtm/embed_io.hpp"
#include "cbtm/metrics.hpp"
#include "cbtm/validation.hpp"

namespace cbtm {

namespace fs = std::filesystem;

/// Every knob of an end-to-end run. Defaults: Z=10, R=50, cleaning at 0.85,
/// reduction to 5 dimensions.
struct PipelineConfig {
  fs::path docs;
  fs::path vocab;
  fs::path stopwords;
  fs::path corpus;
  fs::path nouns;
  fs::path expand;             // expansion word list
  fs::path expand_embeddings;  // optional; merged into vocab embeddings
  fs::path eval_embeddings;    // optional; defaults to vocab (+ expansion)
  fs::path cohpw_embeddings;   // optional alternate set for COHPW
  fs::path out = "cbtm_out";

  std::optional<std::size_t> k;
  std::optional<std::pair<std::size_t, std::size_t>> k_range;
  Criterion criterion = Criterion::kBic;
  std::size_t reduce_dim = 5;  // 0 disables reduction
  std::size_t z = kDefaultTopWords;
  std::size_t repetitions = kDefaultRepetitions;
  double clean_threshold = 0.85;
  bool clean = true;
  bool refill = true;
  bool nouns_only = false;
  bool exclude_stopwords = true;
  std::uint64_t seed = 0;
  bool wess_verbatim = false;
  std::size_t npmi_window = 10;
  double npmi_epsilon = 1e-12;
  bool export_beta = false;

  // validate
  fs::path instances;
  fs::path embeddings;
  HyphenPolicy hyphen = HyphenPolicy::kDropWord;
  bool strict_ties = false;
};

/// Sets one field from its key (flag name without dashes, '-' or '_').
void set_config_value(PipelineConfig& config, const std::string& key,
                      const std::string& value);
/// Flat key=value lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);
void apply_config_file(PipelineConfig& config, const fs::path& path);

/// Error raised by a pipeline stage; the message is prefixed with the stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), "[" + stage + "] " + cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string content_hash(std::string_view bytes);
/// Hash of the document embeddings and every fit-relevant setting.
std::string fit_hash(const PipelineConfig& config);

struct FitOutcome {
  bool cache_hit = false;
  std::size_t k = 0;
  std::string hash;
};

struct TopicsOutcome {
  std::size_t k = 0;
  std::size_t candidates = 0;
  std::size_t truncated_topics = 0;
};

FitOutcome cmd_fit(const PipelineConfig& config);
TopicsOutcome cmd_topics(const PipelineConfig& config);
MetricReport cmd_eval(const PipelineConfig& config);
ValidationResult cmd_validate(const PipelineConfig& config);

fs::path fit_dir(const PipelineConfig& c);
fs::path topics_dir(const PipelineConfig& c);
fs::path eval_dir(const PipelineConfig& c);
fs::path validate_dir(const PipelineConfig& c);

}  // namespace cbtm
