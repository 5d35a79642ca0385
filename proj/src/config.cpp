#include <algorithm>
#include <charconv>
#include <sstream>

#include "cbtm/pipeline.hpp"

namespace cbtm {
namespace {

std::string normalize_key(std::string key) {
  while (!key.empty() && key.front() == '-') key.erase(key.begin());
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kInvalidArgument,
                "invalid value '" + value + "' for '" + key + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error(ErrorCode::kInvalidArgument, "invalid boolean '" + value + "' for '" + key + "'");
}

}  // namespace

void set_config_value(PipelineConfig& c, const std::string& raw_key, const std::string& raw) {
  const std::string key = normalize_key(raw_key);
  const std::string value = trim(raw);
  if (key == "docs") c.docs = value;
  else if (key == "vocab") c.vocab = value;
  else if (key == "stopwords") c.stopwords = value;
  else if (key == "corpus") c.corpus = value;
  else if (key == "nouns") c.nouns = value;
  else if (key == "expand") c.expand = value;
  else if (key == "expand-embeddings") c.expand_embeddings = value;
  else if (key == "eval-embeddings") c.eval_embeddings = value;
  else if (key == "cohpw-embeddings") c.cohpw_embeddings = value;
  else if (key == "out") c.out = value;
  else if (key == "k") c.k = parse_number<std::size_t>(key, value);
  else if (key == "k-range") {
    const auto colon = value.find_first_of(":-,");
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "k-range must look like MIN:MAX, got '" + value + "'");
    }
    c.k_range = {parse_number<std::size_t>(key, value.substr(0, colon)),
                 parse_number<std::size_t>(key, value.substr(colon + 1))};
  } else if (key == "criterion") {
    if (value == "aic") c.criterion = Criterion::kAic;
    else if (value == "bic") c.criterion = Criterion::kBic;
    else throw Error(ErrorCode::kInvalidArgument, "criterion must be aic or bic");
  } else if (key == "reduce-dim") c.reduce_dim = parse_number<std::size_t>(key, value);
  else if (key == "z") c.z = parse_number<std::size_t>(key, value);
  else if (key == "repetitions") c.repetitions = parse_number<std::size_t>(key, value);
  else if (key == "clean-threshold") c.clean_threshold = parse_number<double>(key, value);
  else if (key == "clean") c.clean = parse_bool(key, value);
  else if (key == "no-clean") c.clean = !parse_bool(key, value);
  else if (key == "refill") c.refill = parse_bool(key, value);
  else if (key == "no-refill") c.refill = !parse_bool(key, value);
  else if (key == "nouns-only") c.nouns_only = parse_bool(key, value);
  else if (key == "exclude-stopwords") c.exclude_stopwords = parse_bool(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "wess-verbatim") c.wess_verbatim = parse_bool(key, value);
  else if (key == "npmi-window") c.npmi_window = parse_number<std::size_t>(key, value);
  else if (key == "npmi-epsilon") c.npmi_epsilon = parse_number<double>(key, value);
  else if (key == "export-beta") c.export_beta = parse_bool(key, value);
  else if (key == "instances") c.instances = value;
  else if (key == "embeddings") c.embeddings = value;
  else if (key == "hyphen") {
    if (value == "drop-word") c.hyphen = HyphenPolicy::kDropWord;
    else if (value == "drop-instance") c.hyphen = HyphenPolicy::kDropInstance;
    else if (value == "keep") c.hyphen = HyphenPolicy::kKeep;
    else throw Error(ErrorCode::kInvalidArgument, "hyphen must be drop-word, drop-instance or keep");
  } else if (key == "strict-ties") c.strict_ties = parse_bool(key, value);
  else throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + raw_key + "'");
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "config line " + std::to_string(line_no) + ": expected key=value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

void apply_config_file(PipelineConfig& config, const fs::path& path) {
  for (const auto& [k, v] : parse_config_text(read_file(path))) set_config_value(config, k, v);
}

}  // namespace cbtm
