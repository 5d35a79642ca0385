#include "cbtm/embed_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cbtm {

using json = nlohmann::json;

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kMalformedHeader: return "malformed-header";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kTrailingData: return "trailing-data";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kDuplicateLabel: return "duplicate-label";
    case ErrorCode::kMissingEmbedding: return "missing-embedding";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kNumerical: return "numerical";
    case ErrorCode::kStaleCache: return "stale-cache";
    case ErrorCode::kLocked: return "locked";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// EmbeddingSet

EmbeddingSet::EmbeddingSet(std::size_t dimension)
    : dimension_(dimension), vectors_(0, static_cast<Eigen::Index>(dimension)) {
  if (dimension == 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be >= 1");
  }
}

EmbeddingSet::EmbeddingSet(std::vector<std::string> labels, RowMatrix vectors)
    : dimension_(static_cast<std::size_t>(vectors.cols())),
      labels_(std::move(labels)),
      vectors_(std::move(vectors)) {
  if (dimension_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be >= 1");
  }
  if (labels_.size() != static_cast<std::size_t>(vectors_.rows())) {
    throw Error(ErrorCode::kDimensionMismatch,
                "label count " + std::to_string(labels_.size()) +
                    " does not match vector count " +
                    std::to_string(vectors_.rows()));
  }
  index_.reserve(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!vectors_.row(i).allFinite()) {
      throw Error(ErrorCode::kNonFinite,
                  "non-finite value in record " + std::to_string(i) + " ('" +
                      labels_[i] + "')");
    }
    if (!index_.emplace(labels_[i], i).second) {
      throw Error(ErrorCode::kDuplicateLabel,
                  "duplicate label '" + labels_[i] + "' at record " +
                      std::to_string(i));
    }
  }
}

std::optional<std::size_t> EmbeddingSet::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vector EmbeddingSet::at(std::string_view label) const {
  auto i = find(label);
  if (!i) {
    throw Error(ErrorCode::kMissingEmbedding,
                "no embedding for '" + std::string(label) + "'");
  }
  return vector(*i);
}

void EmbeddingSet::push_back(std::string label, const Vector& v) {
  if (static_cast<std::size_t>(v.size()) != dimension_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vector for '" + label + "' has dimension " +
                    std::to_string(v.size()) + ", expected " +
                    std::to_string(dimension_));
  }
  if (!v.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "non-finite value in '" + label + "'");
  }
  if (index_.count(label)) {
    throw Error(ErrorCode::kDuplicateLabel, "duplicate label '" + label + "'");
  }
  const auto row = vectors_.rows();
  vectors_.conservativeResize(row + 1, Eigen::NoChange);
  vectors_.row(row) = v.transpose();
  index_.emplace(label, labels_.size());
  labels_.push_back(std::move(label));
}

EmbeddingSet EmbeddingSet::subset(const std::vector<std::string>& labels) const {
  RowMatrix m(static_cast<Eigen::Index>(labels.size()),
              static_cast<Eigen::Index>(dimension_));
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto j = find(labels[i]);
    if (!j) {
      missing.push_back(labels[i]);
      continue;
    }
    m.row(i) = vectors_.row(*j);
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " word(s) lack an embedding:";
    for (std::size_t i = 0; i < std::min<std::size_t>(10, missing.size()); ++i) {
      msg += " " + missing[i];
    }
    throw Error(ErrorCode::kMissingEmbedding, msg);
  }
  return EmbeddingSet(labels, std::move(m));
}

EmbeddingSet EmbeddingSet::scaled(double factor) const {
  return EmbeddingSet(labels_, vectors_ * factor);
}

bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
  return a.dimension_ == b.dimension_ && a.labels_ == b.labels_ &&
         a.vectors_ == b.vectors_;
}

EmbeddingSet merge_embedding_sets(const EmbeddingSet& a, const EmbeddingSet& b) {
  if (a.dimension() != b.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cannot merge embedding sets of dimension " +
                    std::to_string(a.dimension()) + " and " +
                    std::to_string(b.dimension()));
  }
  EmbeddingSet out = a;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (auto j = a.find(b.label(i))) {
      if (a.row(*j) != b.row(i)) {
        throw Error(ErrorCode::kDuplicateLabel,
                    "label '" + b.label(i) +
                        "' appears in both sets with different vectors");
      }
      continue;
    }
    out.push_back(b.label(i), b.vector(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() +
                                    "': " + std::strerror(errno));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() +
                                    "' for writing: " + std::strerror(errno));
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) {
    throw Error(ErrorCode::kIo, "write to '" + path.string() +
                                    "' failed: " + std::strerror(errno));
  }
}

// ---------------------------------------------------------------------------
// HEMB1

namespace {

constexpr char kMagic[6] = {'H', 'E', 'M', 'B', '1', '\0'};
constexpr std::size_t kHeaderSize = 6 + 4 + 8;

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(bytes[offset + i]))
             << (8 * i);
  }
  return value;
}

bool looks_like_hemb(std::string_view bytes) {
  return bytes.size() >= 6 && std::memcmp(bytes.data(), kMagic, 6) == 0;
}

}  // namespace

std::string encode_hemb(const EmbeddingSet& set) {
  std::string out(kMagic, 6);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.dimension()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::string& label = set.label(i);
    if (label.size() > 0xFFFF) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label of record " + std::to_string(i) +
                      " exceeds 65535 bytes");
    }
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(label.size()));
    out += label;
    for (std::size_t d = 0; d < set.dimension(); ++d) {
      const auto f = static_cast<float>(set.matrix()(i, d));
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  return out;
}

EmbeddingSet decode_hemb(std::string_view bytes) {
  if (bytes.size() < kHeaderSize || !looks_like_hemb(bytes)) {
    throw Error(ErrorCode::kMalformedHeader,
                "malformed HEMB1 header at byte offset 0");
  }
  const auto dim = get_le<std::uint32_t>(bytes, 6);
  const auto count = get_le<std::uint64_t>(bytes, 10);
  if (dim == 0) {
    throw Error(ErrorCode::kMalformedHeader,
                "HEMB1 header declares dimension 0 (byte offset 6)");
  }
  const std::size_t record_floor = 2 + 4 * static_cast<std::size_t>(dim);
  if (count > (bytes.size() - kHeaderSize) / record_floor) {
    throw Error(ErrorCode::kTruncated,
                "header declares " + std::to_string(count) +
                    " records but the file holds at most " +
                    std::to_string((bytes.size() - kHeaderSize) / record_floor));
  }

  std::vector<std::string> labels;
  labels.reserve(count);
  RowMatrix m(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  std::unordered_set<std::string_view> seen;
  std::size_t offset = kHeaderSize;
  for (std::uint64_t r = 0; r < count; ++r) {
    if (offset + 2 > bytes.size()) {
      throw Error(ErrorCode::kTruncated,
                  "record " + std::to_string(r) + " truncated at byte offset " +
                      std::to_string(offset));
    }
    const auto len = get_le<std::uint16_t>(bytes, offset);
    offset += 2;
    if (offset + len + 4 * static_cast<std::size_t>(dim) > bytes.size()) {
      throw Error(ErrorCode::kTruncated,
                  "record " + std::to_string(r) + " truncated at byte offset " +
                      std::to_string(offset));
    }
    std::string_view label = bytes.substr(offset, len);
    if (!seen.insert(label).second) {
      throw Error(ErrorCode::kDuplicateLabel,
                  "duplicate label '" + std::string(label) + "' at record " +
                      std::to_string(r));
    }
    labels.emplace_back(label);
    offset += len;
    for (std::uint32_t d = 0; d < dim; ++d) {
      const auto f = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset));
      if (!std::isfinite(f)) {
        throw Error(ErrorCode::kNonFinite,
                    "non-finite value in record " + std::to_string(r) +
                        " at byte offset " + std::to_string(offset));
      }
      m(static_cast<Eigen::Index>(r), d) = f;
      offset += 4;
    }
  }
  if (offset != bytes.size()) {
    throw Error(ErrorCode::kTrailingData,
                std::to_string(bytes.size() - offset) +
                    " unexpected bytes after record " +
                    std::to_string(count == 0 ? 0 : count - 1) +
                    " at byte offset " + std::to_string(offset) +
                    " (record count or dimension disagrees with header)");
  }
  return EmbeddingSet(std::move(labels), std::move(m));
}

std::string encode_embedding_json(const EmbeddingSet& set) {
  json j;
  j["dimension"] = set.dimension();
  json entries = json::array();
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::vector<double> v(set.matrix().row(i).begin(), set.matrix().row(i).end());
    entries.push_back({{"label", set.label(i)}, {"vector", v}});
  }
  j["entries"] = std::move(entries);
  return j.dump(1) + "\n";
}

EmbeddingSet decode_embedding_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedHeader,
                std::string("invalid embedding JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("dimension") || !j["dimension"].is_number_unsigned() ||
      !j.contains("entries") || !j["entries"].is_array()) {
    throw Error(ErrorCode::kMalformedHeader,
                "embedding JSON needs unsigned 'dimension' and array 'entries'");
  }
  const auto dim = j["dimension"].get<std::size_t>();
  const auto& entries = j["entries"];
  if (dim == 0) {
    throw Error(ErrorCode::kMalformedHeader, "embedding JSON declares dimension 0");
  }
  std::vector<std::string> labels;
  RowMatrix m(static_cast<Eigen::Index>(entries.size()),
              static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < entries.size(); ++r) {
    const auto& e = entries[r];
    if (!e.is_object() || !e.contains("label") || !e["label"].is_string() ||
        !e.contains("vector") || !e["vector"].is_array()) {
      throw Error(ErrorCode::kMalformedHeader,
                  "record " + std::to_string(r) + " lacks 'label' or 'vector'");
    }
    const auto& v = e["vector"];
    if (v.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "record " + std::to_string(r) + " has " +
                      std::to_string(v.size()) + " components, header says " +
                      std::to_string(dim));
    }
    for (std::size_t d = 0; d < dim; ++d) {
      if (!v[d].is_number()) {
        throw Error(ErrorCode::kNonFinite,
                    "non-numeric value in record " + std::to_string(r));
      }
      const double x = v[d].get<double>();
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::kNonFinite,
                    "non-finite value in record " + std::to_string(r));
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = x;
    }
    labels.push_back(e["label"].get<std::string>());
  }
  return EmbeddingSet(std::move(labels), std::move(m));
}

EmbeddingSet read_embedding_set(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (looks_like_hemb(bytes)) return decode_hemb(bytes);
  const auto first = bytes.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && bytes[first] == '{') {
    return decode_embedding_json(bytes);
  }
  throw Error(ErrorCode::kMalformedHeader,
              "'" + path.string() +
                  "' is neither HEMB1 nor embedding JSON (byte offset 0)");
}

void write_embedding_set(const EmbeddingSet& set,
                         const std::filesystem::path& path) {
  write_file(path, encode_hemb(set));
}

void write_embedding_set_json(const EmbeddingSet& set,
                              const std::filesystem::path& path) {
  write_file(path, encode_embedding_json(set));
}

// ---------------------------------------------------------------------------
// Corpus and word lists

Corpus parse_corpus(std::string_view text) {
  Corpus corpus;
  std::unordered_set<std::string> vocab;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }

    Document doc;
    if (auto tab = line.find('\t'); tab != std::string_view::npos &&
                                    line.substr(0, tab).find(' ') == std::string_view::npos &&
                                    tab > 0) {
      doc.id = std::string(line.substr(0, tab));
      line.remove_prefix(tab + 1);
    } else {
      doc.id = std::to_string(line_no);
    }
    std::istringstream ss{std::string(line)};
    for (std::string tok; ss >> tok;) doc.tokens.push_back(std::move(tok));
    if (doc.tokens.empty()) {
      throw Error(ErrorCode::kValidation,
                  "document '" + doc.id + "' on line " +
                      std::to_string(line_no) + " has no tokens");
    }
    if (!ids.insert(doc.id).second) {
      throw Error(ErrorCode::kDuplicateLabel,
                  "duplicate document id '" + doc.id + "' on line " +
                      std::to_string(line_no));
    }
    for (const auto& t : doc.tokens) {
      if (vocab.insert(t).second) corpus.vocabulary.push_back(t);
    }
    corpus.documents.push_back(std::move(doc));
    if (end == text.size()) break;
  }
  if (corpus.documents.empty()) {
    throw Error(ErrorCode::kEmptyInput, "empty corpus");
  }
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_file(path));
}

bool WordList::contains(std::string_view w) const {
  return std::find(words.begin(), words.end(), w) != words.end();
}

std::unordered_set<std::string> WordList::as_set() const {
  return {words.begin(), words.end()};
}

WordList make_word_list(std::vector<std::string> words, WordListKind kind) {
  if (words.empty()) {
    throw Error(ErrorCode::kEmptyInput, "word list is empty");
  }
  std::unordered_set<std::string> seen;
  for (const auto& w : words) {
    if (!seen.insert(w).second) {
      throw Error(ErrorCode::kDuplicateLabel,
                  "duplicate word '" + w + "' in word list");
    }
  }
  return WordList{kind, std::move(words)};
}

WordList read_word_list(const std::filesystem::path& path, WordListKind kind) {
  std::istringstream in(read_file(path));
  std::vector<std::string> words;
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    words.push_back(line.substr(b, e - b + 1));
  }
  try {
    return make_word_list(std::move(words), kind);
  } catch (const Error& e) {
    throw Error(e.code(), "'" + path.string() + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Intruder instances

void validate_instance(const IntruderInstance& inst, const std::string& context) {
  const auto& shown = inst.displayed_words;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kValidation, context + ": " + why);
  };
  if (shown.size() < 3) fail("fewer than 3 displayed words");
  std::unordered_set<std::string> set(shown.begin(), shown.end());
  if (set.size() != shown.size()) fail("duplicate displayed words");
  if (!set.count(inst.true_intruder)) {
    fail("true intruder '" + inst.true_intruder + "' is not displayed");
  }
  for (const auto& h : inst.human_selections) {
    if (!set.count(h)) fail("human selection '" + h + "' is not displayed");
  }
}

std::vector<IntruderInstance> parse_intruder_instances(std::string_view text) {
  std::vector<IntruderInstance> out;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string ctx = "line " + std::to_string(line_no);
    IntruderInstance inst;
    try {
      const json j = json::parse(line);
      inst.topic_id = j.at("topic_id").is_string()
                          ? j.at("topic_id").get<std::string>()
                          : j.at("topic_id").dump();
      inst.displayed_words = j.at("displayed_words").get<std::vector<std::string>>();
      inst.true_intruder = j.at("true_intruder").get<std::string>();
      inst.human_selections = j.at("human_selections").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kValidation, ctx + ": " + e.what());
    }
    validate_instance(inst, ctx);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<IntruderInstance> read_intruder_instances(
    const std::filesystem::path& path) {
  return parse_intruder_instances(read_file(path));
}

std::vector<IntruderInstance> apply_hyphen_policy(
    std::vector<IntruderInstance> instances, HyphenPolicy policy) {
  auto hyphenated = [](const std::string& w) {
    return w.find('-') != std::string::npos;
  };
  std::vector<IntruderInstance> out;
  for (auto& inst : instances) {
    switch (policy) {
      case HyphenPolicy::kKeep:
        out.push_back(std::move(inst));
        break;
      case HyphenPolicy::kDropInstance:
        if (std::none_of(inst.displayed_words.begin(),
                         inst.displayed_words.end(), hyphenated)) {
          out.push_back(std::move(inst));
        }
        break;
      case HyphenPolicy::kDropWord: {
        if (hyphenated(inst.true_intruder)) break;
        const bool had_selections = !inst.human_selections.empty();
        std::erase_if(inst.displayed_words, hyphenated);
        std::erase_if(inst.human_selections, hyphenated);
        if (inst.displayed_words.size() < 3 ||
            (had_selections && inst.human_selections.empty())) {
          break;
        }
        out.push_back(std::move(inst));
        break;
      }
    }
  }
  return out;
}

}  // namespace cbtm
