#include "cbtm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cbtm/csv.hpp"
#include "cbtm/random.hpp"
#include "json.hpp"

namespace cbtm {
namespace {

std::size_t effective_z(const Topic& topic, std::size_t z) {
  return std::min(z, topic.size());
}

void require_z(std::size_t z, const char* metric) {
  if (z < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(metric) + ": Z must be >= 2, got " + std::to_string(z));
  }
}

void require_topics(const TopicSet& topics, std::size_t min_k, const char* metric) {
  if (topics.k() < min_k) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(metric) + " needs at least " + std::to_string(min_k) +
                    " topics, got " + std::to_string(topics.k()));
  }
}

Vector word_vector(const Topic& t, std::size_t i) {
  return t.vectors.row(static_cast<Eigen::Index>(i)).transpose();
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> expressivity_per_topic(const TopicSet& topics,
                                           const StopwordCentroid& psi) {
  require_topics(topics, 1, "EXPRS");
  std::vector<double> out;
  for (const auto& t : topics.topics) out.push_back(cosine_similarity(t.gamma, psi.vector));
  return out;
}

double expressivity(const TopicSet& topics, const StopwordCentroid& psi) {
  return mean(expressivity_per_topic(topics, psi));
}

double embedding_coherence(const Topic& topic, std::size_t z) {
  require_z(z, "COH");
  const std::size_t n = effective_z(topic, z);
  require_z(n, "COH");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vector wi = word_vector(topic, i);
    for (std::size_t j = i + 1; j < n; ++j) sum += cosine_similarity(wi, word_vector(topic, j));
  }
  return sum;
}

double mean_pairwise_coherence(const Topic& topic, std::size_t z) {
  const std::size_t n = effective_z(topic, z);
  return embedding_coherence(topic, z) / (static_cast<double>(n * (n - 1)) / 2.0);
}

double model_coherence(const TopicSet& topics, std::size_t z) {
  require_topics(topics, 1, "COH");
  std::vector<double> per;
  for (const auto& t : topics.topics) per.push_back(mean_pairwise_coherence(t, z));
  return mean(per);
}

double wess(const TopicSet& topics, bool verbatim) {
  require_topics(topics, 2, "WESS");
  const double k = static_cast<double>(topics.k());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < topics.k(); ++i) {
    for (std::size_t j = i + 1; j < topics.k(); ++j) {
      sum += cosine_similarity(topics.topics[i].gamma, topics.topics[j].gamma);
    }
  }
  const double pairs = (k - 1.0) * k / 2.0;
  return verbatim ? pairs * sum : sum / pairs;
}

double topic_diversity(const TopicSet& topics, std::size_t z) {
  require_topics(topics, 1, "TOP DIV");
  if (z == 0) throw Error(ErrorCode::kInvalidArgument, "TOP DIV: Z must be >= 1");
  std::unordered_set<std::string> unique;
  for (const auto& t : topics.topics) {
    if (t.size() < z) {
      throw Error(ErrorCode::kInvalidArgument,
                  "TOP DIV: topic " + std::to_string(t.id) + " has fewer than Z words");
    }
    for (std::size_t i = 0; i < z; ++i) unique.insert(t.words[i].word);
  }
  return static_cast<double>(unique.size()) / static_cast<double>(topics.k() * z);
}

double intruder_accuracy(const Topic& topic, const Vector& intruder, std::size_t z) {
  require_z(z, "INT");
  const std::size_t n = effective_z(topic, z);
  require_z(n, "INT");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector wi = word_vector(topic, i);
    const double to_intruder = cosine_similarity(wi, intruder);
    bool farthest = true;
    for (std::size_t j = 0; j < n && farthest; ++j) {
      if (j == i) continue;
      farthest = to_intruder < cosine_similarity(wi, word_vector(topic, j));
    }
    if (farthest) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double intruder_similarity(const Topic& topic, const Vector& intruder, std::size_t z) {
  require_z(z, "ISIM");
  const std::size_t n = effective_z(topic, z);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += cosine_similarity(word_vector(topic, i), intruder);
  return sum / static_cast<double>(n);
}

double intruder_shift_single(const Topic& topic, std::size_t replaced_rank,
                             const Vector& intruder, std::size_t z) {
  const std::size_t n = effective_z(topic, z);
  if (replaced_rank >= n) {
    throw Error(ErrorCode::kInvalidArgument, "ISH: replaced rank out of range");
  }
  const RowMatrix top = topic.vectors.topRows(static_cast<Eigen::Index>(n));
  const Vector before = top.colwise().mean().transpose();
  RowMatrix swapped = top;
  swapped.row(static_cast<Eigen::Index>(replaced_rank)) = intruder.transpose();
  const Vector after = swapped.colwise().mean().transpose();
  return cosine_similarity(before, after);
}

IntruderDraw draw_intruder(const TopicSet& topics, std::size_t source,
                           std::size_t repetition, std::size_t z, std::uint64_t seed) {
  const std::size_t k = topics.k();
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "intruder draws need K >= 2");
  IntruderDraw d;
  d.source = source;
  d.repetition = repetition;
  std::size_t other = bounded(counter_hash(seed, repetition, source, 1), k - 1);
  d.target = other >= source ? other + 1 : other;
  d.intruder_rank = bounded(counter_hash(seed, repetition, source, 2),
                            effective_z(topics.topics[d.target], z));
  d.replaced_rank = bounded(counter_hash(seed, repetition, source, 3),
                            effective_z(topics.topics[source], z));
  return d;
}

namespace {

template <typename F>
RepeatedMetric repeated(const TopicSet& topics, std::size_t z, std::uint64_t seed,
                        std::size_t repetitions, const char* name, F&& per_topic) {
  require_topics(topics, 2, name);
  require_z(z, name);
  if (repetitions == 0) {
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + ": R must be >= 1");
  }
  RepeatedMetric out;
  out.per_topic.assign(topics.k(), 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < repetitions; ++r) {
    std::vector<double> row;
    for (std::size_t k = 0; k < topics.k(); ++k) {
      const IntruderDraw d = draw_intruder(topics, k, r, z, seed);
      const Vector intruder = word_vector(topics.topics[d.target], d.intruder_rank);
      const double v = per_topic(topics.topics[k], d, intruder);
      row.push_back(v);
      out.per_topic[k] += v;
      total += v;
    }
    out.per_draw.push_back(std::move(row));
  }
  for (auto& v : out.per_topic) v /= static_cast<double>(repetitions);
  out.value = total / static_cast<double>(repetitions * topics.k());
  return out;
}

}  // namespace

RepeatedMetric intruder_shift(const TopicSet& topics, std::size_t z,
                              std::uint64_t seed, std::size_t repetitions) {
  return repeated(topics, z, seed, repetitions, "ISH",
                  [z](const Topic& t, const IntruderDraw& d, const Vector& w) {
                    return intruder_shift_single(t, d.replaced_rank, w, z);
                  });
}

RepeatedMetric intruder_accuracy_model(const TopicSet& topics, std::size_t z,
                                       std::uint64_t seed, std::size_t repetitions) {
  return repeated(topics, z, seed, repetitions, "INT",
                  [z](const Topic& t, const IntruderDraw&, const Vector& w) {
                    return intruder_accuracy(t, w, z);
                  });
}

RepeatedMetric intruder_similarity_model(const TopicSet& topics, std::size_t z,
                                         std::uint64_t seed, std::size_t repetitions) {
  return repeated(topics, z, seed, repetitions, "ISIM",
                  [z](const Topic& t, const IntruderDraw&, const Vector& w) {
                    return intruder_similarity(t, w, z);
                  });
}

// ---------------------------------------------------------------------------
// NPMI

WindowCounts::WindowCounts(const Corpus& reference, const std::vector<std::string>& targets,
                           std::size_t window) {
  if (reference.documents.empty()) {
    throw Error(ErrorCode::kEmptyInput, "NPMI: empty reference corpus");
  }
  if (window == 0) throw Error(ErrorCode::kInvalidArgument, "NPMI: window must be >= 1");
  for (const auto& t : targets) ids_.emplace(t, ids_.size());
  singles_.assign(ids_.size(), 0);

  std::unordered_map<std::string_view, std::size_t> lookup;
  for (const auto& [w, id] : ids_) lookup.emplace(w, id);

  std::vector<std::size_t> present;
  for (const auto& doc : reference.documents) {
    std::vector<long> token_ids(doc.tokens.size());
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      auto it = lookup.find(doc.tokens[i]);
      token_ids[i] = it == lookup.end() ? -1 : static_cast<long>(it->second);
    }
    const std::size_t n = token_ids.size();
    const std::size_t starts = n <= window ? 1 : n - window + 1;
    for (std::size_t s = 0; s < starts; ++s) {
      present.clear();
      for (std::size_t p = s; p < std::min(n, s + window); ++p) {
        if (token_ids[p] >= 0) present.push_back(static_cast<std::size_t>(token_ids[p]));
      }
      std::sort(present.begin(), present.end());
      present.erase(std::unique(present.begin(), present.end()), present.end());
      for (std::size_t a = 0; a < present.size(); ++a) {
        ++singles_[present[a]];
        for (std::size_t b = a + 1; b < present.size(); ++b) ++pairs_[{present[a], present[b]}];
      }
      ++windows_;
    }
  }
}

std::size_t WindowCounts::count(const std::string& w) const {
  auto it = ids_.find(w);
  return it == ids_.end() ? 0 : singles_[it->second];
}

std::size_t WindowCounts::count(const std::string& a, const std::string& b) const {
  auto ia = ids_.find(a);
  auto ib = ids_.find(b);
  if (ia == ids_.end() || ib == ids_.end()) return 0;
  if (ia->second == ib->second) return singles_[ia->second];
  auto key = std::minmax(ia->second, ib->second);
  auto it = pairs_.find({key.first, key.second});
  return it == pairs_.end() ? 0 : it->second;
}

double npmi_pair(const WindowCounts& counts, const std::string& a, const std::string& b,
                 double epsilon) {
  const double n = static_cast<double>(counts.windows());
  const std::size_t ca = counts.count(a);
  const std::size_t cb = counts.count(b);
  if (ca == 0 || cb == 0) return -1.0;
  const double pa = static_cast<double>(ca) / n;
  const double pb = static_cast<double>(cb) / n;
  const double pab = static_cast<double>(counts.count(a, b)) / n + epsilon;
  if (pab >= 1.0) return 1.0;
  const double value = (std::log(pab) - std::log(pa) - std::log(pb)) / -std::log(pab);
  return std::clamp(value, -1.0, 1.0);
}

std::vector<double> npmi_per_topic(const TopicSet& topics, const Corpus& reference,
                                   std::size_t z, const NpmiOptions& options) {
  require_topics(topics, 1, "NPMI");
  require_z(z, "NPMI");
  std::set<std::string> targets;
  for (const auto& t : topics.topics) {
    for (std::size_t i = 0; i < effective_z(t, z); ++i) targets.insert(t.words[i].word);
  }
  const WindowCounts counts(reference, {targets.begin(), targets.end()}, options.window);
  std::vector<double> out;
  for (const auto& t : topics.topics) {
    const std::size_t n = effective_z(t, z);
    require_z(n, "NPMI");
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        sum += npmi_pair(counts, t.words[i].word, t.words[j].word, options.epsilon);
      }
    }
    out.push_back(sum / (static_cast<double>(n * (n - 1)) / 2.0));
  }
  return out;
}

double npmi_coherence(const TopicSet& topics, const Corpus& reference, std::size_t z,
                      const NpmiOptions& options) {
  return mean(npmi_per_topic(topics, reference, z, options));
}

// ---------------------------------------------------------------------------
// Report

std::optional<double> MetricReport::get(const std::string& metric) const {
  auto it = model.find(metric);
  if (it == model.end()) return std::nullopt;
  return it->second;
}

MetricReport evaluate_all(const TopicSet& topics, const StopwordCentroid& psi,
                          const Corpus& reference, const EvalOptions& options,
                          const TopicSet* cohpw_topics) {
  MetricReport rep;
  rep.z = options.z;
  rep.repetitions = options.repetitions;
  rep.seed = options.seed;
  rep.num_topics = topics.k();
  rep.embedding_id = options.embedding_id;
  rep.npmi = options.npmi;
  rep.wess_verbatim = options.wess_verbatim;
  rep.effective_z = options.z;
  for (const auto& t : topics.topics) rep.effective_z = std::min(rep.effective_z, t.size());

  auto run = [](const char* name, auto&& f) {
    try {
      return f();
    } catch (const Error& e) {
      throw Error(e.code(), std::string(name) + ": " + e.what());
    }
  };

  rep.per_topic["EXPRS"] = run("EXPRS", [&] { return expressivity_per_topic(topics, psi); });
  rep.model["EXPRS"] = mean(rep.per_topic["EXPRS"]);

  rep.per_topic["COH"] = run("COH", [&] {
    std::vector<double> v;
    for (const auto& t : topics.topics) v.push_back(mean_pairwise_coherence(t, options.z));
    return v;
  });
  rep.model["COH"] = mean(rep.per_topic["COH"]);

  if (cohpw_topics) {
    rep.per_topic["COHPW"] = run("COHPW", [&] {
      std::vector<double> v;
      for (const auto& t : cohpw_topics->topics) v.push_back(mean_pairwise_coherence(t, options.z));
      return v;
    });
    rep.model["COHPW"] = mean(rep.per_topic["COHPW"]);
  }

  rep.model["WESS"] = run("WESS", [&] { return wess(topics, options.wess_verbatim); });
  rep.model["TOP DIV"] = run("TOP DIV", [&] { return topic_diversity(topics, rep.effective_z); });

  auto add_repeated = [&](const char* name, auto&& f) {
    RepeatedMetric m = run(name, f);
    rep.per_topic[name] = m.per_topic;
    rep.model[name] = m.value;
  };
  add_repeated("ISH", [&] { return intruder_shift(topics, options.z, options.seed, options.repetitions); });
  add_repeated("INT", [&] { return intruder_accuracy_model(topics, options.z, options.seed, options.repetitions); });
  add_repeated("ISIM", [&] { return intruder_similarity_model(topics, options.z, options.seed, options.repetitions); });

  rep.per_topic["NPMI"] = run("NPMI", [&] { return npmi_per_topic(topics, reference, options.z, options.npmi); });
  rep.model["NPMI"] = mean(rep.per_topic["NPMI"]);
  return rep;
}

std::string report_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["config"] = {{"z", report.z},
                 {"effective_z", report.effective_z},
                 {"repetitions", report.repetitions},
                 {"seed", report.seed},
                 {"num_topics", report.num_topics},
                 {"embedding_id", report.embedding_id},
                 {"npmi_window", report.npmi.window},
                 {"npmi_epsilon", report.npmi.epsilon},
                 {"wess", report.wess_verbatim ? "verbatim" : "pair-mean"}};
  j["model"] = report.model;
  j["per_topic"] = report.per_topic;
  j["headline_excludes"] = {"ISH"};
  return j.dump(1) + "\n";
}

std::string report_to_csv(const MetricReport& report) {
  static const char* kColumns[] = {"NPMI", "COHPW", "COH", "TOP DIV", "WESS", "EXPRS", "ISIM", "INT"};
  std::string header, row;
  for (const char* c : kColumns) {
    if (!header.empty()) {
      header += ',';
      row += ',';
    }
    header += c;
    if (auto v = report.get(c)) row += csv_number(*v);
  }
  return header + "\n" + row + "\n";
}

}  // namespace cbtm
