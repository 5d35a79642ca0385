#include "cbtm/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>

#include "cbtm/reduction.hpp"
#include "cbtm/topics.hpp"
#include "cbtm/vector_core.hpp"
#include "json.hpp"

namespace cbtm {

using json = nlohmann::json;

fs::path fit_dir(const PipelineConfig& c) { return c.out / "fit"; }
fs::path topics_dir(const PipelineConfig& c) { return c.out / "topics"; }
fs::path eval_dir(const PipelineConfig& c) { return c.out / "eval"; }
fs::path validate_dir(const PipelineConfig& c) { return c.out / "validate"; }

namespace {

// Runs `f`, re-raising library errors tagged with the stage name.
template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

// Exclusive lock on the output directory for the lifetime of the object.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".cbtm.lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
      throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
    }
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      if (errno == EEXIST) {
        throw Error(ErrorCode::kLocked,
                    "output directory is in use (remove '" + path_.string() +
                        "' if no other run is active)");
      }
      throw Error(ErrorCode::kIo, "cannot create lock '" + path_.string() +
                                      "': " + std::strerror(errno));
    }
  }
  ~DirectoryLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
}

void require_path(const fs::path& p, const char* what) {
  if (p.empty()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("missing required path: ") + what);
  }
}

std::string fit_settings(const PipelineConfig& c) {
  std::ostringstream s;
  s << "k=" << (c.k ? std::to_string(*c.k) : "-");
  s << ";k_range=";
  if (c.k_range) s << c.k_range->first << ":" << c.k_range->second;
  s << ";criterion=" << (c.criterion == Criterion::kAic ? "aic" : "bic");
  s << ";reduce_dim=" << c.reduce_dim << ";seed=" << c.seed << ";reducer=pca;v=1";
  return s.str();
}

EmbeddingSet load_vocab_embeddings(const PipelineConfig& c) {
  require_path(c.vocab, "vocabulary embeddings (--vocab)");
  EmbeddingSet vocab = read_embedding_set(c.vocab);
  if (!c.expand_embeddings.empty()) {
    vocab = merge_embedding_sets(vocab, read_embedding_set(c.expand_embeddings));
  }
  return vocab;
}

std::string identifier(const fs::path& p) { return p.filename().string(); }

}  // namespace

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fit_hash(const PipelineConfig& config) {
  require_path(config.docs, "document embeddings (--docs)");
  const std::string bytes = read_file(config.docs);
  return content_hash(content_hash(bytes) + "|" + fit_settings(config));
}

FitOutcome cmd_fit(const PipelineConfig& config) {
  const EmbeddingSet docs = stage("embed-io", [&] {
    require_path(config.docs, "document embeddings (--docs)");
    return read_embedding_set(config.docs);
  });
  const std::string hash = stage("embed-io", [&] { return fit_hash(config); });

  return stage("fit", [&]() -> FitOutcome {
    if (!config.k && !config.k_range) {
      throw Error(ErrorCode::kInvalidArgument, "either --k or --k-range is required");
    }
    DirectoryLock lock(config.out);
    const fs::path dir = fit_dir(config);
    const fs::path manifest = dir / "manifest.json";
    if (fs::exists(manifest) && fs::exists(dir / "centroids.json") &&
        fs::exists(dir / "gmm.json") && fs::exists(dir / "theta.csv")) {
      const auto j = json::parse(read_file(manifest), nullptr, false);
      if (!j.is_discarded() && j.value("hash", "") == hash) {
        return FitOutcome{true, j.value("k", std::size_t{0}), hash};
      }
    }

    EmbeddingSet reduced = docs;
    std::optional<ReductionModel> reduction;
    if (config.reduce_dim > 0 && config.reduce_dim < docs.dimension()) {
      reduction = stage("reduction", [&] { return fit_reduction(docs, config.reduce_dim); });
      reduced = transform(*reduction, docs);
    }

    GmmFit fit;
    std::optional<KSelection> selection;
    stage("clustering", [&] {
      if (config.k_range) {
        selection = select_k(reduced, config.k_range->first, config.k_range->second,
                             config.criterion, config.seed);
        for (std::size_t i = 0; i < selection->ks.size(); ++i) {
          if (selection->ks[i] == selection->best_k) fit = selection->fits[i];
        }
      } else {
        fit = fit_gmm(reduced, *config.k, config.seed + *config.k);
      }
      return 0;
    });
    const RowMatrix mu = stage("clustering", [&] {
      return original_space_centroids(fit.theta, docs);
    });

    ensure_dir(dir);
    if (reduction) write_file(dir / "reduction.json", reduction_to_json(*reduction));
    write_file(dir / "gmm.json", gmm_to_json(fit.model));
    write_file(dir / "theta.csv", theta_to_csv(fit.theta));
    write_file(dir / "theta.json", theta_to_json(fit.theta));
    std::vector<std::string> names;
    for (std::size_t k = 0; k < fit.model.k; ++k) names.push_back("topic_" + std::to_string(k));
    write_embedding_set_json(EmbeddingSet(names, mu), dir / "centroids.json");
    if (selection) {
      json s;
      s["criterion"] = config.criterion == Criterion::kAic ? "aic" : "bic";
      s["ks"] = selection->ks;
      s["scores"] = selection->scores;
      s["best_k"] = selection->best_k;
      write_file(dir / "selection.json", s.dump(1) + "\n");
    }
    json m;
    m["hash"] = hash;
    m["k"] = fit.model.k;
    m["settings"] = fit_settings(config);
    m["documents"] = docs.size();
    m["converged"] = fit.model.converged;
    write_file(manifest, m.dump(1) + "\n");
    return FitOutcome{false, fit.model.k, hash};
  });
}

TopicsOutcome cmd_topics(const PipelineConfig& config) {
  const RowMatrix centroids = stage("fit", [&] {
    const fs::path manifest = fit_dir(config) / "manifest.json";
    if (!fs::exists(manifest)) {
      throw Error(ErrorCode::kStaleCache,
                  "no fit artifacts in '" + fit_dir(config).string() + "'; run `cbtm fit` first");
    }
    const auto j = json::parse(read_file(manifest), nullptr, false);
    const std::string current = fit_hash(config);
    if (j.is_discarded() || j.value("hash", "") != current) {
      throw Error(ErrorCode::kStaleCache,
                  "fit artifacts were produced with different inputs or settings; "
                  "rerun `cbtm fit` with the current configuration");
    }
    return read_embedding_set(fit_dir(config) / "centroids.json").matrix();
  });

  struct Inputs {
    Corpus corpus;
    EmbeddingSet vocab;
    std::optional<WordList> nouns;
    std::optional<WordList> expansion;
    std::vector<std::string> stopwords;
  };
  Inputs in = stage("embed-io", [&] {
    require_path(config.corpus, "corpus (--corpus)");
    Inputs r{read_corpus(config.corpus), load_vocab_embeddings(config), {}, {}, {}};
    if (config.nouns_only) {
      require_path(config.nouns, "noun list (--nouns) for --nouns-only");
      r.nouns = read_word_list(config.nouns, WordListKind::kNouns);
    }
    if (!config.expand.empty()) {
      r.expansion = read_word_list(config.expand, WordListKind::kExpansionNouns);
    }
    if (config.exclude_stopwords && !config.stopwords.empty()) {
      r.stopwords = read_embedding_set(config.stopwords).labels();
    }
    return r;
  });

  return stage("topics", [&] {
    DirectoryLock lock(config.out);
    const CandidateVocabulary cands =
        build_candidates(in.corpus, in.vocab, in.nouns ? &*in.nouns : nullptr,
                         in.expansion ? &*in.expansion : nullptr,
                         in.stopwords.empty() ? nullptr : &in.stopwords);
    TopicSet topics = extract_topics(cands, centroids, config.z);
    if (config.clean) {
      topics = clean_topics(topics, cands, {config.clean_threshold, config.z, config.refill});
    }
    const fs::path dir = topics_dir(config);
    ensure_dir(dir);
    write_file(dir / "topics.json", topics_to_json(topics));
    write_file(dir / "topics.csv", topics_to_csv(topics));
    if (config.export_beta) write_file(dir / "beta.csv", beta_to_csv(topics));
    TopicsOutcome out;
    out.k = topics.k();
    out.candidates = cands.size();
    for (const auto& t : topics.topics) out.truncated_topics += t.truncated ? 1 : 0;
    return out;
  });
}

MetricReport cmd_eval(const PipelineConfig& config) {
  struct Inputs {
    TopicSet topics;
    std::optional<TopicSet> cohpw;
    StopwordCentroid psi;
    Corpus reference;
    std::string embedding_id;
  };
  Inputs in = stage("embed-io", [&] {
    const fs::path topics_path = topics_dir(config) / "topics.json";
    if (!fs::exists(topics_path)) {
      throw Error(ErrorCode::kStaleCache, "no topics in '" + topics_dir(config).string() +
                                              "'; run `cbtm topics` first");
    }
    EmbeddingSet emb = config.eval_embeddings.empty() ? load_vocab_embeddings(config)
                                                      : read_embedding_set(config.eval_embeddings);
    require_path(config.stopwords, "stopword embeddings (--stopwords)");
    require_path(config.corpus, "reference corpus (--corpus)");
    const std::string text = read_file(topics_path);
    Inputs r{topics_from_json(text, emb), std::nullopt,
             stopword_centroid(read_embedding_set(config.stopwords)),
             read_corpus(config.corpus),
             identifier(config.eval_embeddings.empty() ? config.vocab : config.eval_embeddings)};
    if (!config.cohpw_embeddings.empty()) {
      r.cohpw = topics_from_json(text, read_embedding_set(config.cohpw_embeddings));
    }
    return r;
  });

  return stage("eval", [&] {
    EvalOptions opts;
    opts.z = config.z;
    opts.repetitions = config.repetitions;
    opts.seed = config.seed;
    opts.npmi = {config.npmi_window, config.npmi_epsilon};
    opts.wess_verbatim = config.wess_verbatim;
    opts.embedding_id = in.embedding_id;
    MetricReport report =
        evaluate_all(in.topics, in.psi, in.reference, opts, in.cohpw ? &*in.cohpw : nullptr);
    DirectoryLock lock(config.out);
    ensure_dir(eval_dir(config));
    write_file(eval_dir(config) / "metrics.json", report_to_json(report));
    write_file(eval_dir(config) / "metrics.csv", report_to_csv(report));
    return report;
  });
}

ValidationResult cmd_validate(const PipelineConfig& config) {
  auto [instances, embeddings] = stage("embed-io", [&] {
    require_path(config.instances, "intruder instances (--instances)");
    require_path(config.embeddings, "word embeddings (--embeddings)");
    return std::make_pair(apply_hyphen_policy(read_intruder_instances(config.instances), config.hyphen),
                          read_embedding_set(config.embeddings));
  });
  return stage("validate", [&] {
    ValidationResult result = validate(instances, embeddings, {config.strict_ties},
                                       identifier(config.embeddings));
    DirectoryLock lock(config.out);
    ensure_dir(validate_dir(config));
    write_file(validate_dir(config) / "validation.json", validation_to_json(result));
    write_file(validate_dir(config) / "validation.csv", validation_to_csv(result));
    return result;
  });
}

}  // namespace cbtm
