#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cbtm/clustering.hpp"
#include "cbtm/embed_io.hpp"
#include "cbtm/metrics.hpp"
#include "cbtm/reduction.hpp"
#include "cbtm/topics.hpp"
#include "cbtm/validation.hpp"
#include "cbtm/vector_core.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace cbtm;

namespace {

Criterion parse_criterion(const std::string& s) {
  if (s == "aic") return Criterion::kAic;
  if (s == "bic") return Criterion::kBic;
  throw Error(ErrorCode::kInvalidArgument, "criterion must be 'aic' or 'bic'");
}

ScoreStyle parse_style(const std::string& s) {
  if (s == "ISH") return ScoreStyle::kIsh;
  if (s == "INT") return ScoreStyle::kInt;
  if (s == "ISIM") return ScoreStyle::kIsim;
  throw Error(ErrorCode::kInvalidArgument, "style must be ISH, INT or ISIM");
}

py::dict fit_to_dict(const GmmFit& fit) {
  const auto& m = fit.model;
  return py::dict("k"_a = m.k, "weights"_a = m.weights, "means"_a = m.means,
                  "covariances"_a = m.covariances, "log_likelihood"_a = m.log_likelihood,
                  "log_likelihood_trace"_a = m.log_likelihood_trace,
                  "iterations"_a = m.iterations, "converged"_a = m.converged,
                  "aic"_a = aic(m), "bic"_a = bic(m),
                  "responsibilities"_a = fit.theta.responsibilities,
                  "doc_ids"_a = fit.theta.doc_ids);
}

IntruderInstance instance_from(const py::dict& d) {
  IntruderInstance inst;
  inst.topic_id = py::str(d["topic_id"]);
  inst.displayed_words = d["displayed_words"].cast<std::vector<std::string>>();
  inst.true_intruder = d["true_intruder"].cast<std::string>();
  if (d.contains("human_selections")) {
    inst.human_selections = d["human_selections"].cast<std::vector<std::string>>();
  }
  validate_instance(inst, "instance " + inst.topic_id);
  return inst;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Embedding-space topic extraction and evaluation";
  py::register_exception<Error>(m, "CbtmError", PyExc_ValueError);

  py::class_<EmbeddingSet>(m, "EmbeddingSet")
      .def(py::init<std::vector<std::string>, RowMatrix>(), "labels"_a, "vectors"_a)
      .def_property_readonly("dimension", &EmbeddingSet::dimension)
      .def_property_readonly("labels", &EmbeddingSet::labels)
      .def_property_readonly("matrix", &EmbeddingSet::matrix)
      .def("vector", &EmbeddingSet::at, "label"_a)
      .def("__contains__", [](const EmbeddingSet& s, const std::string& w) { return s.contains(w); })
      .def("__len__", &EmbeddingSet::size)
      .def("__eq__", [](const EmbeddingSet& a, const EmbeddingSet& b) { return a == b; });

  m.def("read_embedding_set", &read_embedding_set, "path"_a);
  m.def("write_embedding_set", &write_embedding_set, "set"_a, "path"_a);
  m.def("write_embedding_set_json", &write_embedding_set_json, "set"_a, "path"_a);

  m.def("cosine_similarity", [](const Vector& a, const Vector& b) { return cosine_similarity(a, b); },
        "a"_a, "b"_a);
  m.def("centroid", [](const RowMatrix& rows) { return centroid(rows); }, "rows"_a);
  m.def(
      "weighted_centroid",
      [](const RowMatrix& rows, const std::vector<double>& w) {
        std::vector<Vector> vs;
        for (Eigen::Index i = 0; i < rows.rows(); ++i) vs.push_back(rows.row(i).transpose());
        return weighted_centroid(vs, w);
      },
      "rows"_a, "weights"_a);

  py::class_<ReductionModel>(m, "ReductionModel")
      .def_readonly("mean", &ReductionModel::mean)
      .def_readonly("basis", &ReductionModel::basis)
      .def_readonly("explained_variance_ratio", &ReductionModel::explained_variance_ratio)
      .def("transform", [](const ReductionModel& r, const EmbeddingSet& s) { return transform(r, s); });
  m.def("fit_reduction", &fit_reduction, "docs"_a, "target_dim"_a = kDefaultReducedDimension);

  m.def(
      "fit_gmm",
      [](const EmbeddingSet& docs, std::size_t k, std::uint64_t seed) {
        GmmFit fit;
        {
          py::gil_scoped_release release;
          fit = fit_gmm(docs, k, seed);
        }
        return fit_to_dict(fit);
      },
      "docs"_a, "k"_a, "seed"_a = 0);
  m.def(
      "select_k",
      [](const EmbeddingSet& docs, std::size_t k_min, std::size_t k_max, const std::string& criterion,
         std::uint64_t seed) {
        KSelection sel;
        {
          py::gil_scoped_release release;
          sel = select_k(docs, k_min, k_max, parse_criterion(criterion), seed);
        }
        return py::dict("best_k"_a = sel.best_k, "ks"_a = sel.ks, "scores"_a = sel.scores);
      },
      "docs"_a, "k_min"_a, "k_max"_a, "criterion"_a = "bic", "seed"_a = 0);
  m.def(
      "original_space_centroids",
      [](const RowMatrix& responsibilities, const EmbeddingSet& docs) {
        DocumentTopicMatrix theta;
        theta.doc_ids = docs.labels();
        theta.responsibilities = responsibilities;
        return original_space_centroids(theta, docs);
      },
      "responsibilities"_a, "docs"_a);

  py::class_<CandidateVocabulary>(m, "CandidateVocabulary")
      .def_readonly("words", &CandidateVocabulary::words)
      .def_readonly("embeddings", &CandidateVocabulary::embeddings)
      .def_property_readonly("expansion", [](const CandidateVocabulary& c) {
        std::vector<bool> out;
        for (auto p : c.provenance) out.push_back(p == Provenance::kExpansion);
        return out;
      });
  m.def(
      "build_candidates",
      [](const std::string& corpus_text, const EmbeddingSet& emb,
         std::optional<std::vector<std::string>> nouns,
         std::optional<std::vector<std::string>> expansion,
         std::optional<std::vector<std::string>> exclude) {
        const Corpus corpus = parse_corpus(corpus_text);
        std::optional<WordList> n, e;
        if (nouns) n = make_word_list(*nouns, WordListKind::kNouns);
        if (expansion) e = make_word_list(*expansion, WordListKind::kExpansionNouns);
        return build_candidates(corpus, emb, n ? &*n : nullptr, e ? &*e : nullptr,
                                exclude ? &*exclude : nullptr);
      },
      "corpus_text"_a, "embeddings"_a, "nouns"_a = py::none(), "expansion"_a = py::none(),
      "exclude"_a = py::none());

  py::class_<Topic>(m, "Topic")
      .def_readonly("id", &Topic::id)
      .def_property_readonly("words", [](const Topic& t) {
        std::vector<std::string> out;
        for (const auto& w : t.words) out.push_back(w.word);
        return out;
      })
      .def_property_readonly("similarities", [](const Topic& t) {
        std::vector<double> out;
        for (const auto& w : t.words) out.push_back(w.similarity);
        return out;
      })
      .def_property_readonly("phi", [](const Topic& t) {
        std::vector<double> out;
        for (const auto& w : t.words) out.push_back(w.phi);
        return out;
      })
      .def_readonly("gamma", &Topic::gamma)
      .def_readonly("gamma_tilde", &Topic::gamma_tilde)
      .def_readonly("truncated", &Topic::truncated);

  py::class_<TopicSet>(m, "TopicSet")
      .def_readonly("topics", &TopicSet::topics)
      .def_readonly("z", &TopicSet::z)
      .def_readonly("beta", &TopicSet::beta)
      .def("to_json", &topics_to_json)
      .def("__len__", &TopicSet::k);

  m.def("extract_topics", &extract_topics, "candidates"_a, "centroids"_a, "z"_a = kDefaultTopWords);
  m.def(
      "clean_topics",
      [](const TopicSet& t, const CandidateVocabulary& c, double threshold, std::optional<std::size_t> z,
         bool refill) {
        return clean_topics(t, c, {threshold, z.value_or(t.z), refill});
      },
      "topics"_a, "candidates"_a, "threshold"_a = 0.85, "z"_a = py::none(), "refill"_a = true);

  m.def(
      "evaluate",
      [](const TopicSet& topics, const Vector& psi, const std::string& reference_text, std::size_t z,
         std::size_t repetitions, std::uint64_t seed, bool wess_verbatim) {
        EvalOptions o;
        o.z = z;
        o.repetitions = repetitions;
        o.seed = seed;
        o.wess_verbatim = wess_verbatim;
        const auto rep = evaluate_all(topics, StopwordCentroid{psi}, parse_corpus(reference_text), o);
        return py::dict("model"_a = rep.model, "per_topic"_a = rep.per_topic,
                        "effective_z"_a = rep.effective_z);
      },
      "topics"_a, "psi"_a, "reference_text"_a, "z"_a = kDefaultTopWords,
      "repetitions"_a = kDefaultRepetitions, "seed"_a = 0, "wess_verbatim"_a = false);
  m.def(
      "intruder_accuracy",
      [](const RowMatrix& words, const Vector& intruder) {
        Topic t;
        t.vectors = words;
        t.words.resize(static_cast<std::size_t>(words.rows()));
        return intruder_accuracy(t, intruder, t.words.size());
      },
      "words"_a, "intruder"_a);
  m.def(
      "intruder_similarity",
      [](const RowMatrix& words, const Vector& intruder) {
        Topic t;
        t.vectors = words;
        t.words.resize(static_cast<std::size_t>(words.rows()));
        return intruder_similarity(t, intruder, t.words.size());
      },
      "words"_a, "intruder"_a);

  m.def(
      "score_words",
      [](const py::dict& instance, const EmbeddingSet& emb, const std::string& style) {
        return score_words(instance_from(instance), emb, parse_style(style));
      },
      "instance"_a, "embeddings"_a, "style"_a = "INT");
  m.def("pearson", &pearson, "x"_a, "y"_a);
  m.def(
      "validate",
      [](const py::list& instances, const EmbeddingSet& emb, bool strict_ties) {
        std::vector<IntruderInstance> v;
        for (const auto& item : instances) v.push_back(instance_from(item.cast<py::dict>()));
        const auto res = validate(v, emb, {strict_ties});
        py::dict out;
        for (const auto& mv : res.metrics) {
          out[py::str(std::string(to_string(mv.style)))] =
              py::dict("accuracy_true"_a = mv.accuracy_true, "accuracy_human"_a = mv.accuracy_human,
                       "pearson_true"_a = mv.pearson_true, "pearson_human"_a = mv.pearson_human,
                       "ties"_a = mv.ties);
        }
        return out;
      },
      "instances"_a, "embeddings"_a, "strict_ties"_a = false);
}
