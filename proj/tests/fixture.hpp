// On-disk toy corpus with two planted clusters, shared by the pipeline unit
// tests and the acceptance binary.
#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cbtm/pipeline.hpp"
#include "synthetic.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline constexpr std::size_t kDim = 8;
inline constexpr const char* kPlanted = "athletics";  // expansion word, not in the corpus

struct Fixture {
  cbtm::PipelineConfig config;
  std::vector<std::size_t> truth;  // planted cluster per document
  std::string planted_word = kPlanted;
  std::size_t planted_cluster = 0;
};

inline fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cbtm_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  cbtm::write_file(p, text);
}

/// Twelve documents, six per cluster. Word vectors point along axis 0
/// (sports) or axis 1 (finance) with noise in the remaining axes; each
/// document vector is the mean of its token vectors.
inline Fixture make(const fs::path& dir, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  const std::vector<std::vector<std::string>> words = {
      {"game", "games", "league", "player", "team", "coach", "season", "match"},
      {"bank", "market", "stock", "price", "trade", "investor", "fund", "rate"}};

  cbtm::EmbeddingSet vocab(kDim);
  for (std::size_t c = 0; c < 2; ++c) {
    for (const auto& w : words[c]) {
      cbtm::Vector v = cbtm::Vector::Zero(kDim);
      if (w == "games") {
        // near duplicate of "game"
        v = vocab.at("game");
        v(5) += 0.05;
      } else {
        v(static_cast<Eigen::Index>(c)) = 1.0;
        for (std::size_t d = 2; d < kDim; ++d) v(static_cast<Eigen::Index>(d)) = noise(rng);
      }
      vocab.push_back(w, v);
    }
  }

  Fixture f;
  std::vector<std::string> corpus_lines;
  cbtm::EmbeddingSet docs(kDim);
  std::uniform_int_distribution<std::size_t> pick(0, 7);
  std::vector<cbtm::Vector> cluster0;
  for (std::size_t i = 0; i < 12; ++i) {
    const std::size_t c = i % 2;
    std::string line = "d" + std::to_string(i) + "\t";
    cbtm::Vector acc = cbtm::Vector::Zero(kDim);
    const std::size_t len = 6;
    for (std::size_t t = 0; t < len; ++t) {
      // the duplicate pair always appears so both are corpus words
      const std::string& w = t < 2 ? words[c][t] : words[c][pick(rng)];
      line += w + (t + 1 < len ? " " : "");
      acc += vocab.at(w);
    }
    acc /= static_cast<double>(len);
    docs.push_back("d" + std::to_string(i), acc);
    if (c == 0) cluster0.push_back(acc);
    corpus_lines.push_back(line);
    f.truth.push_back(c);
  }

  cbtm::EmbeddingSet expansion(kDim);
  expansion.push_back(kPlanted, cbtm::centroid(cluster0));
  cbtm::Vector far = cbtm::Vector::Zero(kDim);
  far(7) = 1.0;
  expansion.push_back("teapot", far);

  cbtm::EmbeddingSet stop(kDim);
  for (std::size_t i = 0; i < 3; ++i) {
    cbtm::Vector v = cbtm::Vector::Zero(kDim);
    v(6) = 1.0;
    v(static_cast<Eigen::Index>(2 + i)) = 0.3;
    stop.push_back(std::vector<std::string>{"the", "of", "and"}[i], v);
  }

  cbtm::write_embedding_set(docs, dir / "docs.hemb");
  cbtm::write_embedding_set(vocab, dir / "vocab.hemb");
  cbtm::write_embedding_set(expansion, dir / "expand.hemb");
  cbtm::write_embedding_set(stop, dir / "stopwords.hemb");
  write_lines(dir / "corpus.txt", corpus_lines);
  write_lines(dir / "expand.txt", {kPlanted, "teapot"});
  std::vector<std::string> nouns = words[0];
  nouns.insert(nouns.end(), words[1].begin(), words[1].end());
  nouns.push_back(kPlanted);
  write_lines(dir / "nouns.txt", nouns);

  auto& c = f.config;
  c.docs = dir / "docs.hemb";
  c.vocab = dir / "vocab.hemb";
  c.stopwords = dir / "stopwords.hemb";
  c.corpus = dir / "corpus.txt";
  c.nouns = dir / "nouns.txt";
  c.out = dir / "out";
  c.k = 2;
  c.reduce_dim = 2;
  c.z = 4;
  c.repetitions = 10;
  return f;
}

/// Enables corpus expansion with the planted word.
inline void with_expansion(Fixture& f, const fs::path& dir) {
  f.config.expand = dir / "expand.txt";
  f.config.expand_embeddings = dir / "expand.hemb";
}

}  // namespace fixture
