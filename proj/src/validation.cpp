#include "cbtm/validation.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "cbtm/csv.hpp"
#include "cbtm/vector_core.hpp"
#include "json.hpp"

namespace cbtm {

std::string_view to_string(ScoreStyle s) {
  switch (s) {
    case ScoreStyle::kIsh: return "ISH";
    case ScoreStyle::kInt: return "INT";
    case ScoreStyle::kIsim: return "ISIM";
  }
  return "?";
}

Direction intruder_direction(ScoreStyle s) {
  return s == ScoreStyle::kInt ? Direction::kHighest : Direction::kLowest;
}

std::map<std::string, double> score_words(const IntruderInstance& instance,
                                          const EmbeddingSet& embeddings,
                                          ScoreStyle style) {
  const auto& words = instance.displayed_words;
  const std::size_t n = words.size();
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 displayed words");
  std::vector<Vector> vecs;
  for (const auto& w : words) {
    auto i = embeddings.find(w);
    if (!i) {
      throw Error(ErrorCode::kMissingEmbedding,
                  "no embedding for displayed word '" + w + "' (topic " +
                      instance.topic_id + ")");
    }
    vecs.push_back(embeddings.vector(*i));
  }
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sim[i][j] = sim[j][i] = cosine_similarity(vecs[i], vecs[j]);
  }

  std::map<std::string, double> scores;
  switch (style) {
    case ScoreStyle::kIsim:
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) s += sim[i][j];
        }
        scores[words[i]] = s / static_cast<double>(n - 1);
      }
      break;
    case ScoreStyle::kInt: {
      std::vector<double> credit(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < n; ++c) {
          if (c == i) continue;
          bool least = true;
          for (std::size_t j = 0; j < n && least; ++j) {
            if (j == i || j == c) continue;
            least = sim[i][c] < sim[i][j];
          }
          if (least) credit[c] += 1.0;
        }
      }
      for (std::size_t i = 0; i < n; ++i) scores[words[i]] = credit[i] / static_cast<double>(n - 1);
      break;
    }
    case ScoreStyle::kIsh: {
      const Vector all = centroid(vecs);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<Vector> rest;
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) rest.push_back(vecs[j]);
        }
        scores[words[i]] = cosine_similarity(all, centroid(rest));
      }
      break;
    }
  }
  return scores;
}

IntruderPick identify_intruder(const std::map<std::string, double>& scores,
                               Direction direction) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, "no scores to pick from");
  auto better = [direction](double a, double b) {
    return direction == Direction::kLowest ? a < b : a > b;
  };
  // std::map iterates in lexicographic order, so the first extreme wins ties.
  auto best = scores.begin();
  for (auto it = scores.begin(); it != scores.end(); ++it) {
    if (better(it->second, best->second)) best = it;
  }
  IntruderPick pick{best->first, false, 0.0};
  std::optional<double> runner_up;
  for (auto it = scores.begin(); it != scores.end(); ++it) {
    if (it == best) continue;
    if (it->second == best->second) pick.tie = true;
    if (!runner_up || better(it->second, *runner_up)) runner_up = it->second;
  }
  if (runner_up) pick.margin = std::abs(best->second - *runner_up);
  return pick;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "pearson: need two equal series of length >= 2");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double human_detection_rate(const IntruderInstance& instance) {
  if (instance.human_selections.empty()) return 0.0;
  const auto hits = std::count(instance.human_selections.begin(),
                               instance.human_selections.end(), instance.true_intruder);
  return static_cast<double>(hits) / static_cast<double>(instance.human_selections.size());
}

std::vector<std::string> modal_selections(const IntruderInstance& instance) {
  std::map<std::string, std::size_t> votes;
  for (const auto& h : instance.human_selections) ++votes[h];
  std::size_t top = 0;
  for (const auto& [w, c] : votes) top = std::max(top, c);
  std::vector<std::string> modes;
  for (const auto& [w, c] : votes) {
    if (c == top) modes.push_back(w);
  }
  return modes;
}

const MetricValidation& ValidationResult::at(ScoreStyle s) const {
  for (const auto& m : metrics) {
    if (m.style == s) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "no result for style");
}

ValidationResult validate(const std::vector<IntruderInstance>& input,
                          const EmbeddingSet& embeddings, const ValidationOptions& options,
                          const std::string& embedding_id) {
  // Canonical order so floating-point sums do not depend on input order.
  std::vector<IntruderInstance> instances = input;
  std::sort(instances.begin(), instances.end(), [](const auto& a, const auto& b) {
    return std::tie(a.topic_id, a.displayed_words, a.true_intruder, a.human_selections) <
           std::tie(b.topic_id, b.displayed_words, b.true_intruder, b.human_selections);
  });
  if (instances.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "validation needs at least 2 instances, got " + std::to_string(instances.size()));
  }
  ValidationResult result;
  result.instance_count = instances.size();
  result.embedding_id = embedding_id;
  result.strict_ties = options.strict_ties;

  std::vector<double> human_rate;
  for (const auto& inst : instances) human_rate.push_back(human_detection_rate(inst));

  for (ScoreStyle style : {ScoreStyle::kIsh, ScoreStyle::kInt, ScoreStyle::kIsim}) {
    MetricValidation mv;
    mv.style = style;
    std::vector<double> hit_true, margin;
    for (const auto& inst : instances) {
      const IntruderPick pick =
          identify_intruder(score_words(inst, embeddings, style), intruder_direction(style));
      if (pick.tie) ++mv.ties;
      const bool hit = pick.word == inst.true_intruder;
      hit_true.push_back(hit ? 1.0 : 0.0);
      margin.push_back(pick.margin);
      if (hit) ++mv.hits_true;
      const auto modes = modal_selections(inst);
      const bool among = std::find(modes.begin(), modes.end(), pick.word) != modes.end();
      if (among && (!options.strict_ties || modes.size() == 1)) ++mv.hits_human;
    }
    const double n = static_cast<double>(instances.size());
    mv.accuracy_true = static_cast<double>(mv.hits_true) / n;
    mv.accuracy_human = static_cast<double>(mv.hits_human) / n;
    mv.pearson_human = pearson(hit_true, human_rate);
    mv.pearson_true = pearson(margin, hit_true);
    result.metrics.push_back(mv);
  }
  return result;
}

std::string validation_to_json(const ValidationResult& result) {
  nlohmann::json j;
  j["instance_count"] = result.instance_count;
  j["embedding_id"] = result.embedding_id;
  j["ties"] = result.strict_ties ? "strict" : "permissive";
  j["pearson_operationalization"] = {
      {"human", "per-instance true-hit indicator vs fraction of annotators choosing the true intruder"},
      {"true", "per-instance score margin (pick vs runner-up) vs true-hit indicator"}};
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  auto arr = nlohmann::json::array();
  for (const auto& m : result.metrics) {
    arr.push_back({{"metric", std::string(to_string(m.style))},
                   {"accuracy_true", m.accuracy_true},
                   {"accuracy_human", m.accuracy_human},
                   {"hits_true", m.hits_true},
                   {"hits_human", m.hits_human},
                   {"pearson_true", opt(m.pearson_true)},
                   {"pearson_human", opt(m.pearson_human)},
                   {"ties", m.ties}});
  }
  j["metrics"] = std::move(arr);
  return j.dump(1) + "\n";
}

std::string validation_to_csv(const ValidationResult& result) {
  std::string out = "metric,accuracy_true,accuracy_human,pearson_true,pearson_human\n";
  auto opt = [](const std::optional<double>& v) { return v ? csv_number(*v) : std::string("undefined"); };
  for (const auto& m : result.metrics) {
    out += std::string(to_string(m.style)) + "," + csv_number(m.accuracy_true) + "," +
           csv_number(m.accuracy_human) + "," + opt(m.pearson_true) + "," +
           opt(m.pearson_human) + "\n";
  }
  return out;
}

}  // namespace cbtm
