// cbtm: fit / topics / eval / validate over embedding files.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "cbtm/pipeline.hpp"

namespace {

using cbtm::PipelineConfig;

struct Flags {
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
};

void add_value(CLI::App* app, Flags& f, const std::string& name, const std::string& help) {
  app->add_option("--" + name, f.values[name], help);
}

void add_switch(CLI::App* app, Flags& f, const std::string& name, const std::string& help) {
  app->add_flag("--" + name, f.switches[name], help);
}

void add_fit_flags(CLI::App* app, Flags& f) {
  add_value(app, f, "docs", "document embeddings (HEMB1 or JSON)");
  add_value(app, f, "k", "number of topics");
  add_value(app, f, "k-range", "MIN:MAX range for information-criterion selection");
  add_value(app, f, "criterion", "aic or bic (default bic)");
  add_value(app, f, "reduce-dim", "reduced dimension before clustering, 0 = none (default 5)");
  add_value(app, f, "seed", "random seed (default 0)");
}

void add_topic_flags(CLI::App* app, Flags& f) {
  add_value(app, f, "vocab", "vocabulary embeddings");
  add_value(app, f, "corpus", "corpus, one document per line");
  add_value(app, f, "stopwords", "stopword embeddings");
  add_value(app, f, "nouns", "noun list, one word per line");
  add_value(app, f, "expand", "expansion word list");
  add_value(app, f, "expand-embeddings", "embeddings for the expansion words");
  add_value(app, f, "z", "top words per topic (default 10)");
  add_value(app, f, "clean-threshold", "similarity above which near-duplicates are removed (default 0.85)");
  add_switch(app, f, "no-clean", "skip topic cleaning");
  add_switch(app, f, "no-refill", "do not refill removed slots while cleaning");
  add_switch(app, f, "nouns-only", "restrict candidates to the noun list");
  add_switch(app, f, "export-beta", "also write the word-topic similarity matrix");
}

void add_eval_flags(CLI::App* app, Flags& f) {
  add_value(app, f, "repetitions", "intruder draws per topic (default 50)");
  add_value(app, f, "eval-embeddings", "embeddings used for scoring (default: vocab)");
  add_value(app, f, "cohpw-embeddings", "alternate embeddings for COHPW");
  add_value(app, f, "npmi-window", "NPMI sliding window (default 10)");
  add_value(app, f, "npmi-epsilon", "NPMI smoothing (default 1e-12)");
  add_switch(app, f, "wess-verbatim", "multiply WESS by K(K-1)/2 instead of averaging");
}

void apply_flags(PipelineConfig& config, const Flags& f) {
  for (const auto& [k, v] : f.values) {
    if (!v.empty()) cbtm::set_config_value(config, k, v);
  }
  for (const auto& [k, on] : f.switches) {
    if (on) cbtm::set_config_value(config, k, "true");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding-space topic extraction and evaluation"};
  app.require_subcommand(1);

  Flags flags;
  std::string config_file;
  app.add_option("--config", config_file, "key=value config file (flags override it)");
  add_value(&app, flags, "out", "output directory (default cbtm_out)");

  auto* fit = app.add_subcommand("fit", "reduce, cluster and compute topic centroids");
  add_fit_flags(fit, flags);

  auto* topics = app.add_subcommand("topics", "extract topics from fitted centroids");
  add_fit_flags(topics, flags);
  add_topic_flags(topics, flags);

  auto* eval = app.add_subcommand("eval", "compute the metric report for extracted topics");
  add_topic_flags(eval, flags);
  add_eval_flags(eval, flags);
  add_value(eval, flags, "seed", "random seed (default 0)");

  auto* validate = app.add_subcommand("validate", "score intruder-word annotations");
  add_value(validate, flags, "instances", "JSON Lines intruder instances");
  add_value(validate, flags, "embeddings", "word embeddings");
  add_value(validate, flags, "hyphen", "drop-word (default), drop-instance or keep");
  add_switch(validate, flags, "strict-ties", "count tied human modes as misses");

  for (auto* sub : {fit, topics, eval, validate}) {
    sub->add_option("--config", config_file, "key=value config file");
    sub->add_option("--out", flags.values["out"], "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    PipelineConfig config;
    if (!config_file.empty()) cbtm::apply_config_file(config, config_file);
    apply_flags(config, flags);

    if (fit->parsed()) {
      const auto r = cbtm::cmd_fit(config);
      std::cout << (r.cache_hit ? "cache hit" : "fitted") << ": K=" << r.k
                << " hash=" << r.hash << " -> " << cbtm::fit_dir(config).string() << "\n";
    } else if (topics->parsed()) {
      const auto r = cbtm::cmd_topics(config);
      std::cout << "topics: K=" << r.k << " candidates=" << r.candidates;
      if (r.truncated_topics) std::cout << " (warning: " << r.truncated_topics << " topic(s) shorter than Z)";
      std::cout << " -> " << cbtm::topics_dir(config).string() << "\n";
    } else if (eval->parsed()) {
      const auto r = cbtm::cmd_eval(config);
      std::cout << cbtm::report_to_csv(r);
    } else if (validate->parsed()) {
      const auto r = cbtm::cmd_validate(config);
      std::cout << cbtm::validation_to_csv(r);
    }
    return 0;
  } catch (const cbtm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_input_error() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
