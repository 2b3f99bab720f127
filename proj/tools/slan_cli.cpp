#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "slan/slan.h"

namespace {

struct Flag {
  const char* key;
  const char* help;
};

// Flags forwarded verbatim to slan_options_set.
constexpr Flag kFlags[] = {
    {"data", "dataset split directory"},
    {"out", "output directory"},
    {"checkpoint", "checkpoint file (importance) or directory (eval)"},
    {"seeds", "comma-separated training seeds"},
    {"epochs", "maximum epochs"},
    {"patience", "early-stopping patience in epochs"},
    {"lr", "initial learning rate"},
    {"lr-decay", "plateau learning-rate factor"},
    {"batch", "batch size"},
    {"hidden", "hidden size H"},
    {"t2v-dim", "time2vec width"},
    {"agg", "aggregation: mean, max, attention"},
    {"impute", "imputation: none, ffill, mean, interpolation"},
    {"concat", "concat variant: both, global, local"},
    {"drop", "fraction of observations to drop"},
    {"init", "initial state: zeros, random"},
    {"clip", "global gradient-norm clip (0 = off)"},
    {"weight-decay", "AdamW weight decay"},
    {"beta1", "Adam beta1"},
    {"beta2", "Adam beta2"},
    {"eps", "Adam epsilon"},
    {"threads", "worker threads"},
    {"fractions", "comma-separated study fractions"},
    {"n", "generate: instance count"},
    {"sensors", "generate: sensor count"},
    {"max-steps", "generate: maximum steps per instance"},
    {"missing-rate", "generate: base missing rate"},
    {"informative", "generate: informative missingness (true/false)"},
    {"informative-sensors", "generate: sensors carrying the class signal"},
    {"noise", "generate: latent noise"},
    {"drift", "generate: class drift magnitude"},
    {"strength", "generate: missingness strength"},
    {"positive-rate", "generate: positive-class share"},
    {"statics", "generate: static feature count"},
    {"seed", "generate: generator seed"},
    {"split-seed", "generate: split shuffle seed"},
    {"bench-steps", "bench: base maximum steps T"},
    {"verbose", "per-run progress on stderr (true/false)"},
};

constexpr const char* kCommands[][2] = {
    {"generate", "generate a synthetic dataset and split it"},
    {"train", "train over seeds and report test metrics"},
    {"eval", "evaluate saved checkpoints on the test split"},
    {"ablate-agg", "compare aggregation functions"},
    {"ablate-impute", "compare imputation strategies"},
    {"ablate-concat", "compare concat-layer variants"},
    {"drop-study", "metric vs fraction of dropped observations"},
    {"scale-study", "metric vs fraction of training data"},
    {"importance", "attention importance vs sampling rate per sensor"},
    {"bench", "epoch time when the sequence length doubles"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SLAN: switch LSTM aggregate network for irregularly sampled time series"};
  app.set_config("--config", "", "TOML/INI file with flag defaults");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(slan_version()));

  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  for (const Flag& f : kFlags) {
    CLI::Option* opt = app.add_option(std::string("--") + f.key, values[f.key], f.help);
    options.emplace_back(f.key, opt);
  }
  std::vector<CLI::App*> subs;
  for (const auto& c : kCommands) subs.push_back(app.add_subcommand(c[0], c[1])->fallthrough());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  slan_options* opts = nullptr;
  if (slan_options_create(&opts) != SLAN_OK) {
    std::fprintf(stderr, "error: %s\n", slan_last_error());
    return 1;
  }
  for (const auto& [key, opt] : options) {
    if (opt->count() == 0) continue;
    if (slan_options_set(opts, key.c_str(), values[key].c_str()) != SLAN_OK) {
      std::fprintf(stderr, "error: %s\n", slan_last_error());
      slan_options_destroy(opts);
      return 1;
    }
  }

  std::string command;
  for (CLI::App* sub : subs) {
    if (sub->parsed()) command = sub->get_name();
  }
  const slan_status st = slan_run(command.c_str(), opts);
  slan_options_destroy(opts);
  if (st == SLAN_OK) return 0;
  std::fprintf(stderr, "error: %s\n", slan_last_error());
  return st == SLAN_NOT_FOUND ? 2 : 1;
}
