#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rbmlearn/experiment.hpp"
#include "rbmlearn/parallel.hpp"

namespace {

struct Args {
  std::string config;
  std::uint64_t seed = 0;
  std::string out = ".";
  int threads = 1;
  bool exact = false;
};

void add_common(CLI::App* sub, Args& args) {
  sub->add_option("--config", args.config, "JSON config file (omit for defaults)");
  sub->add_option("--seed", args.seed, "master seed")->capture_default_str();
  sub->add_option("--out", args.out, "output directory")->capture_default_str();
  sub->add_option("--threads", args.threads, "worker threads (default from RBMLEARN_THREADS)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_flag("--exact", args.exact, "exact i.i.d. sampling and enumerated metrics");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rbmlearn;
  CLI::App app{"Learning RBMs through their induced Markov random fields"};
  app.require_subcommand(1);
  Args args;
  args.threads = default_threads();

  const char* kinds[][2] = {
      {"generate", "build a synthetic model and draw samples"},
      {"sample", "draw samples from a model, or class images from a trained predictor"},
      {"structure", "recover the two-hop graph and score it"},
      {"distill", "learn the induced MRF and score it against the true distribution"},
      {"train-supervised", "fit the label predictor"},
      {"eval-supervised", "score a label predictor on held-out data"},
      {"report", "aggregate report.json files into a summary"},
  };
  for (const auto& k : kinds) add_common(app.add_subcommand(k[0], k[1]), args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string kind_name = app.get_subcommands().front()->get_name();
  ExperimentOptions opt;
  opt.seed = args.seed;
  opt.out_dir = args.out;
  opt.threads = args.threads;
  opt.exact = args.exact;
  try {
    Json config = Json::object();
    if (!args.config.empty()) {
      config = load_json(args.config);
      opt.config_dir = std::filesystem::path(args.config).parent_path().string();
    }
    const Json report = run_experiment(parse_experiment_kind(kind_name), config, opt);
    for (const auto& [name, m] : report["metrics"].items()) std::cout << name << " = " << m["value"].dump() << '\n';
    std::cout << "wrote " << (std::filesystem::path(opt.out_dir) / "report.json").string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    const Json doc = error_document(e);
    try {
      std::filesystem::create_directories(opt.out_dir);
      save_json((std::filesystem::path(opt.out_dir) / "error.json").string(), doc);
    } catch (const std::exception&) {
    }
    std::cerr << "error: " << e.what() << '\n';
    return doc["error"]["type"] == "config" ? 2 : 1;
  }
}
