#include "oic/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<std::string> format;
  unsigned jobs = 1;
};

oic::ExperimentConfig load(const std::string& path, const Overrides& o) {
  auto cfg = oic::ExperimentConfig::load(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.output) cfg.output_path = *o.output;
  if (o.format) cfg.format = *o.format;
  return cfg;
}

void print_summary(const oic::ExperimentResult& res) {
  std::fprintf(stderr, "%-16s %-14s %6s %5s %5s %14s %14s %12s %10s\n", "pipeline", "evaluator", "n", "d_xi",
               "count", "mean_a_hat", "mean_oracle", "bias", "stderr");
  for (const auto& s : res.summary)
    std::fprintf(stderr, "%-16s %-14s %6lld %5lld %5lld %14.6g %14.6g %12.4g %10.3g\n", s.pipeline.c_str(),
                 s.evaluator.c_str(), static_cast<long long>(s.n), static_cast<long long>(s.d_xi),
                 static_cast<long long>(s.count), s.mean_a_hat, s.mean_oracle, s.bias, s.stderr_);
  if (!res.failures.empty()) std::fprintf(stderr, "%zu dropped (replication, step) pairs\n", res.failures.size());
}

void write(const oic::ExperimentResult& res, const oic::ExperimentConfig& cfg) {
  oic::emit(res.rows, cfg.format, cfg.output_path, cfg.extended);
  if (!cfg.output_path.empty() && cfg.output_path != "-") {
    std::ofstream meta(cfg.output_path + ".meta.json", std::ios::binary);
    if (!meta) throw oic::IoError("cannot write " + cfg.output_path + ".meta.json");
    meta << res.metadata.dump(2) << '\n';
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimizer's information criterion experiments"};
  app.require_subcommand(1);
  Overrides o;
  std::string config;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the master seed");
    sub->add_option("--output", o.output, "override the output path ('-' for stdout)");
    sub->add_option("--format", o.format, "override the output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--jobs,-j", o.jobs, "parallel replications")->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "run an experiment");
  add_common(run);
  auto* oracle = app.add_subcommand("oracle", "oracle-only pass");
  add_common(oracle);
  auto* validate = app.add_subcommand("validate", "check a config");
  validate->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  auto* list = app.add_subcommand("list-problems", "list registered problems");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& e : oic::problem_registry()) std::cout << e.name << "\t" << e.description << "\n";
      return 0;
    }
    if (*validate) {
      oic::ExperimentConfig::load(config);
      std::cout << "ok\n";
      return 0;
    }
    const auto cfg = load(config, o);
    const auto res = *run ? oic::run_experiment(cfg, o.jobs) : oic::run_oracle(cfg, o.jobs);
    write(res, cfg);
    print_summary(res);
    return 0;
  } catch (const oic::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
