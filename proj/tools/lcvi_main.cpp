// lcvi: fit, sweep and ingest front end for loss-calibrated VI experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "lcvi/config.hpp"
#include "lcvi/ingest.hpp"
#include "lcvi/pipeline.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
  if (seeds.empty()) throw std::invalid_argument("--seed-override: empty seed list");
  return seeds;
}

lcvi::ExperimentConfig load_config(const std::string& path,
                                   const std::string& output_dir,
                                   const std::string& seeds) {
  lcvi::ExperimentConfig c = lcvi::ExperimentConfig::load(path);
  if (!output_dir.empty()) c.run.output_dir = output_dir;
  if (!seeds.empty()) c.run.seeds = parse_seed_list(seeds);
  c.validate();
  return c;
}

void print_result(const lcvi::PipelineResult& r) {
  std::printf("%-8s %-12s %-12s %-12s %-10s\n", "seed", "er_vi", "er_lcvi",
              "improvement", "lcvi_s");
  for (const auto& s : r.seeds) {
    std::printf("%-8llu %-12.6g %-12.6g %-12.4g %-10.3g\n",
                static_cast<unsigned long long>(s.seed), s.report.er_vi,
                s.report.er_lcvi, s.report.improvement, s.lcvi_wall_seconds);
  }
  std::printf("mean improvement %.4g (std %.4g) over %zu seeds\n",
              r.improvement.mean, r.improvement.stddev, r.seeds.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-calibrated variational inference experiments"};
  app.set_version_flag("--version", lcvi::version_string());
  app.require_subcommand(1);

  std::string config_path, output_dir, seed_override;

  auto* fit = app.add_subcommand("fit", "Run VI, calibrate, run LCVI and evaluate");
  fit->add_option("config", config_path, "Experiment config (INI)")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--output-dir", output_dir, "Override run.output_dir");
  fit->add_option("--seed-override", seed_override,
                  "Comma-separated seeds replacing run.seeds");

  std::string axis, values;
  auto* sw = app.add_subcommand("sweep", "Repeat the pipeline along one axis");
  sw->add_option("config", config_path, "Experiment config (INI)")
      ->required()
      ->check(CLI::ExistingFile);
  sw->add_option("--axis", axis, "quantile | sample_budget | regime")->required();
  sw->add_option("--values", values,
                 "Comma-separated values, e.g. 0.5,0.9,0.999*10 or 30x10,10x1")
      ->required();
  sw->add_option("--output-dir", output_dir, "Override run.output_dir");
  sw->add_option("--seed-override", seed_override,
                 "Comma-separated seeds replacing run.seeds");

  std::string csv_path, out_path;
  std::size_t top_items = 0;
  std::uint64_t split_seed = 1;
  auto* ing = app.add_subcommand("ingest", "Convert user,item,count CSV to a matrix cache");
  ing->add_option("csv", csv_path, "Count triples")->required()->check(CLI::ExistingFile);
  ing->add_option("--top-items", top_items, "Keep the N items with most plays (0 = all)");
  ing->add_option("--seed", split_seed, "Seed for the train/held-out split");
  ing->add_option("-o,--output", out_path, "Matrix CSV to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) {
      const auto c = load_config(config_path, output_dir, seed_override);
      const auto result = lcvi::run_pipeline(c);
      print_result(result);
      std::printf("artifacts in %s\n", c.run.output_dir.c_str());
    } else if (*sw) {
      const auto c = load_config(config_path, output_dir, seed_override);
      std::vector<std::string> cells;
      std::stringstream ss(values);
      std::string item;
      while (std::getline(ss, item, ',')) cells.push_back(item);
      const auto rows = lcvi::sweep(c, lcvi::parse_sweep_axis(axis), cells);
      std::printf("%-14s %-14s %-14s %-10s\n", axis.c_str(), "mean_impr", "std_impr",
                  "wall_s");
      for (const auto& r : rows) {
        std::printf("%-14s %-14.4g %-14.4g %-10.3g\n", r.value.c_str(),
                    r.improvement.mean, r.improvement.stddev, r.mean_wall_seconds);
      }
    } else if (*ing) {
      const auto m = lcvi::ingest_count_matrix(csv_path, top_items, split_seed);
      m.save_csv(out_path);
      std::printf("%zu x %zu matrix, %zu train / %zu held-out cells -> %s\n",
                  m.n_rows, m.n_cols, m.train_count(), m.test_count(),
                  out_path.c_str());
    }
  } catch (const lcvi::PipelineError& e) {
    std::fprintf(stderr, "lcvi: stage %s failed: %s\n", e.stage().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lcvi: %s\n", e.what());
    return 1;
  }
  return 0;
}
