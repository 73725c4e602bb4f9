#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "llp/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
}

int cmd_run(const std::string& config_path, const std::string& out,
            const std::string& svg) {
  llp::RunConfig config = llp::load_run_config(config_path);
  if (!out.empty()) config.output.path = out;
  const llp::RunResult result = llp::execute(config);
  const auto summary = llp::write_run_outputs(config, result);
  if (!svg.empty()) {
    write_text(svg, llp::render_svg({llp::to_string(config.learner.variant) + "+" +
                                     llp::to_string(config.predictor.kind)},
                                    {&result}));
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out, int workers) {
  const llp::SweepConfig config = llp::load_sweep_config(config_path);
  const llp::SweepResult result = llp::run_sweep(config, workers);
  const std::string cells = llp::render_sweep_csv(result);
  const std::string fits = llp::render_fits_csv(result);
  if (out.empty()) {
    std::cout << cells << "\n" << fits;
  } else {
    write_text(out + ".csv", cells);
    write_text(out + ".fits.csv", fits);
    std::cout << fits;
  }
  int failed = 0;
  for (const auto& c : result.cells) failed += !c.ok;
  if (failed > 0) std::fprintf(stderr, "sweep: %d cell(s) failed\n", failed);
  return 0;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& out,
                const std::string& svg, int record_every, int workers) {
  std::vector<llp::RunConfig> configs;
  for (const auto& p : paths) configs.push_back(llp::load_run_config(p));
  const llp::CompareResult result = llp::run_compare(configs, workers);
  const std::string csv = llp::render_compare_csv(result, record_every);
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_text(out, csv);
  }
  if (!svg.empty()) {
    std::vector<const llp::RunResult*> runs;
    for (const auto& r : result.runs) runs.push_back(&r);
    write_text(svg, llp::render_svg(result.labels, runs));
  }
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    const auto& m = result.runs[i].metrics;
    const double T = static_cast<double>(m.regret.size());
    std::fprintf(stderr, "%-28s R_T/T = %-12.6g V_T/T = %.6g\n", result.labels[i].c_str(),
                 m.final_regret() / T, m.final_violation() / T);
  }
  return 0;
}

int cmd_bench(const std::string& config_path) {
  llp::RunConfig config = llp::load_run_config(config_path);
  config.output.path.clear();
  const llp::RunResult result = llp::execute(config);
  const auto summary = llp::summarize(config, result);
  std::cout << summary["benchmark"].dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online learning with long-term constraints and predictions"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "Worker threads (0: LLP_WORKERS or all cores)");

  std::string config_path, out, svg;
  int record_every = 1;
  std::vector<std::string> compare_paths;

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("config", config_path, "Run config (JSON)")->required();
  run->add_option("--out", out, "Trace path, overriding output.path");
  run->add_option("--svg", svg, "Also plot regret/t and violation");

  auto* sweep = app.add_subcommand("sweep", "Sweep horizons and beta, fit exponents");
  sweep->add_option("config", config_path, "Sweep config (JSON)")->required();
  sweep->add_option("--out", out, "Output prefix (<prefix>.csv, <prefix>.fits.csv)");

  auto* compare = app.add_subcommand("compare", "Run configs on one scenario side by side");
  compare->add_option("configs", compare_paths, "Run configs (JSON)")->required();
  compare->add_option("--out", out, "CSV path (default: stdout)");
  compare->add_option("--svg", svg, "Also plot the runs");
  compare->add_option("--record-every", record_every, "Row stride")
      ->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "Solve the hindsight benchmark only");
  bench->add_option("config", config_path, "Run config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out, svg);
    if (*sweep) return cmd_sweep(config_path, out, workers);
    if (*compare) return cmd_compare(compare_paths, out, svg, record_every, workers);
    if (*bench) return cmd_bench(config_path);
  } catch (const llp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const llp::UnsupportedScenarioError& e) {
    std::fprintf(stderr, "unsupported: %s\n", e.what());
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
