#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "bernstab/errors.hpp"
#include "bernstab/experiment.hpp"
#include "bernstab/parallel.hpp"

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bernstab: stability experiments for characteristic functions and Gaussian channels"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", format = "both";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  CLI::App* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory (the config's output_dir wins)");
  run->add_option("--seed", seed, "seed, overrides the config");
  run->add_option("--threads", threads, "worker threads (0: hardware)")->check(CLI::NonNegativeNumber);
  run->add_option("--format", format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));

  CLI11_PARSE(app, argc, argv);

  bernstab::json config;
  try {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "config error: cannot open " << config_path << "\n";
      return 2;
    }
    config = bernstab::json::parse(in);
  } catch (const bernstab::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  bernstab::set_worker_count(threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency()));

  bernstab::ExperimentResult res;
  try {
    res = bernstab::run_experiment(config, seed);
  } catch (const bernstab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const fs::path dir = config.contains("output_dir") ? fs::path(config["output_dir"].get<std::string>()) : fs::path(out_dir);
  try {
    fs::create_directories(dir);
    if (format != "csv") write_file(dir / "report.json", res.report.dump(2) + "\n");
    if (format != "json") write_file(dir / "report.csv", res.csv);
  } catch (const std::exception& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return 2;
  }

  for (const auto& a : res.report["assertions"]) {
    if (!a["passed"].get<bool>())
      std::cerr << "FAILED " << a["name"].get<std::string>() << " [" << a["anchor"].get<std::string>() << "]\n";
  }
  std::cout << res.report["kind"].get<std::string>() << ": " << (res.passed ? "passed" : "failed") << " ("
            << res.report["assertions"].size() << " assertions) -> " << dir.string() << "\n";
  return res.passed ? 0 : 1;
}
