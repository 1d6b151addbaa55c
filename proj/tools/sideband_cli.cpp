#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sideband/error.hpp"
#include "sideband/experiments.hpp"

namespace {

int report(const sideband::RunReport& r, const std::string& out) {
  const auto& m = r.manifest;
  if (m.contains("error")) std::cerr << "error: " << m["error"].get<std::string>() << "\n";
  for (const auto& f : m["failures"])
    std::cerr << "failed: " << f["item"].get<std::string>() << ": " << f["error"].get<std::string>()
              << "\n";
  std::cout << m["status"].get<std::string>() << ": " << r.outputs.size() << " files in " << out
            << " (" << m["wall_time_s"].get<double>() << " s)\n";
  return sideband::exit_code(r.status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-photon sideband simulation and spectroscopy toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sideband::kVersion);

  std::string config_path, out_dir, variant, interaction, figure;
  int threads = 0;

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--variant", variant, "Drive variant")->check(CLI::IsMember({"full", "rwa", "cr"}));
  run->add_option("--interaction", interaction, "Interaction")->check(CLI::IsMember({"bs", "tms"}));
  run->add_option("--threads", threads, "Worker threads (0 = auto)")->check(CLI::NonNegativeNumber);

  auto* rep = app.add_subcommand("reproduce", "Run the canned config of a figure");
  rep->add_option("figure", figure, "Figure id")->required();
  rep->add_option("--out", out_dir, "Output directory")->required();
  rep->add_option("--threads", threads, "Worker threads (0 = auto)")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  sideband::RunOptions options;
  options.out_dir = out_dir;
  options.threads = threads;
  try {
    if (*run) {
      if (!variant.empty()) options.variant = sideband::parse_variant(variant);
      if (!interaction.empty()) options.interaction = sideband::parse_interaction(interaction);
      options.config_dir = std::filesystem::path(config_path).parent_path();
      std::ifstream f(config_path);
      sideband::json config;
      try {
        config = sideband::json::parse(f);
      } catch (const sideband::json::parse_error& e) {
        throw sideband::Error(sideband::ErrorKind::Config,
                              "cannot parse " + config_path + ": " + e.what());
      }
      return report(sideband::run_experiment(config, options), out_dir);
    }
    return report(sideband::reproduce(figure, options), out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
