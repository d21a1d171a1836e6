#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "sqn/commands.hpp"
#include "sqn/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Steady states, probe response, bistability and fits for a resonator dressed by a qubit network"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string format = "csv";
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::string data;

  app.fallthrough();  // subcommands inherit this, so it must precede them
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--format", format, "csv or csv,svg");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  for (const auto& name : sqn::cli::command_names()) {
    auto* sub = app.add_subcommand(name);
    if (name.rfind("fit-", 0) == 0) sub->add_option("--data", data, "input CSV (overrides fit.data)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : sqn::cli::kUsage;
  }

  sqn::cli::Options opts;
  opts.out_dir = out_dir;
  opts.threads = threads;
  if (format == "csv,svg" || format == "svg,csv") {
    opts.svg = true;
  } else if (format != "csv") {
    std::cerr << "config error: --format must be csv or csv,svg\n";
    return sqn::cli::kConfigError;
  }
  if (!data.empty()) opts.data = data;

  sqn::io::json config;
  try {
    config = sqn::io::load_json(config_path);
  } catch (const sqn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return sqn::cli::kConfigError;
  }
  return sqn::cli::run(app.get_subcommands().front()->get_name(), config, opts, std::cerr);
}
