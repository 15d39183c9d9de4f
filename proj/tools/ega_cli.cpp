#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Euler gradient approximation experiments"};
  app.require_subcommand(1);

  ega::cli::Options opts;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;

  for (const auto& name : ega::cli::command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides io.out)");
    sub->add_option("--seed", seed, "seed for data, init and shuffling (overrides config)");
    sub->add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ega::cli::kConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--out")) opts.out = out;
  if (chosen->count("--seed")) opts.seed = seed;
  if (chosen->count("--threads")) opts.threads = threads;
  return ega::cli::run(chosen->get_name(), opts);
}
