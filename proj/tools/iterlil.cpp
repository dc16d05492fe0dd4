#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "iterlil/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"iterated perturbed random walks: simulation, renewal tables, LIL scans"};
  app.set_help_flag("-h,--help");

  std::string command;
  std::string config_path;
  app.add_option("command", command, "simulate | renewal | lil-scan | var-scan | checks | all")->required();
  app.add_option("--config", config_path, "key = value config file; flags override it");

  // Flags are kept as strings and handed to the config parser so file and
  // command line share one validation path.
  const std::vector<std::pair<std::string, std::string>> names = {
      {"law", "step law, e.g. exp_indep(1,1)"},  {"seed", "master seed"},
      {"reps", "replicates"},                    {"horizon", "time horizon t_max"},
      {"grid", "grid preset"},                   {"j", "generation index"},
      {"step", "renewal table step h"},          {"u", "supermartingale parameter"},
      {"t-min", "first scan time"},              {"out", "output directory"},
      {"workers", "worker threads"},
  };
  std::vector<std::string> values(names.size());
  std::vector<CLI::Option*> options;
  for (std::size_t i = 0; i < names.size(); ++i)
    options.push_back(app.add_option("--" + names[i].first, values[i], names[i].second));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::vector<std::pair<std::string, std::string>> flags;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (options[i]->count() == 0) continue;
      std::string key = names[i].first;
      if (key == "t-min") key = "t_min";
      flags.emplace_back(key, values[i]);
    }
    const std::string text = config_path.empty() ? std::string() : iterlil::read_config_file(config_path);
    const auto cfg = iterlil::parse_config(text, flags);
    return iterlil::run_subcommand(iterlil::parse_subcommand(command), cfg, std::cout, std::cerr);
  } catch (const iterlil::Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}
