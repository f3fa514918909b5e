// fslab: runs the experiments and diagnostics from a key=value config.
//
//   fslab exp1 --config run.cfg --seed 3
//   fslab exp2 --seeds 1,2,3 --out sweep
//   fslab construct-stable --eta 1e-3
//   fslab verify-false-structure --mutate true
//   fslab probe --perturber case2-family-swap --model pixel-sum

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "cli.h"
#include "fslab/errors.h"

using namespace fslab;

int main(int argc, char** argv) {
  CLI::App app{"False-structure experiments"};
  app.require_subcommand(1);

  struct Sub {
    cli::Verb verb;
    CLI::App* app;
    std::string config_file;
    cli::Values given;
  };
  std::vector<Sub> subs;
  for (cli::Verb v : {cli::Verb::kExp1, cli::Verb::kExp2, cli::Verb::kConstructStable,
                      cli::Verb::kVerify, cli::Verb::kProbe}) {
    subs.push_back({v, nullptr, {}, {}});
  }
  const char* help[] = {"train the four interval networks and attribute their structure",
                        "train the stripe CNN and score it on the four test-set rows",
                        "build the analytic stable network and certify it",
                        "check the false-structure definition on both cases",
                        "measure label flips under a fixed perturbation"};
  for (std::size_t i = 0; i < subs.size(); ++i) {
    Sub& s = subs[i];
    s.app = app.add_subcommand(std::string(cli::to_string(s.verb)), help[i]);
    s.app->add_option("--config", s.config_file, "key = value file")->check(CLI::ExistingFile);
    for (const auto& [key, def] : cli::defaults(s.verb)) {
      s.app->add_option_function<std::string>(
          "--" + key, [&s, key](const std::string& v) { s.given[key] = v; },
          "default " + def);
    }
  }
  CLI11_PARSE(app, argc, argv);

  for (Sub& s : subs) {
    if (!s.app->parsed()) continue;
    try {
      cli::Values file;
      if (!s.config_file.empty()) {
        std::ifstream in(s.config_file);
        file = cli::parse_key_values(in, s.config_file);
      }
      return cli::run(cli::resolve(s.verb, file, s.given), std::cerr);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return cli::kExitInvalid;
    }
  }
  return cli::kExitInvalid;
}
