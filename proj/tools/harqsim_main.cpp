// Command-line front end: single runs, penalty-weight sweeps, and
// strategy comparisons. See README.md for the config format.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "harqsim/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"slot-level downlink HARQ simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::string seeds_text = "1";
  unsigned threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "scenario file (key=value lines)")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", sets,
                    "override one scenario key, e.g. --set seed=7");
    sub->add_option("--out", out_dir,
                    "output directory (default: timestamped)");
  };

  CLI::App* run = app.add_subcommand("run", "simulate one scenario");
  add_common(run);

  CLI::App* sweep =
      app.add_subcommand("sweep-v", "sweep the penalty weight of the "
                                    "adaptive controller");
  add_common(sweep);
  std::string values_text;
  sweep->add_option("--values", values_text,
                    "comma-separated penalty weights")
      ->required();
  sweep->add_option("--seeds", seeds_text, "comma-separated seeds");
  sweep->add_option("--threads", threads, "worker threads (0 = auto)");

  CLI::App* compare =
      app.add_subcommand("compare", "run several strategies side by side");
  add_common(compare);
  std::string strategies_text;
  compare
      ->add_option("--strategies", strategies_text,
                   "comma-separated list, e.g. "
                   "reactive,fixed(2,2,2,2,2),adaptive")
      ->required();
  compare->add_option("--seeds", seeds_text, "comma-separated seeds");
  compare->add_option("--threads", threads, "worker threads (0 = auto)");

  CLI11_PARSE(app, argc, argv);

  std::string err;
  if (run->parsed()) {
    harqsim::RunOptions opt{config_path, sets, out_dir};
    return harqsim::cmd_run(opt, std::cout, std::cerr);
  }
  if (sweep->parsed()) {
    harqsim::SweepOptions opt;
    opt.config_path = config_path;
    opt.sets = sets;
    opt.out_dir = out_dir;
    opt.threads = threads;
    if (!harqsim::parse_double_list(values_text, opt.values, err) ||
        !harqsim::parse_seed_list(seeds_text, opt.seeds, err)) {
      std::cerr << err << "\n";
      return 2;
    }
    return harqsim::cmd_sweep_v(opt, std::cout, std::cerr);
  }
  harqsim::CompareOptions opt;
  opt.config_path = config_path;
  opt.sets = sets;
  opt.out_dir = out_dir;
  opt.threads = threads;
  opt.strategies = harqsim::split_strategy_list(strategies_text);
  if (!harqsim::parse_seed_list(seeds_text, opt.seeds, err)) {
    std::cerr << err << "\n";
    return 2;
  }
  return harqsim::cmd_compare(opt, std::cout, std::cerr);
}
