#pragma once

#include <string>
#include <vector>

#include "peat/config_io.hpp"
#include "peat/hmppo.hpp"
#include "peat/sysmodel.hpp"

namespace peat::harness {

// The [run] section of an experiment config.
struct RunConfig {
  std::string algo = "hmppo";  // hmppo | ippo | random
  std::vector<long> seeds{1};
  std::string out_dir;
  bool trace = false;
  int random_episodes = 100;  // episodes behind the random baseline summary
};

struct ExperimentConfig {
  SystemConfig sys;
  HyperParams hyper;
  RunConfig run;
};

// Sectioned key=value format:
//
//   [sys]
//   num_ues = 8
//   [hyper]
//   discount = 0.99
//   [run]
//   algo = hmppo
//   seeds = 1,2,3
//
// '#' starts a comment; blank lines are ignored. Unknown sections or keys
// raise std::invalid_argument naming the offender.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Applies one "section.key=value" override (e.g. "sys.num_ues").
void apply_override(ExperimentConfig& config, const std::string& dotted_key,
                    const std::string& value);

// Full-precision dump; reparsing it reproduces the config exactly.
std::string dump_config(const ExperimentConfig& config);

}  // namespace peat::harness
