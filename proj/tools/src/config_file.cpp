#include "harness/config_file.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace peat::harness {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<long> parse_seed_list(const std::string& text) {
  std::vector<long> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(parse_long(trim(item), "seeds"));
  if (seeds.empty()) throw std::invalid_argument("key 'seeds' needs at least one value");
  return seeds;
}

std::string format_seed_list(const std::vector<long>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

void apply_run_key(RunConfig& run, const std::string& key, const std::string& value) {
  if (key == "algo") {
    if (value != "hmppo" && value != "ippo" && value != "random") {
      throw std::invalid_argument("key 'algo' must be one of hmppo, ippo, random; got " + value);
    }
    run.algo = value;
  } else if (key == "seeds") {
    run.seeds = parse_seed_list(value);
  } else if (key == "out") {
    run.out_dir = value;
  } else if (key == "trace") {
    if (value == "true" || value == "1") {
      run.trace = true;
    } else if (value == "false" || value == "0") {
      run.trace = false;
    } else {
      throw std::invalid_argument("key 'trace' must be a boolean, got " + value);
    }
  } else if (key == "random_episodes") {
    run.random_episodes = static_cast<int>(parse_long(value, "random_episodes"));
    if (run.random_episodes < 1) {
      throw std::invalid_argument("key 'random_episodes' must be >= 1");
    }
  } else {
    throw std::invalid_argument("unknown config key: run." + key);
  }
}

std::vector<KeyValue> run_key_values(const RunConfig& run) {
  return {{"algo", run.algo},
          {"seeds", format_seed_list(run.seeds)},
          {"out", run.out_dir},
          {"trace", run.trace ? "true" : "false"},
          {"random_episodes", std::to_string(run.random_episodes)}};
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "sys" && section != "hyper" && section != "run") {
        throw std::invalid_argument("unknown config section: [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw std::invalid_argument("key '" + key + "' appears before any [section]");
    }
    if (section == "sys") {
      apply_key_value(config.sys, key, value);
    } else if (section == "hyper") {
      apply_key_value(config.hyper, key, value);
    } else {
      apply_run_key(config.run, key, value);
    }
  }
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void apply_override(ExperimentConfig& config, const std::string& dotted_key,
                    const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) {
    throw std::invalid_argument("override key must look like section.key, got " + dotted_key);
  }
  const std::string section = dotted_key.substr(0, dot);
  const std::string key = dotted_key.substr(dot + 1);
  if (section == "sys") {
    apply_key_value(config.sys, key, value);
  } else if (section == "hyper") {
    apply_key_value(config.hyper, key, value);
  } else if (section == "run") {
    apply_run_key(config.run, key, value);
  } else {
    throw std::invalid_argument("unknown config section in override: " + section);
  }
}

std::string dump_config(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "[sys]\n";
  for (const auto& [key, value] : to_key_values(config.sys)) out << key << " = " << value << '\n';
  out << "\n[hyper]\n";
  for (const auto& [key, value] : to_key_values(config.hyper)) {
    out << key << " = " << value << '\n';
  }
  out << "\n[run]\n";
  for (const auto& [key, value] : run_key_values(config.run)) out << key << " = " << value << '\n';
  return out.str();
}

}  // namespace peat::harness
