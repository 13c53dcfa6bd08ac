#include "peat/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "peat/config_io.hpp"

namespace peat {

namespace {

constexpr const char* kMagic = "peat-checkpoint";
constexpr int kVersion = 1;

void push_mlp(std::vector<std::pair<std::string, Matrix>>& arrays, const std::string& prefix,
              const Mlp& net) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    arrays.emplace_back(prefix + ".l" + std::to_string(l) + ".w", net.weights[l]);
    arrays.emplace_back(prefix + ".l" + std::to_string(l) + ".b", net.biases[l]);
  }
}

void load_mlp(const Checkpoint& ckpt, const std::string& prefix, Mlp& net) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const Matrix& w = ckpt.array(prefix + ".l" + std::to_string(l) + ".w");
    const Matrix& b = ckpt.array(prefix + ".l" + std::to_string(l) + ".b");
    if (w.rows() != net.weights[l].rows() || w.cols() != net.weights[l].cols() ||
        b.rows() != net.biases[l].size() || b.cols() != 1) {
      throw std::runtime_error("checkpoint array shape mismatch for " + prefix + ".l" +
                               std::to_string(l));
    }
    net.weights[l] = w;
    net.biases[l] = b.col(0);
  }
}

}  // namespace

const Matrix& Checkpoint::array(const std::string& name) const {
  for (const auto& [key, mat] : arrays) {
    if (key == name) return mat;
  }
  throw std::runtime_error("checkpoint is missing array: " + name);
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint file: " + path);
  out << kMagic << ' ' << kVersion << '\n';
  out << "meta algo " << ckpt.algo << '\n';
  out << "meta env_steps " << ckpt.env_steps << '\n';
  for (const auto& [key, value] : to_key_values(ckpt.config)) {
    out << "sys " << key << ' ' << value << '\n';
  }
  for (const auto& [key, value] : to_key_values(ckpt.hyper)) {
    out << "hyper " << key << ' ' << value << '\n';
  }
  if (!ckpt.rng_state.empty()) out << "rng " << ckpt.rng_state << '\n';
  for (const auto& [name, mat] : ckpt.arrays) {
    out << "array " << name << ' ' << mat.rows() << ' ' << mat.cols() << '\n';
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) {
        if (c > 0) out << ' ';
        out << format_double(mat(r, c));
      }
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic || version != kVersion) {
    throw std::runtime_error("unrecognized checkpoint format in " + path);
  }
  Checkpoint ckpt;
  std::string tag;
  while (in >> tag) {
    if (tag == "end") return ckpt;
    if (tag == "meta") {
      std::string key, value;
      in >> key >> value;
      if (key == "algo") {
        ckpt.algo = value;
      } else if (key == "env_steps") {
        ckpt.env_steps = parse_long(value, "env_steps");
      }
    } else if (tag == "sys") {
      std::string key, value;
      in >> key >> value;
      apply_key_value(ckpt.config, key, value);
    } else if (tag == "hyper") {
      std::string key, value;
      in >> key >> value;
      apply_key_value(ckpt.hyper, key, value);
    } else if (tag == "rng") {
      std::getline(in, ckpt.rng_state);
      if (!ckpt.rng_state.empty() && ckpt.rng_state.front() == ' ') {
        ckpt.rng_state.erase(ckpt.rng_state.begin());
      }
    } else if (tag == "array") {
      std::string name;
      Eigen::Index rows = 0, cols = 0;
      in >> name >> rows >> cols;
      Matrix mat(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) in >> mat(r, c);
      }
      ckpt.arrays.emplace_back(name, std::move(mat));
    } else {
      throw std::runtime_error("unexpected checkpoint line tag '" + tag + "' in " + path);
    }
    if (in.fail()) throw std::runtime_error("malformed checkpoint content in " + path);
  }
  throw std::runtime_error("checkpoint truncated (missing end marker): " + path);
}

Checkpoint to_checkpoint(const HmppoModel& model, const SystemConfig& config,
                         const HyperParams& hyper, long env_steps, const Rng& update_rng) {
  Checkpoint ckpt;
  ckpt.algo = "hmppo";
  ckpt.env_steps = env_steps;
  ckpt.config = config;
  ckpt.hyper = hyper;
  std::ostringstream rng_os;
  update_rng.save(rng_os);
  ckpt.rng_state = rng_os.str();
  push_mlp(ckpt.arrays, "actor1", model.actor1.logits_net);
  push_mlp(ckpt.arrays, "actor2.mean", model.actor2.mean_net);
  ckpt.arrays.emplace_back("actor2.log_std", model.actor2.log_std);
  push_mlp(ckpt.arrays, "critic", model.critic);
  return ckpt;
}

Checkpoint to_checkpoint(const IppoModel& model, const SystemConfig& config,
                         const HyperParams& hyper, long env_steps, const Rng& update_rng) {
  Checkpoint ckpt;
  ckpt.algo = "ippo";
  ckpt.env_steps = env_steps;
  ckpt.config = config;
  ckpt.hyper = hyper;
  std::ostringstream rng_os;
  update_rng.save(rng_os);
  ckpt.rng_state = rng_os.str();
  push_mlp(ckpt.arrays, "agent1.actor", model.actor1.logits_net);
  push_mlp(ckpt.arrays, "agent1.critic", model.critic1);
  push_mlp(ckpt.arrays, "agent2.actor.mean", model.actor2.mean_net);
  ckpt.arrays.emplace_back("agent2.actor.log_std", model.actor2.log_std);
  push_mlp(ckpt.arrays, "agent2.critic", model.critic2);
  return ckpt;
}

HmppoModel hmppo_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.algo != "hmppo") {
    throw std::runtime_error("checkpoint algorithm is '" + ckpt.algo + "', expected hmppo");
  }
  HmppoModel model = make_hmppo(ckpt.config, ckpt.hyper, 0);
  load_mlp(ckpt, "actor1", model.actor1.logits_net);
  load_mlp(ckpt, "actor2.mean", model.actor2.mean_net);
  const Matrix& log_std = ckpt.array("actor2.log_std");
  if (log_std.rows() != model.actor2.log_std.size() || log_std.cols() != 1) {
    throw std::runtime_error("checkpoint array shape mismatch for actor2.log_std");
  }
  model.actor2.log_std = log_std.col(0);
  load_mlp(ckpt, "critic", model.critic);
  return model;
}

IppoModel ippo_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.algo != "ippo") {
    throw std::runtime_error("checkpoint algorithm is '" + ckpt.algo + "', expected ippo");
  }
  IppoModel model = make_ippo(ckpt.config, ckpt.hyper, 0);
  load_mlp(ckpt, "agent1.actor", model.actor1.logits_net);
  load_mlp(ckpt, "agent1.critic", model.critic1);
  load_mlp(ckpt, "agent2.actor.mean", model.actor2.mean_net);
  const Matrix& log_std = ckpt.array("agent2.actor.log_std");
  if (log_std.rows() != model.actor2.log_std.size() || log_std.cols() != 1) {
    throw std::runtime_error("checkpoint array shape mismatch for agent2.actor.log_std");
  }
  model.actor2.log_std = log_std.col(0);
  load_mlp(ckpt, "agent2.critic", model.critic2);
  return model;
}

}  // namespace peat
