#pragma once

#include <string>
#include <vector>

#include "peat/baselines.hpp"
#include "peat/hmppo.hpp"

namespace peat {

// Versioned text checkpoint: metadata key/value lines, the full system and
// hyperparameter configuration, the update-stream RNG state, and every
// parameter array by name. Doubles are written with %.17g and round-trip
// exactly.
//
//   peat-checkpoint 1
//   meta algo hmppo
//   meta env_steps 50000
//   sys num_ues 8
//   ...
//   hyper discount 0.99
//   ...
//   rng <engine state>
//   array actor1.l0.w 64 32
//   <row-major values, one row per line>
//   ...
//   end
struct Checkpoint {
  std::string algo;
  long env_steps = 0;
  SystemConfig config;
  HyperParams hyper;
  std::string rng_state;  // update-stream engine state; empty if unused
  std::vector<std::pair<std::string, Matrix>> arrays;

  const Matrix& array(const std::string& name) const;  // throws if missing
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint to_checkpoint(const HmppoModel& model, const SystemConfig& config,
                         const HyperParams& hyper, long env_steps, const Rng& update_rng);
Checkpoint to_checkpoint(const IppoModel& model, const SystemConfig& config,
                         const HyperParams& hyper, long env_steps, const Rng& update_rng);

// Rebuild models from a checkpoint; shapes are validated against the
// architecture implied by the stored configuration.
HmppoModel hmppo_from_checkpoint(const Checkpoint& ckpt);
IppoModel ippo_from_checkpoint(const Checkpoint& ckpt);

}  // namespace peat
