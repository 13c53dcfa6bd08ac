#pragma once

// Internal training-loop skeleton shared by the centralized and independent
// PPO trainers: rollout rounds, evaluation boundaries, log/checkpoint
// output, and abort handling.

#include <functional>
#include <string>

#include "peat/hmppo.hpp"

namespace peat::detail {

struct LoopCallbacks {
  std::function<RolloutBuffer(long episode_base)> collect;
  std::function<UpdateStats(RolloutBuffer&, Rng&)> learn;
  std::function<PolicyPair()> policy;
  std::function<void(const std::string& path, long env_steps, const Rng& update_rng)> save;
};

TrainResult run_train_loop(const SystemConfig& config, const HyperParams& hyper,
                           std::uint64_t seed, const TrainOptions& options,
                           const LoopCallbacks& callbacks);

}  // namespace peat::detail
