#pragma once

#include "peat/hmppo.hpp"

namespace peat {

// Independent PPO: each agent keeps its own actor, critic, optimizers, and
// GAE track, computed from the shared global reward. Agent 1's critic sees
// only s1 (length 4N), agent 2's only s2 (length 3N).
struct IppoModel {
  BernoulliHead actor1;
  Mlp critic1;
  AdamState opt_actor1;
  AdamState opt_critic1;

  GaussianHead actor2;
  Mlp critic2;
  AdamState opt_actor2;
  AdamState opt_critic2;

  int num_ues = 0;
  double retention_lo = 0.0;
  double retention_hi = 1.0;
};

IppoModel make_ippo(const SystemConfig& config, const HyperParams& hyper, std::uint64_t seed);

RolloutSamplers ippo_samplers(const IppoModel& model);

PolicyPair deterministic_policy(const IppoModel& model, const SystemConfig& config);

// Same loop and log schema as train_hmppo, with per-agent critics and
// independent updates.
TrainResult train_ippo(const SystemConfig& config, const HyperParams& hyper, std::uint64_t seed,
                       const TrainOptions& options = {});

// Uniform random joint policy: z ~ Bernoulli(0.5), E ~ U[retention bounds].
PolicyPair random_policy(const SystemConfig& config, Rng& rng);

// Mean and sample std of the four episode metrics over rollout episodes.
struct MetricSummary {
  double reward_mean = 0.0, reward_std = 0.0;
  double delay_min_mean = 0.0, delay_min_std = 0.0;
  double perplexity_mean = 0.0, perplexity_std = 0.0;
  double switches_mean = 0.0, switches_std = 0.0;
};

MetricSummary summarize_metrics(const std::vector<EpisodeMetrics>& metrics);

MetricSummary random_policy_rollout(const SystemConfig& config, int episodes, std::uint64_t seed,
                                    const TraceSink& trace = nullptr);

}  // namespace peat
