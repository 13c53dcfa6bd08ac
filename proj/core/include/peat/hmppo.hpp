#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "peat/env.hpp"
#include "peat/nn.hpp"
#include "peat/train_log.hpp"

namespace peat {

struct HyperParams {
  double discount = 0.99;          // gamma
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  int epochs_per_update = 10;
  int minibatch_size = 64;
  int workers = 4;                 // parallel rollout episodes per update
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double grad_clip_norm = 0.5;
  long total_steps = 300000;       // environment steps
  int eval_interval = 500;         // environment steps between evaluations
  int eval_episodes = 5;           // frozen-policy episodes per evaluation
  bool normalize_advantages = true;
  int hidden_units = 64;
  int hidden_layers = 2;
  double init_log_std = -0.5;      // initial per-dimension policy log-std

  void validate() const;
};

// Per-series critic values plus the GAE products computed from them.
struct ValueSeries {
  std::vector<double> value;      // V recorded at collection time
  std::vector<double> advantage;  // filled by compute_gae
  std::vector<double> ret;        // advantage + value (pre-normalization)
};

// Trajectories of one rollout round; all columns share the step index.
struct RolloutBuffer {
  std::vector<Vector> s1;  // normalized placement-agent states
  std::vector<Vector> s2;  // normalized retention-agent states
  std::vector<std::vector<int>> a1;
  std::vector<std::vector<double>> a2;
  std::vector<double> logp1;
  std::vector<double> logp2;
  std::vector<double> reward;
  std::vector<std::uint8_t> done;
  ValueSeries central;  // values of the centralized critic

  std::size_t size() const { return reward.size(); }
};

// GAE over a (reward, done, value) track. Episode ends are true terminations
// and bootstrap with V = 0. When normalize is set, advantages are shifted and
// scaled to mean 0 / std 1 after returns have been formed.
void compute_gae(const std::vector<double>& rewards, const std::vector<std::uint8_t>& dones,
                 ValueSeries& series, double discount, double lambda, bool normalize);

inline void compute_gae(RolloutBuffer& buffer, double discount, double lambda, bool normalize) {
  compute_gae(buffer.reward, buffer.done, buffer.central, discount, lambda, normalize);
}

// min(r*A, clip(r, 1-eps, 1+eps)*A)
double clipped_surrogate(double ratio, double advantage, double epsilon);
// d(clipped surrogate)/d(logp_new); zero on the flat clipped branch
double surrogate_dlogp(double ratio, double advantage, double epsilon);

// Minibatch losses as minimized by the update (entropy bonus handled
// separately by the caller).
double actor_loss(std::span<const double> logp_new, std::span<const double> logp_old,
                  std::span<const double> advantage, double epsilon);
double critic_loss(std::span<const double> value_now, std::span<const double> advantage,
                   std::span<const double> value_then, double coefficient = 1.0);

// Two decentralized actors plus one centralized critic over {s1; s2}.
struct HmppoModel {
  BernoulliHead actor1;
  GaussianHead actor2;
  Mlp critic;
  AdamState opt_actor1;
  AdamState opt_actor2;
  AdamState opt_critic;
  int num_ues = 0;
  double retention_lo = 0.0;
  double retention_hi = 1.0;
};

HmppoModel make_hmppo(const SystemConfig& config, const HyperParams& hyper, std::uint64_t seed);

// Stochastic action sources used during rollout collection, plus the
// collection-time value estimate. The default samplers come from a model;
// tests may override them (e.g. with random actions).
struct RolloutSamplers {
  std::function<std::pair<std::vector<int>, double>(const Vector&, Rng&)> placement;
  std::function<std::pair<std::vector<double>, double>(const Vector&, Rng&)> retention;
  std::function<double(const Vector& s1, const Vector& s2)> value;  // may be empty
};

RolloutSamplers hmppo_samplers(const HmppoModel& model);

// Collects `episodes` full episodes (the rollout horizon is episodes * T).
// Episode and action streams derive from (master_seed, episode_base + i), so
// results are independent of the thread cap.
RolloutBuffer collect_rollout(const SystemConfig& config, const RolloutSamplers& samplers,
                              int episodes, std::uint64_t master_seed, long episode_base,
                              int thread_cap);

struct UpdateStats {
  double actor1_loss = 0.0;
  double actor2_loss = 0.0;
  double critic_loss = 0.0;
  double entropy1 = 0.0;
  double entropy2 = 0.0;
  double mean_ratio1 = 0.0;
  double mean_ratio2 = 0.0;
  double approx_kl1 = 0.0;
  double approx_kl2 = 0.0;
};

// Thrown when a non-finite loss shows up; carries a diagnostics report.
struct UpdateDivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Clipped-surrogate updates for both actors and a squared-error regression
// for the critic, over shuffled minibatches for the configured epoch count.
UpdateStats update(HmppoModel& model, const RolloutBuffer& buffer, const HyperParams& hyper,
                   Rng& shuffle_rng);

// Deterministic action mode: placement by logit threshold, retention by the
// squashed mean.
PolicyPair deterministic_policy(const HmppoModel& model, const SystemConfig& config);

struct EvalSummary {
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double total_delay_min = 0.0;
  double mean_perplexity = 0.0;
  double emulator_switches = 0.0;
};

EvalSummary summarize_episodes(const std::vector<EpisodeMetrics>& metrics);

struct TrainOptions {
  std::string out_dir;     // empty: keep everything in memory
  int thread_cap = 0;      // 0: one thread per worker
  bool write_trace = false;  // trace the final evaluation's episodes
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  long env_steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Full training loop: collect / GAE / update, with a frozen-policy
// evaluation and a checkpoint at every eval_interval boundary.
TrainResult train_hmppo(const SystemConfig& config, const HyperParams& hyper, std::uint64_t seed,
                        const TrainOptions& options = {});

// RNG stream tags shared by the training loops.
inline constexpr std::uint64_t kEnvStream = 0x45;
inline constexpr std::uint64_t kActionStream = 0xA7;
inline constexpr std::uint64_t kInitStream = 0x17;
inline constexpr std::uint64_t kUpdateStream = 0xD3;
inline constexpr std::uint64_t kEvalStream = 0xEF;

}  // namespace peat
