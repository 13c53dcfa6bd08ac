#include "peat/baselines.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "peat/checkpoint.hpp"
#include "peat/stats.hpp"
#include "train_loop.hpp"

namespace peat {

namespace {

std::vector<int> mlp_sizes(int input, int output, const HyperParams& hyper) {
  std::vector<int> sizes;
  sizes.push_back(input);
  for (int i = 0; i < hyper.hidden_layers; ++i) sizes.push_back(hyper.hidden_units);
  sizes.push_back(output);
  return sizes;
}

Vector to_vector(const StateVector& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ParamViews gaussian_views(GaussianHead& head) {
  ParamViews views = param_views(head.mean_net);
  views.emplace_back(head.log_std.data(), head.log_std.size());
  return views;
}

ParamViews gaussian_grad_views(MlpGrad& mean_grad, Vector& log_std_grad) {
  ParamViews views = param_views(mean_grad);
  views.emplace_back(log_std_grad.data(), log_std_grad.size());
  return views;
}

void shuffle_indices(std::vector<std::size_t>& indices, Rng& rng) {
  for (std::size_t i = indices.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(indices[i - 1], indices[j]);
  }
}

struct SingleAgentStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double mean_ratio = 0.0;
  double approx_kl = 0.0;
};

// One independent PPO update for a single (actor, critic) pair over its own
// states, actions, and GAE track. ActorOps abstracts over the two head
// kinds: eval(i) -> (logprob, entropy), backward(i, dlogp, dent).
template <typename EvalFn, typename BackwardFn>
SingleAgentStats ppo_update_single(std::size_t n, const std::vector<Vector>& states,
                                   const std::vector<double>& logp_old, const ValueSeries& series,
                                   Mlp& critic, AdamState& critic_opt, ParamViews& actor_params,
                                   ParamViews& actor_gviews, AdamState& actor_opt,
                                   const HyperParams& hyper, Rng& shuffle_rng, EvalFn eval_fn,
                                   BackwardFn backward_fn, const char* label) {
  MlpGrad grad_c = zero_grad_like(critic);
  ParamViews params_c = param_views(critic);
  ParamViews gviews_c = param_views(grad_c);

  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);

  double loss_sum = 0.0, closs_sum = 0.0, ent_sum = 0.0, ratio_sum = 0.0, kl_sum = 0.0;
  long minibatches = 0, samples = 0;

  for (int epoch = 0; epoch < hyper.epochs_per_update; ++epoch) {
    shuffle_indices(indices, shuffle_rng);
    for (std::size_t start = 0; start < n; start += hyper.minibatch_size) {
      const std::size_t end = std::min(n, start + hyper.minibatch_size);
      const double batch = static_cast<double>(end - start);

      for (auto& view : actor_gviews) view.setZero();
      grad_c.zero();
      double loss = 0.0, loss_c = 0.0;

      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = indices[k];
        const double adv = series.advantage[i];
        const auto [logprob, entropy] = eval_fn(i);
        const double ratio = std::exp(logprob - logp_old[i]);
        loss += -clipped_surrogate(ratio, adv, hyper.clip_epsilon);
        ent_sum += entropy;
        ratio_sum += ratio;
        kl_sum += (ratio - 1.0) - (logprob - logp_old[i]);
        ++samples;
        backward_fn(i, -surrogate_dlogp(ratio, adv, hyper.clip_epsilon) / batch,
                    -hyper.entropy_coef / batch);

        ForwardCache cache;
        const double v = forward(critic, states[i], &cache)[0];
        const double err = v - series.ret[i];
        loss_c += hyper.value_coef * err * err;
        Vector dv(1);
        dv[0] = hyper.value_coef * 2.0 * err / batch;
        backward(critic, cache, dv, grad_c);
      }

      loss /= batch;
      loss_c /= batch;
      if (!std::isfinite(loss) || !std::isfinite(loss_c)) {
        std::ostringstream os;
        os << "non-finite loss in " << label << " update (epoch " << epoch << "): actor=" << loss
           << " critic=" << loss_c;
        throw UpdateDivergedError(os.str());
      }

      clip_global_norm(actor_gviews, hyper.grad_clip_norm);
      adam_step(actor_opt, actor_params, actor_gviews);
      clip_global_norm(gviews_c, hyper.grad_clip_norm);
      adam_step(critic_opt, params_c, gviews_c);

      loss_sum += loss;
      closs_sum += loss_c;
      ++minibatches;
    }
  }

  SingleAgentStats stats;
  stats.actor_loss = loss_sum / minibatches;
  stats.critic_loss = closs_sum / minibatches;
  stats.entropy = ent_sum / samples;
  stats.mean_ratio = ratio_sum / samples;
  stats.approx_kl = kl_sum / samples;
  return stats;
}

UpdateStats update_ippo(IppoModel& model, const RolloutBuffer& buffer, const ValueSeries& series1,
                        const ValueSeries& series2, const HyperParams& hyper, Rng& shuffle_rng) {
  const std::size_t n = buffer.size();

  MlpGrad grad1 = zero_grad_like(model.actor1.logits_net);
  ParamViews params1 = param_views(model.actor1.logits_net);
  ParamViews gviews1 = param_views(grad1);
  BernoulliEval ev1;
  auto eval1 = [&](std::size_t i) {
    ev1 = logprob_of(model.actor1, buffer.s1[i], buffer.a1[i]);
    return std::make_pair(ev1.logprob, ev1.entropy);
  };
  auto backward1 = [&](std::size_t, double dlogp, double dent) {
    bernoulli_backward(model.actor1, ev1, dlogp, dent, grad1);
  };
  const SingleAgentStats stats1 =
      ppo_update_single(n, buffer.s1, buffer.logp1, series1, model.critic1, model.opt_critic1,
                        params1, gviews1, model.opt_actor1, hyper, shuffle_rng, eval1, backward1,
                        "ippo agent 1");

  MlpGrad grad2 = zero_grad_like(model.actor2.mean_net);
  Vector grad2_log_std = Vector::Zero(model.actor2.log_std.size());
  ParamViews params2 = gaussian_views(model.actor2);
  ParamViews gviews2 = gaussian_grad_views(grad2, grad2_log_std);
  GaussianEval ev2;
  auto eval2 = [&](std::size_t i) {
    ev2 = logprob_of(model.actor2, buffer.s2[i], buffer.a2[i], model.retention_lo,
                     model.retention_hi);
    return std::make_pair(ev2.logprob, ev2.entropy);
  };
  auto backward2 = [&](std::size_t, double dlogp, double dent) {
    gaussian_backward(model.actor2, ev2, dlogp, dent, grad2, grad2_log_std);
  };
  const SingleAgentStats stats2 =
      ppo_update_single(n, buffer.s2, buffer.logp2, series2, model.critic2, model.opt_critic2,
                        params2, gviews2, model.opt_actor2, hyper, shuffle_rng, eval2, backward2,
                        "ippo agent 2");
  model.actor2.clamp_log_std();

  UpdateStats stats;
  stats.actor1_loss = stats1.actor_loss;
  stats.actor2_loss = stats2.actor_loss;
  stats.critic_loss = 0.5 * (stats1.critic_loss + stats2.critic_loss);
  stats.entropy1 = stats1.entropy;
  stats.entropy2 = stats2.entropy;
  stats.mean_ratio1 = stats1.mean_ratio;
  stats.mean_ratio2 = stats2.mean_ratio;
  stats.approx_kl1 = stats1.approx_kl;
  stats.approx_kl2 = stats2.approx_kl;
  return stats;
}

}  // namespace

IppoModel make_ippo(const SystemConfig& config, const HyperParams& hyper, std::uint64_t seed) {
  config.validate();
  hyper.validate();
  const int n = config.num_ues;
  Rng init_rng(mix_seed(seed, kInitStream));
  IppoModel model;
  model.num_ues = n;
  model.retention_lo = config.retention_min;
  model.retention_hi = config.retention_max;
  model.actor1.logits_net = make_mlp(mlp_sizes(4 * n, n, hyper), init_rng, 0.01);
  model.critic1 = make_mlp(mlp_sizes(4 * n, 1, hyper), init_rng, 1.0);
  model.actor2.mean_net = make_mlp(mlp_sizes(3 * n, n, hyper), init_rng, 0.01);
  model.actor2.log_std = Vector::Constant(n, hyper.init_log_std);
  model.critic2 = make_mlp(mlp_sizes(3 * n, 1, hyper), init_rng, 1.0);
  model.opt_actor1 = make_adam(param_views(model.actor1.logits_net), hyper.actor_lr);
  model.opt_critic1 = make_adam(param_views(model.critic1), hyper.critic_lr);
  model.opt_actor2 = make_adam(gaussian_views(model.actor2), hyper.actor_lr);
  model.opt_critic2 = make_adam(param_views(model.critic2), hyper.critic_lr);
  return model;
}

RolloutSamplers ippo_samplers(const IppoModel& model) {
  RolloutSamplers s;
  s.placement = [&model](const Vector& s1, Rng& rng) {
    const BernoulliSample sample = bernoulli_sample(model.actor1, s1, rng);
    return std::make_pair(sample.bits, sample.logprob);
  };
  s.retention = [&model](const Vector& s2, Rng& rng) {
    const GaussianSample sample =
        gaussian_sample(model.actor2, s2, model.retention_lo, model.retention_hi, rng);
    return std::make_pair(sample.actions, sample.logprob);
  };
  // per-agent critic values are filled after collection, not here
  return s;
}

PolicyPair deterministic_policy(const IppoModel& model, const SystemConfig& config) {
  PolicyPair policy;
  policy.placement = [&model](const StateVector& s1) {
    const Vector logits = forward(model.actor1.logits_net, to_vector(s1));
    std::vector<int> bits(logits.size());
    for (Eigen::Index i = 0; i < logits.size(); ++i) bits[i] = logits[i] > 0.0 ? 1 : 0;
    return bits;
  };
  const double lo = config.retention_min;
  const double hi = config.retention_max;
  policy.retention = [&model, lo, hi](const StateVector& s2) {
    const Vector mean = forward(model.actor2.mean_net, to_vector(s2));
    std::vector<double> actions(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      actions[i] = lo + (hi - lo) * (std::tanh(mean[i]) + 1.0) * 0.5;
    }
    return actions;
  };
  return policy;
}

TrainResult train_ippo(const SystemConfig& config, const HyperParams& hyper, std::uint64_t seed,
                       const TrainOptions& options) {
  IppoModel model = make_ippo(config, hyper, seed);
  detail::LoopCallbacks callbacks;
  callbacks.collect = [&](long episode_base) {
    return collect_rollout(config, ippo_samplers(model), hyper.workers, seed, episode_base,
                           options.thread_cap);
  };
  callbacks.learn = [&](RolloutBuffer& buffer, Rng& rng) {
    // collection-time value snapshots: parameters have not changed since
    ValueSeries series1, series2;
    series1.value.reserve(buffer.size());
    series2.value.reserve(buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      series1.value.push_back(forward(model.critic1, buffer.s1[i])[0]);
      series2.value.push_back(forward(model.critic2, buffer.s2[i])[0]);
    }
    compute_gae(buffer.reward, buffer.done, series1, hyper.discount, hyper.gae_lambda,
                hyper.normalize_advantages);
    compute_gae(buffer.reward, buffer.done, series2, hyper.discount, hyper.gae_lambda,
                hyper.normalize_advantages);
    return update_ippo(model, buffer, series1, series2, hyper, rng);
  };
  callbacks.policy = [&] { return deterministic_policy(model, config); };
  callbacks.save = [&](const std::string& path, long env_steps, const Rng& update_rng) {
    save_checkpoint(path, to_checkpoint(model, config, hyper, env_steps, update_rng));
  };
  return detail::run_train_loop(config, hyper, seed, options, callbacks);
}

PolicyPair random_policy(const SystemConfig& config, Rng& rng) {
  const int n = config.num_ues;
  const double lo = config.retention_min;
  const double hi = config.retention_max;
  PolicyPair policy;
  policy.placement = [n, &rng](const StateVector&) {
    std::vector<int> bits(n);
    for (int i = 0; i < n; ++i) bits[i] = rng.bernoulli(0.5) ? 1 : 0;
    return bits;
  };
  policy.retention = [n, lo, hi, &rng](const StateVector&) {
    std::vector<double> actions(n);
    for (int i = 0; i < n; ++i) actions[i] = rng.uniform(lo, hi);
    return actions;
  };
  return policy;
}

MetricSummary summarize_metrics(const std::vector<EpisodeMetrics>& metrics) {
  std::vector<double> rewards, delays, perplexities, switches;
  for (const auto& m : metrics) {
    rewards.push_back(m.episodic_reward);
    delays.push_back(m.total_delay_min);
    perplexities.push_back(m.mean_perplexity);
    switches.push_back(static_cast<double>(m.switch_count));
  }
  MetricSummary s;
  s.reward_mean = mean(rewards);
  s.reward_std = sample_std(rewards);
  s.delay_min_mean = mean(delays);
  s.delay_min_std = sample_std(delays);
  s.perplexity_mean = mean(perplexities);
  s.perplexity_std = sample_std(perplexities);
  s.switches_mean = mean(switches);
  s.switches_std = sample_std(switches);
  return s;
}

MetricSummary random_policy_rollout(const SystemConfig& config, int episodes, std::uint64_t seed,
                                    const TraceSink& trace) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  Rng policy_rng(mix_seed(seed, kActionStream));
  const PolicyPair policy = random_policy(config, policy_rng);
  const auto metrics =
      run_episodes(config, policy, episodes, mix_seed(seed, kEnvStream), trace);
  return summarize_metrics(metrics);
}

}  // namespace peat
