#include "peat/hmppo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

#include "peat/checkpoint.hpp"
#include "peat/stats.hpp"
#include "train_loop.hpp"

namespace peat {

void HyperParams::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(msg); };
  if (!(discount > 0.0 && discount <= 1.0)) fail("discount must be in (0, 1]");
  if (!(gae_lambda > 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must be in (0, 1]");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) fail("clip_epsilon must be in (0, 1)");
  if (!(actor_lr > 0.0)) fail("actor_lr must be positive");
  if (!(critic_lr > 0.0)) fail("critic_lr must be positive");
  if (epochs_per_update < 1) fail("epochs_per_update must be >= 1");
  if (minibatch_size < 1) fail("minibatch_size must be >= 1");
  if (workers < 1) fail("workers must be >= 1");
  if (!(entropy_coef >= 0.0)) fail("entropy_coef must be nonnegative");
  if (!(value_coef > 0.0)) fail("value_coef must be positive");
  if (!(grad_clip_norm > 0.0)) fail("grad_clip_norm must be positive");
  if (total_steps < 1) fail("total_steps must be >= 1");
  if (eval_interval < 1) fail("eval_interval must be >= 1");
  if (eval_episodes < 1) fail("eval_episodes must be >= 1");
  if (hidden_units < 1) fail("hidden_units must be >= 1");
  if (hidden_layers < 1) fail("hidden_layers must be >= 1");
}

void compute_gae(const std::vector<double>& rewards, const std::vector<std::uint8_t>& dones,
                 ValueSeries& series, double discount, double lambda, bool normalize) {
  const std::size_t n = rewards.size();
  if (series.value.size() != n || dones.size() != n) {
    throw std::logic_error("compute_gae: rewards, dones, and values must be filled and aligned");
  }
  series.advantage.assign(n, 0.0);
  series.ret.assign(n, 0.0);
  double gae = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    // episode ends are true terminations: bootstrap with V = 0
    const bool terminal = dones[k] || k + 1 == n;
    const double next_value = terminal ? 0.0 : series.value[k + 1];
    const double delta = rewards[k] + discount * next_value - series.value[k];
    gae = dones[k] ? delta : delta + discount * lambda * gae;
    series.advantage[k] = gae;
    series.ret[k] = gae + series.value[k];
  }
  if (normalize) {
    const double m = mean(series.advantage);
    const double s = sample_std(series.advantage);
    for (double& a : series.advantage) a = (a - m) / (s + 1e-8);
  }
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double surrogate_dlogp(double ratio, double advantage, double epsilon) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  // on the active unclipped branch d(r*A)/dlogp = r*A; the clipped branch is flat
  return unclipped <= clipped ? unclipped : 0.0;
}

double actor_loss(std::span<const double> logp_new, std::span<const double> logp_old,
                  std::span<const double> advantage, double epsilon) {
  if (logp_new.size() != logp_old.size() || logp_new.size() != advantage.size()) {
    throw std::invalid_argument("actor_loss: span lengths differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < logp_new.size(); ++i) {
    sum += -clipped_surrogate(std::exp(logp_new[i] - logp_old[i]), advantage[i], epsilon);
  }
  return sum / static_cast<double>(logp_new.size());
}

double critic_loss(std::span<const double> value_now, std::span<const double> advantage,
                   std::span<const double> value_then, double coefficient) {
  if (value_now.size() != advantage.size() || value_now.size() != value_then.size()) {
    throw std::invalid_argument("critic_loss: span lengths differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < value_now.size(); ++i) {
    const double err = value_now[i] - (advantage[i] + value_then[i]);
    sum += err * err;
  }
  return coefficient * sum / static_cast<double>(value_now.size());
}

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

}  // namespace

HmppoModel make_hmppo(const SystemConfig& config, const HyperParams& hyper, std::uint64_t seed) {
  config.validate();
  hyper.validate();
  const int n = config.num_ues;
  Rng init_rng(mix_seed(seed, kInitStream));
  HmppoModel model;
  model.num_ues = n;
  model.retention_lo = config.retention_min;
  model.retention_hi = config.retention_max;
  model.actor1.logits_net = make_mlp(mlp_sizes(4 * n, n, hyper), init_rng, 0.01);
  model.actor2.mean_net = make_mlp(mlp_sizes(3 * n, n, hyper), init_rng, 0.01);
  model.actor2.log_std = Vector::Constant(n, hyper.init_log_std);
  model.critic = make_mlp(mlp_sizes(7 * n, 1, hyper), init_rng, 1.0);
  model.opt_actor1 = make_adam(param_views(model.actor1.logits_net), hyper.actor_lr);
  model.opt_actor2 = make_adam(gaussian_views(model.actor2), hyper.actor_lr);
  model.opt_critic = make_adam(param_views(model.critic), hyper.critic_lr);
  return model;
}

RolloutSamplers hmppo_samplers(const HmppoModel& model) {
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
  s.value = [&model](const Vector& s1, const Vector& s2) {
    Vector joint(s1.size() + s2.size());
    joint << s1, s2;
    return forward(model.critic, joint)[0];
  };
  return s;
}

RolloutBuffer collect_rollout(const SystemConfig& config, const RolloutSamplers& samplers,
                              int episodes, std::uint64_t master_seed, long episode_base,
                              int thread_cap) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  const StateScales scales = StateScales::from(config);

  std::vector<RolloutBuffer> parts(episodes);
  auto roll_one = [&](int e) {
    Rng action_rng(mix_seed(master_seed, kActionStream, static_cast<std::uint64_t>(episode_base + e)));
    Episode episode(config, mix_seed(master_seed, kEnvStream, static_cast<std::uint64_t>(episode_base + e)));
    RolloutBuffer& buf = parts[e];
    while (!episode.done()) {
      Vector s1 = to_vector(normalize_agent1(episode.agent1_state(), config.num_ues, scales));
      auto [bits, logp1] = samplers.placement(s1, action_rng);
      Vector s2 = to_vector(normalize_agent2(episode.observe_agent2(bits), config.num_ues, scales));
      auto [retentions, logp2] = samplers.retention(s2, action_rng);
      const StepResult result = episode.step(JointDecision{bits, retentions});
      if (samplers.value) buf.central.value.push_back(samplers.value(s1, s2));
      buf.s1.push_back(std::move(s1));
      buf.s2.push_back(std::move(s2));
      buf.a1.push_back(std::move(bits));
      buf.a2.push_back(std::move(retentions));
      buf.logp1.push_back(logp1);
      buf.logp2.push_back(logp2);
      buf.reward.push_back(result.reward);
      buf.done.push_back(result.done ? 1 : 0);
    }
  };

  int threads = thread_cap > 0 ? thread_cap : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, episodes));
  if (threads == 1) {
    for (int e = 0; e < episodes; ++e) roll_one(e);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int e = t; e < episodes; e += threads) roll_one(e);
      });
    }
    for (auto& th : pool) th.join();
  }

  // concatenate in episode order so results do not depend on the thread cap
  RolloutBuffer out;
  for (auto& part : parts) {
    std::move(part.s1.begin(), part.s1.end(), std::back_inserter(out.s1));
    std::move(part.s2.begin(), part.s2.end(), std::back_inserter(out.s2));
    std::move(part.a1.begin(), part.a1.end(), std::back_inserter(out.a1));
    std::move(part.a2.begin(), part.a2.end(), std::back_inserter(out.a2));
    out.logp1.insert(out.logp1.end(), part.logp1.begin(), part.logp1.end());
    out.logp2.insert(out.logp2.end(), part.logp2.begin(), part.logp2.end());
    out.reward.insert(out.reward.end(), part.reward.begin(), part.reward.end());
    out.done.insert(out.done.end(), part.done.begin(), part.done.end());
    out.central.value.insert(out.central.value.end(), part.central.value.begin(),
                             part.central.value.end());
  }
  return out;
}

namespace {

void shuffle_indices(std::vector<std::size_t>& indices, Rng& rng) {
  for (std::size_t i = indices.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(indices[i - 1], indices[j]);
  }
}

struct RunningMean {
  double sum = 0.0;
  long count = 0;
  void add(double v) {
    sum += v;
    ++count;
  }
  double value() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
};

[[noreturn]] void report_divergence(const char* where, int epoch, std::size_t minibatch,
                                    double loss1, double loss2, double loss_critic) {
  std::ostringstream os;
  os << "non-finite loss in " << where << " (epoch " << epoch << ", minibatch " << minibatch
     << "): actor1=" << loss1 << " actor2=" << loss2 << " critic=" << loss_critic;
  throw UpdateDivergedError(os.str());
}

}  // namespace

UpdateStats update(HmppoModel& model, const RolloutBuffer& buffer, const HyperParams& hyper,
                   Rng& shuffle_rng) {
  const std::size_t n = buffer.size();
  if (n == 0) throw std::invalid_argument("update: empty rollout buffer");
  if (buffer.central.advantage.size() != n || buffer.central.ret.size() != n) {
    throw std::logic_error("update: advantages not computed");
  }

  MlpGrad grad1 = zero_grad_like(model.actor1.logits_net);
  MlpGrad grad2 = zero_grad_like(model.actor2.mean_net);
  Vector grad2_log_std = Vector::Zero(model.actor2.log_std.size());
  MlpGrad grad_c = zero_grad_like(model.critic);

  ParamViews params1 = param_views(model.actor1.logits_net);
  ParamViews params2 = gaussian_views(model.actor2);
  ParamViews params_c = param_views(model.critic);
  ParamViews gviews1 = param_views(grad1);
  ParamViews gviews2 = gaussian_grad_views(grad2, grad2_log_std);
  ParamViews gviews_c = param_views(grad_c);

  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);

  RunningMean loss1_mean, loss2_mean, loss_c_mean, ent1_mean, ent2_mean;
  RunningMean ratio1_mean, ratio2_mean, kl1_mean, kl2_mean;

  for (int epoch = 0; epoch < hyper.epochs_per_update; ++epoch) {
    shuffle_indices(indices, shuffle_rng);
    for (std::size_t start = 0; start < n; start += hyper.minibatch_size) {
      const std::size_t end = std::min(n, start + hyper.minibatch_size);
      const double batch = static_cast<double>(end - start);

      grad1.zero();
      grad2.zero();
      grad2_log_std.setZero();
      grad_c.zero();
      double loss1 = 0.0, loss2 = 0.0, loss_c = 0.0, ent1 = 0.0, ent2 = 0.0;

      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = indices[k];
        const double adv = buffer.central.advantage[i];

        const BernoulliEval ev1 = logprob_of(model.actor1, buffer.s1[i], buffer.a1[i]);
        const double ratio1 = std::exp(ev1.logprob - buffer.logp1[i]);
        loss1 += -clipped_surrogate(ratio1, adv, hyper.clip_epsilon);
        ent1 += ev1.entropy;
        bernoulli_backward(model.actor1, ev1,
                           -surrogate_dlogp(ratio1, adv, hyper.clip_epsilon) / batch,
                           -hyper.entropy_coef / batch, grad1);
        ratio1_mean.add(ratio1);
        kl1_mean.add((ratio1 - 1.0) - (ev1.logprob - buffer.logp1[i]));

        const GaussianEval ev2 = logprob_of(model.actor2, buffer.s2[i], buffer.a2[i],
                                            model.retention_lo, model.retention_hi);
        const double ratio2 = std::exp(ev2.logprob - buffer.logp2[i]);
        loss2 += -clipped_surrogate(ratio2, adv, hyper.clip_epsilon);
        ent2 += ev2.entropy;
        gaussian_backward(model.actor2, ev2,
                          -surrogate_dlogp(ratio2, adv, hyper.clip_epsilon) / batch,
                          -hyper.entropy_coef / batch, grad2, grad2_log_std);
        ratio2_mean.add(ratio2);
        kl2_mean.add((ratio2 - 1.0) - (ev2.logprob - buffer.logp2[i]));

        ForwardCache cache;
        Vector joint(buffer.s1[i].size() + buffer.s2[i].size());
        joint << buffer.s1[i], buffer.s2[i];
        const double v = forward(model.critic, joint, &cache)[0];
        const double err = v - buffer.central.ret[i];
        loss_c += hyper.value_coef * err * err;
        Vector dv(1);
        dv[0] = hyper.value_coef * 2.0 * err / batch;
        backward(model.critic, cache, dv, grad_c);
      }

      loss1 /= batch;
      loss2 /= batch;
      loss_c /= batch;
      if (!std::isfinite(loss1) || !std::isfinite(loss2) || !std::isfinite(loss_c)) {
        report_divergence("hmppo update", epoch, start / hyper.minibatch_size, loss1, loss2,
                          loss_c);
      }

      clip_global_norm(gviews1, hyper.grad_clip_norm);
      adam_step(model.opt_actor1, params1, gviews1);
      clip_global_norm(gviews2, hyper.grad_clip_norm);
      adam_step(model.opt_actor2, params2, gviews2);
      model.actor2.clamp_log_std();
      clip_global_norm(gviews_c, hyper.grad_clip_norm);
      adam_step(model.opt_critic, params_c, gviews_c);

      loss1_mean.add(loss1);
      loss2_mean.add(loss2);
      loss_c_mean.add(loss_c);
      ent1_mean.add(ent1 / batch);
      ent2_mean.add(ent2 / batch);
    }
  }

  UpdateStats stats;
  stats.actor1_loss = loss1_mean.value();
  stats.actor2_loss = loss2_mean.value();
  stats.critic_loss = loss_c_mean.value();
  stats.entropy1 = ent1_mean.value();
  stats.entropy2 = ent2_mean.value();
  stats.mean_ratio1 = ratio1_mean.value();
  stats.mean_ratio2 = ratio2_mean.value();
  stats.approx_kl1 = kl1_mean.value();
  stats.approx_kl2 = kl2_mean.value();
  return stats;
}

PolicyPair deterministic_policy(const HmppoModel& model, const SystemConfig& config) {
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

EvalSummary summarize_episodes(const std::vector<EpisodeMetrics>& metrics) {
  EvalSummary s;
  std::vector<double> rewards, delays, perplexities, switches;
  for (const auto& m : metrics) {
    rewards.push_back(m.episodic_reward);
    delays.push_back(m.total_delay_min);
    perplexities.push_back(m.mean_perplexity);
    switches.push_back(static_cast<double>(m.switch_count));
  }
  s.reward_mean = mean(rewards);
  s.reward_std = sample_std(rewards);
  s.total_delay_min = mean(delays);
  s.mean_perplexity = mean(perplexities);
  s.emulator_switches = mean(switches);
  return s;
}

namespace detail {

TrainResult run_train_loop(const SystemConfig& config, const HyperParams& hyper,
                           std::uint64_t seed, const TrainOptions& options,
                           const LoopCallbacks& callbacks) {
  config.validate();
  hyper.validate();

  TrainResult result;
  Rng update_rng(mix_seed(seed, kUpdateStream));

  std::ofstream log_file;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    log_file.open(options.out_dir + "/log.csv");
    if (!log_file) throw std::runtime_error("cannot open log file in " + options.out_dir);
    log_file << train_log_header() << '\n';
    log_file.flush();
  }

  const long final_boundary = (hyper.total_steps / hyper.eval_interval) * hyper.eval_interval;
  long env_steps = 0;
  long episode_base = 0;
  long next_eval = hyper.eval_interval;

  while (env_steps < hyper.total_steps) {
    RolloutBuffer buffer = callbacks.collect(episode_base);
    episode_base += hyper.workers;
    UpdateStats stats;
    try {
      stats = callbacks.learn(buffer, update_rng);
    } catch (const UpdateDivergedError& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      break;
    }
    env_steps += static_cast<long>(buffer.size());

    while (next_eval <= env_steps && next_eval <= final_boundary) {
      std::unique_ptr<TraceWriter> trace;
      if (options.write_trace && next_eval == final_boundary && !options.out_dir.empty()) {
        trace = std::make_unique<TraceWriter>(options.out_dir + "/trace.csv");
      }
      const std::vector<EpisodeMetrics> metrics =
          run_episodes(config, callbacks.policy(), hyper.eval_episodes,
                       mix_seed(seed, kEvalStream, static_cast<std::uint64_t>(next_eval)),
                       trace ? trace->sink() : TraceSink{});
      const EvalSummary eval = summarize_episodes(metrics);

      TrainLogRow row;
      row.env_steps = next_eval;
      row.eval_reward_mean = eval.reward_mean;
      row.eval_reward_std = eval.reward_std;
      row.total_delay_min = eval.total_delay_min;
      row.mean_perplexity = eval.mean_perplexity;
      row.emulator_switches = eval.emulator_switches;
      row.actor1_loss = stats.actor1_loss;
      row.actor2_loss = stats.actor2_loss;
      row.critic_loss = stats.critic_loss;
      row.entropy1 = stats.entropy1;
      row.entropy2 = stats.entropy2;

      if (!std::isfinite(row.eval_reward_mean) || !std::isfinite(row.total_delay_min) ||
          !std::isfinite(row.mean_perplexity)) {
        result.aborted = true;
        result.abort_reason = "non-finite evaluation metrics at step " + std::to_string(next_eval);
        break;
      }

      result.log.push_back(row);
      if (log_file) {
        log_file << to_csv_line(row) << '\n';
        log_file.flush();
      }
      if (!options.out_dir.empty() && callbacks.save) {
        callbacks.save(options.out_dir + "/checkpoint", next_eval, update_rng);
      }
      next_eval += hyper.eval_interval;
    }
    if (result.aborted) break;
  }

  result.env_steps = env_steps;
  return result;
}

}  // namespace detail

TrainResult train_hmppo(const SystemConfig& config, const HyperParams& hyper, std::uint64_t seed,
                        const TrainOptions& options) {
  HmppoModel model = make_hmppo(config, hyper, seed);
  detail::LoopCallbacks callbacks;
  callbacks.collect = [&](long episode_base) {
    return collect_rollout(config, hmppo_samplers(model), hyper.workers, seed, episode_base,
                           options.thread_cap);
  };
  callbacks.learn = [&](RolloutBuffer& buffer, Rng& rng) {
    compute_gae(buffer, hyper.discount, hyper.gae_lambda, hyper.normalize_advantages);
    return update(model, buffer, hyper, rng);
  };
  callbacks.policy = [&] { return deterministic_policy(model, config); };
  callbacks.save = [&](const std::string& path, long env_steps, const Rng& update_rng) {
    save_checkpoint(path, to_checkpoint(model, config, hyper, env_steps, update_rng));
  };
  return detail::run_train_loop(config, hyper, seed, options, callbacks);
}

}  // namespace peat
