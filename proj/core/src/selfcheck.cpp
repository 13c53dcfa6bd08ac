#include "peat/selfcheck.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "peat/hmppo.hpp"
#include "peat/nn.hpp"
#include "peat/sysmodel.hpp"

namespace peat {

namespace {

std::string format_err(double err) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max error %.3g", err);
  return buf;
}

double rel_err(double actual, double expected) {
  return std::abs(actual - expected) / std::max({std::abs(actual), std::abs(expected), 1e-300});
}

// ---- formula oracles ---------------------------------------------------

// Independent route for the Shannon form: log1p / ln 2 instead of log2.
double oracle_rate(double bw, double power, double gain, double noise_psd) {
  return bw * std::log1p(power * gain / (noise_psd * bw)) / std::log(2.0);
}

CheckResult check_formula_oracles() {
  double max_err = 0.0;
  auto track = [&max_err](double actual, double expected) {
    max_err = std::max(max_err, rel_err(actual, expected));
  };

  // uplink rate at the pinned inputs (SNR = 5e10)
  track(uplink_rate(2.5e4, 0.5, 1e-5, 4e-21), oracle_rate(2.5e4, 0.5, 1e-5, 4e-21));
  // upload delay at a pinned rate
  track(upload_delay(3.2e9, 8.8858e5, 1), 3.2e9 / 8.8858e5);
  // download delay with the rate built from the single-downloader shares
  {
    const double rate = uplink_rate(1e6, 60.0, 1e-5, 4e-21);
    track(rate, oracle_rate(1e6, 60.0, 1e-5, 4e-21));
    track(download_delay(0.5, 8.64e10, rate, 1, 0), 0.5 * 8.64e10 / oracle_rate(1e6, 60.0, 1e-5, 4e-21));
  }
  // task perplexity compositions
  {
    const std::array<double, 3> poly{25.2, -43.1, 31.9};
    const auto f = [&poly](double e) { return poly[0] * e * e + poly[1] * e + poly[2]; };
    track(task_perplexity(0.8, 0, 10.0, 10.0, poly), f(0.8) * 2.0);
    track(task_perplexity(0.8, 1, 10.0, 10.0, poly), f(1.0) * 2.0);
  }
  // composed system step: one UE uploads at the pinned channel draw
  {
    SystemConfig cfg;
    cfg.num_ues = 1;
    cfg.uplink_bandwidth_total = 2.5e4;
    CacheVector caches{std::nullopt};
    TaskDraw task;
    task.complexity = 10.0;
    task.data_size_bits = 3.2e9;
    task.avg_channel_gain = 1e-5;
    task.uplink_power = 0.5;
    JointDecision decision{{1}, {0.5}};
    const auto [outcome, updated] = step_system(cfg, caches, {task}, decision);
    const double delay = 3.2e9 / oracle_rate(2.5e4, 0.5, 1e-5, 4e-21);
    const double kappa = (25.2 - 43.1 + 31.9) * 2.0;
    track(outcome.system_delay_s, delay);
    track(outcome.reward, -0.1 * kappa - 0.001 * delay);
    if (updated[0].has_value()) {
      return {"formula oracles", false, "server placement must leave the cache unchanged"};
    }
  }
  // two local UEs reusing their caches: zero delay, reward from perplexity only
  {
    SystemConfig cfg;
    cfg.num_ues = 2;
    CacheVector caches{0.8, 0.8};
    std::vector<TaskDraw> tasks(2);
    for (auto& t : tasks) {
      t.complexity = 10.0;
      t.data_size_bits = 3.2e9;
      t.avg_channel_gain = 1e-5;
      t.uplink_power = 0.5;
    }
    JointDecision decision{{0, 0}, {0.8, 0.8}};
    const auto [outcome, updated] = step_system(cfg, caches, tasks, decision);
    const double kappa = (25.2 * 0.64 - 43.1 * 0.8 + 31.9) * 2.0;
    track(outcome.system_delay_s, 0.0);
    track(outcome.reward, -0.1 * kappa);
  }

  return {"formula oracles", max_err < 1e-9, format_err(max_err)};
}

CheckResult check_polynomial_anchors() {
  const std::array<double, 3> poly{25.2, -43.1, 31.9};
  double max_err = 0.0;
  max_err = std::max(max_err, std::abs(emulator_accuracy(0.2, poly) - 24.288));
  max_err = std::max(max_err, std::abs(emulator_accuracy(0.8, poly) - 13.548));
  max_err = std::max(max_err, std::abs(emulator_accuracy(1.0, poly) - 14.0));
  return {"polynomial anchors", max_err < 1e-12, format_err(max_err)};
}

// ---- gradient checks ----------------------------------------------------

// Central finite differences of a scalar function over every parameter view.
double max_gradcheck_error(ParamViews params, const ParamViews& grads,
                           const std::function<double()>& value_fn) {
  const double h = 1e-5;
  double max_err = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (Eigen::Index i = 0; i < params[t].size(); ++i) {
      const double saved = params[t][i];
      params[t][i] = saved + h;
      const double up = value_fn();
      params[t][i] = saved - h;
      const double down = value_fn();
      params[t][i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = grads[t][i];
      const double err =
          std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6});
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

CheckResult check_gradients() {
  Rng rng(20240521);
  double max_err = 0.0;
  const int instances = 20;

  for (int inst = 0; inst < instances; ++inst) {
    // Bernoulli head: gradient of logprob at random bits
    {
      BernoulliHead head;
      head.logits_net = make_mlp({5, 8, 8, 3}, rng);
      Vector state(5);
      for (int i = 0; i < 5; ++i) state[i] = rng.uniform(-1.0, 1.0);
      std::vector<int> bits{rng.bernoulli(0.5) ? 1 : 0, rng.bernoulli(0.5) ? 1 : 0,
                            rng.bernoulli(0.5) ? 1 : 0};
      MlpGrad grad = zero_grad_like(head.logits_net);
      bernoulli_backward(head, logprob_of(head, state, bits), 1.0, 0.0, grad);
      max_err = std::max(
          max_err, max_gradcheck_error(param_views(head.logits_net), param_views(grad), [&] {
            return logprob_of(head, state, bits).logprob;
          }));
    }
    // Gaussian head: gradient of logprob at a random in-bounds action
    {
      GaussianHead head;
      head.mean_net = make_mlp({4, 8, 2}, rng);
      head.log_std = Vector::Zero(2);
      head.log_std[0] = rng.uniform(-1.0, 0.5);
      head.log_std[1] = rng.uniform(-1.0, 0.5);
      Vector state(4);
      for (int i = 0; i < 4; ++i) state[i] = rng.uniform(-1.0, 1.0);
      const double lo = 0.2, hi = 0.8;
      std::vector<double> action{rng.uniform(lo + 0.05, hi - 0.05),
                                 rng.uniform(lo + 0.05, hi - 0.05)};
      MlpGrad mean_grad = zero_grad_like(head.mean_net);
      Vector log_std_grad = Vector::Zero(2);
      gaussian_backward(head, logprob_of(head, state, action, lo, hi), 1.0, 0.0, mean_grad,
                        log_std_grad);
      ParamViews params = param_views(head.mean_net);
      params.emplace_back(head.log_std.data(), head.log_std.size());
      ParamViews grads = param_views(mean_grad);
      grads.emplace_back(log_std_grad.data(), log_std_grad.size());
      max_err = std::max(max_err, max_gradcheck_error(params, grads, [&] {
                           return logprob_of(head, state, action, lo, hi).logprob;
                         }));
    }
    // critic network: gradient of the squared value error
    {
      Mlp critic = make_mlp({6, 8, 8, 1}, rng);
      Vector state(6);
      for (int i = 0; i < 6; ++i) state[i] = rng.uniform(-1.0, 1.0);
      const double target = rng.uniform(-2.0, 2.0);
      auto loss = [&] {
        const double v = forward(critic, state)[0];
        return (v - target) * (v - target);
      };
      ForwardCache cache;
      const double v = forward(critic, state, &cache)[0];
      MlpGrad grad = zero_grad_like(critic);
      Vector dv(1);
      dv[0] = 2.0 * (v - target);
      backward(critic, cache, dv, grad);
      max_err = std::max(max_err,
                         max_gradcheck_error(param_views(critic), param_views(grad), loss));
    }
  }

  return {"gradient checks", max_err < 1e-4, format_err(max_err)};
}

// ---- GAE equivalence ----------------------------------------------------

// Explicit truncated-sum form, evaluated independently of the recursion.
std::vector<double> explicit_gae(const std::vector<double>& rewards,
                                 const std::vector<std::uint8_t>& dones,
                                 const std::vector<double>& values, double discount,
                                 double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const bool terminal = dones[t] || t + 1 == n;
    delta[t] = rewards[t] + discount * (terminal ? 0.0 : values[t + 1]) - values[t];
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double weight = 1.0;
    for (std::size_t j = t; j < n; ++j) {
      adv[t] += weight * delta[j];
      if (dones[j]) break;
      weight *= discount * lambda;
    }
  }
  return adv;
}

CheckResult check_gae_equivalence() {
  Rng rng(777);
  double max_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 10.0);
    std::vector<double> rewards(n), values(n);
    std::vector<std::uint8_t> dones(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      rewards[i] = rng.uniform(-2.0, 2.0);
      values[i] = rng.uniform(-2.0, 2.0);
      dones[i] = rng.bernoulli(0.2) ? 1 : 0;
    }
    dones[n - 1] = 1;
    const double discount = rng.uniform(0.5, 1.0);
    const double lambda = rng.uniform(0.0, 1.0) < 0.1 ? 1.0 : rng.uniform(0.1, 1.0);

    ValueSeries series;
    series.value = values;
    compute_gae(rewards, dones, series, discount, lambda, false);
    const auto expected = explicit_gae(rewards, dones, values, discount, lambda);
    for (std::size_t i = 0; i < n; ++i) {
      max_err = std::max(max_err, std::abs(series.advantage[i] - expected[i]));
    }

    // lambda = 0 collapses to the one-step TD residual
    ValueSeries td;
    td.value = values;
    compute_gae(rewards, dones, td, discount, 0.0, false);
    for (std::size_t i = 0; i < n; ++i) {
      const bool terminal = dones[i] || i + 1 == n;
      const double delta = rewards[i] + discount * (terminal ? 0.0 : values[i + 1]) - values[i];
      max_err = std::max(max_err, std::abs(td.advantage[i] - delta));
    }

    // gamma = lambda = 1 telescopes to reward-to-go minus the baseline
    ValueSeries mc;
    mc.value = values;
    compute_gae(rewards, dones, mc, 1.0, 1.0, false);
    double tail = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      if (dones[k]) tail = 0.0;
      tail += rewards[k];
      max_err = std::max(max_err, std::abs(mc.advantage[k] - (tail - values[k])));
    }
  }
  return {"gae equivalence", max_err < 1e-12, format_err(max_err)};
}

// ---- probability normalization -------------------------------------------

CheckResult check_probability_normalization() {
  Rng rng(4242);
  double max_err = 0.0;

  // discrete: enumerate all 2^N outcomes, N = 10
  {
    const int n = 10;
    BernoulliHead head;
    head.logits_net = make_mlp({3, 8, n}, rng);
    Vector state(3);
    for (int i = 0; i < 3; ++i) state[i] = rng.uniform(-1.0, 1.0);
    double total = 0.0;
    std::vector<int> bits(n);
    for (int mask = 0; mask < (1 << n); ++mask) {
      for (int i = 0; i < n; ++i) bits[i] = (mask >> i) & 1;
      total += std::exp(logprob_of(head, state, bits).logprob);
    }
    max_err = std::max(max_err, std::abs(total - 1.0));
    if (std::abs(total - 1.0) > 1e-9) {
      return {"probability normalization", false, "enumeration sum " + std::to_string(total)};
    }
  }

  // continuous: composite Simpson over the squashed support, N = 1
  for (int inst = 0; inst < 3; ++inst) {
    GaussianHead head;
    head.mean_net = make_mlp({2, 8, 1}, rng);
    head.log_std = Vector::Constant(1, rng.uniform(-0.7, 0.3));
    Vector state(2);
    state[0] = rng.uniform(-1.0, 1.0);
    state[1] = rng.uniform(-1.0, 1.0);
    const double lo = 0.2, hi = 0.8;
    const int panels = 200000;  // even
    const double a = lo + 1e-9, b = hi - 1e-9;
    const double h = (b - a) / panels;
    auto density = [&](double x) {
      return std::exp(logprob_of(head, state, {x}, lo, hi).logprob);
    };
    double sum = density(a) + density(b);
    for (int i = 1; i < panels; ++i) {
      sum += density(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    const double integral = sum * h / 3.0;
    max_err = std::max(max_err, std::abs(integral - 1.0));
  }

  return {"probability normalization", max_err < 1e-6, format_err(max_err)};
}

// ---- invariant fuzzing ----------------------------------------------------

CheckResult check_invariant_fuzzing() {
  Rng rng(987654321);
  const int trials = 10000;
  for (int trial = 0; trial < trials; ++trial) {
    SystemConfig cfg;
    cfg.num_ues = 2 + static_cast<int>(rng.uniform() * 7.0);
    const int n = cfg.num_ues;

    CacheVector caches(n);
    std::vector<TaskDraw> tasks(n);
    JointDecision decision;
    decision.placement.resize(n);
    decision.retention.resize(n);
    for (int i = 0; i < n; ++i) {
      if (rng.bernoulli(0.5)) caches[i] = rng.uniform(cfg.retention_min, cfg.retention_max);
      tasks[i].complexity = rng.uniform(1.0, 10.0);
      tasks[i].data_size_bits = rng.uniform(2.4e9, 4.0e9);
      tasks[i].uplink_power = rng.uniform(0.2, 1.0);
      tasks[i].avg_channel_gain = rng.uniform(1e-6, 1e-4);
      decision.placement[i] = rng.bernoulli(0.5) ? 1 : 0;
      // occasionally propose exactly the cached value to exercise reuse
      decision.retention[i] = (caches[i].has_value() && rng.bernoulli(0.3))
                                  ? *caches[i]
                                  : rng.uniform(cfg.retention_min, cfg.retention_max);
    }

    const auto [outcome, updated] = step_system(cfg, caches, tasks, decision);

    int uploaders = 0, downloaders = 0;
    for (int i = 0; i < n; ++i) {
      const int z = decision.placement[i];
      const int ind = outcome.switch_indicators[i];
      if (z == 1 && ind != 0) {
        return {"invariant fuzzing", false, "indicator nonzero under server placement"};
      }
      if (outcome.per_ue_upload_s[i] > 0.0 && outcome.per_ue_download_s[i] > 0.0) {
        return {"invariant fuzzing", false, "upload and download both nonzero"};
      }
      if (z == 0 && ind == 0 && outcome.per_ue_delay_s[i] != 0.0) {
        return {"invariant fuzzing", false, "cache reuse did not cost exactly zero"};
      }
      if (z == 1) ++uploaders;
      if (z == 0 && ind == 1) ++downloaders;
    }
    if (uploaders > 0) {
      const double share = uplink_bandwidth(cfg.uplink_bandwidth_total, uploaders);
      double total = 0.0;
      for (int i = 0; i < uploaders; ++i) total += share;
      if (rel_err(total, cfg.uplink_bandwidth_total) > 1e-12) {
        return {"invariant fuzzing", false, "uplink bandwidth not conserved"};
      }
    }
    if (downloaders > 0) {
      const auto [bw, pw] =
          downlink_shares(cfg.downlink_bandwidth_total, cfg.downlink_power_total, downloaders);
      double total_bw = 0.0, total_pw = 0.0;
      for (int i = 0; i < downloaders; ++i) {
        total_bw += bw;
        total_pw += pw;
      }
      if (rel_err(total_bw, cfg.downlink_bandwidth_total) > 1e-12 ||
          rel_err(total_pw, cfg.downlink_power_total) > 1e-12) {
        return {"invariant fuzzing", false, "downlink resources not conserved"};
      }
    }
  }
  std::ostringstream os;
  os << trials << " random decisions";
  return {"invariant fuzzing", true, os.str()};
}

}  // namespace

std::vector<CheckResult> run_selfcheck() {
  std::vector<CheckResult> results;
  results.push_back(check_formula_oracles());
  results.push_back(check_polynomial_anchors());
  results.push_back(check_gradients());
  results.push_back(check_gae_equivalence());
  results.push_back(check_probability_normalization());
  results.push_back(check_invariant_fuzzing());
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return true;
}

}  // namespace peat
