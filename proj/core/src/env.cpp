#include "peat/env.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace peat {

Episode::Episode(const SystemConfig& config, std::uint64_t seed)
    : config_(config), rng_(seed) {
  config_.validate();
  const int n = config_.num_ues;
  distances_.resize(n);
  for (int i = 0; i < n; ++i) {
    distances_[i] = rng_.uniform(config_.ue_distance_range.first, config_.ue_distance_range.second);
  }
  // Sentinel previous-task gains for t = 1: one fresh channel draw per UE.
  prev_gains_.resize(n);
  for (int i = 0; i < n; ++i) {
    prev_gains_[i] = draw_channel_gain(distances_[i], config_.path_loss_exponent,
                                       config_.fading_samples_per_task, rng_);
  }
  caches_.assign(n, std::nullopt);
  draw_tasks();
  rebuild_agent1_state();
}

void Episode::draw_tasks() {
  const int n = config_.num_ues;
  tasks_.resize(n);
  for (int i = 0; i < n; ++i) {
    TaskDraw& task = tasks_[i];
    task.complexity =
        rng_.uniform(config_.complexity_range.first, config_.complexity_range.second);
    task.data_size_bits =
        rng_.uniform(config_.data_size_range_bits.first, config_.data_size_range_bits.second);
    task.uplink_power =
        rng_.uniform(config_.uplink_power_range.first, config_.uplink_power_range.second);
    task.avg_channel_gain = draw_channel_gain(distances_[i], config_.path_loss_exponent,
                                              config_.fading_samples_per_task, rng_);
  }
}

void Episode::rebuild_agent1_state() {
  const int n = config_.num_ues;
  state1_.slots.resize(4 * n);
  for (int i = 0; i < n; ++i) {
    state1_.slots[i] = prev_gains_[i];
    state1_.slots[n + i] = tasks_[i].complexity;
    state1_.slots[2 * n + i] = tasks_[i].data_size_bits;
    state1_.slots[3 * n + i] = caches_[i].value_or(0.0);
  }
}

AgentTwoState Episode::observe_agent2(const std::vector<int>& a1) const {
  const int n = config_.num_ues;
  if (static_cast<int>(a1.size()) != n) {
    throw std::invalid_argument("agent-1 action length must equal num_ues");
  }
  for (int bit : a1) {
    if (bit != 0 && bit != 1) throw std::invalid_argument("agent-1 action bits must be 0 or 1");
  }
  AgentTwoState s;
  s.slots.resize(3 * n);
  for (int i = 0; i < n; ++i) {
    s.slots[i] = caches_[i].value_or(0.0);
    s.slots[n + i] = static_cast<double>(a1[i]);
    s.slots[2 * n + i] = tasks_[i].complexity;
  }
  return s;
}

StepResult Episode::step(const JointDecision& decision) {
  if (done()) throw std::logic_error("step called on a finished episode");

  auto [outcome, updated] = step_system(config_, caches_, tasks_, decision);

  if (trace_) {
    for (int i = 0; i < config_.num_ues; ++i) {
      TraceRecord rec;
      rec.episode = episode_id_;
      rec.t = t_;
      rec.n = i;
      rec.z = decision.placement[i];
      rec.e_proposed = decision.retention[i];
      rec.e_cached = caches_[i].value_or(0.0);
      rec.indicator = outcome.switch_indicators[i];
      rec.d_up_s = outcome.per_ue_upload_s[i];
      rec.d_down_s = outcome.per_ue_download_s[i];
      rec.kappa = outcome.per_ue_perplexity[i];
      rec.reward_step = outcome.reward;
      trace_(rec);
    }
  }

  caches_ = std::move(updated);
  total_delay_s_ += outcome.system_delay_s;
  for (double kappa : outcome.per_ue_perplexity) perplexity_sum_ += kappa;
  for (int ind : outcome.switch_indicators) switch_count_ += ind;
  reward_sum_ += outcome.reward;

  for (int i = 0; i < config_.num_ues; ++i) prev_gains_[i] = tasks_[i].avg_channel_gain;
  ++t_;
  draw_tasks();
  rebuild_agent1_state();

  StepResult result;
  result.next_state = state1_;
  result.reward = outcome.reward;
  result.done = done();
  result.outcome = std::move(outcome);
  return result;
}

EpisodeMetrics Episode::metrics() const {
  if (!done()) throw std::logic_error("metrics requested before the episode finished");
  EpisodeMetrics m;
  m.total_delay_min = total_delay_s_ / 60.0;
  m.mean_perplexity =
      perplexity_sum_ / (static_cast<double>(config_.num_ues) * config_.tasks_per_ue);
  m.switch_count = switch_count_;
  m.episodic_reward = reward_sum_;
  return m;
}

StateScales StateScales::from(const SystemConfig& config) {
  StateScales s;
  s.gain_scale = std::pow(config.ue_distance_range.first, -config.path_loss_exponent);
  s.data_scale = config.data_size_range_bits.second;
  s.complexity_scale = config.complexity_range.second;
  return s;
}

StateVector normalize_agent1(const AgentOneState& state, int num_ues, const StateScales& scales) {
  if (static_cast<int>(state.slots.size()) != 4 * num_ues) {
    throw std::invalid_argument("agent-1 state length must be 4N");
  }
  StateVector out(state.slots.size());
  for (int i = 0; i < num_ues; ++i) {
    out[i] = state.slots[i] / scales.gain_scale;
    out[num_ues + i] = state.slots[num_ues + i] / scales.complexity_scale;
    out[2 * num_ues + i] = state.slots[2 * num_ues + i] / scales.data_scale;
    out[3 * num_ues + i] = state.slots[3 * num_ues + i];
  }
  return out;
}

StateVector normalize_agent2(const AgentTwoState& state, int num_ues, const StateScales& scales) {
  if (static_cast<int>(state.slots.size()) != 3 * num_ues) {
    throw std::invalid_argument("agent-2 state length must be 3N");
  }
  StateVector out(state.slots.size());
  for (int i = 0; i < num_ues; ++i) {
    out[i] = state.slots[i];
    out[num_ues + i] = state.slots[num_ues + i];
    out[2 * num_ues + i] = state.slots[2 * num_ues + i] / scales.complexity_scale;
  }
  return out;
}

std::vector<EpisodeMetrics> run_episodes(const SystemConfig& config, const PolicyPair& policy,
                                         int episodes, std::uint64_t seed_base,
                                         const TraceSink& trace) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  const StateScales scales = StateScales::from(config);
  std::vector<EpisodeMetrics> out;
  out.reserve(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    Episode episode(config, mix_seed(seed_base, ep));
    if (trace) episode.set_trace(trace, ep);
    while (!episode.done()) {
      const StateVector s1 = normalize_agent1(episode.agent1_state(), config.num_ues, scales);
      JointDecision decision;
      decision.placement = policy.placement(s1);
      const StateVector s2 =
          normalize_agent2(episode.observe_agent2(decision.placement), config.num_ues, scales);
      decision.retention = policy.retention(s2);
      episode.step(decision);
    }
    out.push_back(episode.metrics());
  }
  return out;
}

struct TraceWriter::Impl {
  std::ofstream file;
};

TraceWriter::TraceWriter(const std::string& path) : impl_(new Impl) {
  impl_->file.open(path);
  if (!impl_->file) throw std::runtime_error("cannot open trace file: " + path);
  impl_->file << header() << '\n';
}

TraceWriter::~TraceWriter() { delete impl_; }

const char* TraceWriter::header() {
  return "episode,t,n,z,E_proposed,E_cached,I,d_up_s,d_down_s,kappa,reward_step";
}

void TraceWriter::write(const TraceRecord& rec) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%.9g,%.9g,%d,%.9g,%.9g,%.9g,%.9g", rec.episode,
                rec.t, rec.n, rec.z, rec.e_proposed, rec.e_cached, rec.indicator, rec.d_up_s,
                rec.d_down_s, rec.kappa, rec.reward_step);
  impl_->file << buf << '\n';
}

TraceSink TraceWriter::sink() {
  return [this](const TraceRecord& rec) { write(rec); };
}

}  // namespace peat
