#include "peat/sysmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace peat {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_pair_ordered(const std::pair<double, double>& p, const char* name) {
  if (!(p.first > 0.0) || !(p.second >= p.first)) {
    throw std::invalid_argument(std::string(name) + " must satisfy 0 < lo <= hi");
  }
}

}  // namespace

void SystemConfig::validate() const {
  require(num_ues >= 1, "num_ues must be >= 1");
  require(tasks_per_ue >= 1, "tasks_per_ue must be >= 1");
  require(foundation_model_bits > 0.0, "foundation_model_bits must be positive");
  require(uplink_bandwidth_total > 0.0, "uplink_bandwidth_total must be positive");
  require(downlink_bandwidth_total > 0.0, "downlink_bandwidth_total must be positive");
  require(downlink_power_total > 0.0, "downlink_power_total must be positive");
  require(noise_psd > 0.0, "noise_psd must be positive");
  require(path_loss_exponent > 0.0, "path_loss_exponent must be positive");
  require(retention_min > 0.0 && retention_min < retention_max && retention_max <= 1.0,
          "retention bounds must satisfy 0 < retention_min < retention_max <= 1");
  require(complexity_weight > 0.0, "complexity_weight must be positive");
  require(reward_weight_perplexity < 0.0, "reward_weight_perplexity must be negative");
  require(reward_weight_delay < 0.0, "reward_weight_delay must be negative");
  require_pair_ordered(data_size_range_bits, "data_size_range_bits");
  require_pair_ordered(uplink_power_range, "uplink_power_range");
  require_pair_ordered(ue_distance_range, "ue_distance_range");
  require_pair_ordered(complexity_range, "complexity_range");
  require(fading_samples_per_task >= 1, "fading_samples_per_task must be >= 1");
  require(retention_match_tolerance >= 0.0, "retention_match_tolerance must be nonnegative");
}

double draw_channel_gain(double distance_m, double exponent, int num_samples, Rng& rng) {
  require(distance_m > 0.0, "distance_m must be positive");
  require(num_samples >= 1, "num_samples must be >= 1");
  double sum = 0.0;
  for (int i = 0; i < num_samples; ++i) sum += rng.exponential();
  return std::pow(distance_m, -exponent) * (sum / num_samples);
}

double uplink_bandwidth(double total_hz, int server_count) {
  require(total_hz > 0.0, "total_hz must be positive");
  if (server_count < 1) {
    throw std::logic_error("uplink_bandwidth called with no uploading UE");
  }
  return total_hz / server_count;
}

double uplink_rate(double bandwidth_hz, double power_w, double gain, double noise_psd) {
  require(bandwidth_hz > 0.0, "bandwidth_hz must be positive");
  require(power_w > 0.0, "power_w must be positive");
  require(gain > 0.0, "gain must be positive");
  require(noise_psd > 0.0, "noise_psd must be positive");
  return bandwidth_hz * std::log2(1.0 + power_w * gain / (noise_psd * bandwidth_hz));
}

double upload_delay(double data_bits, double rate_bps, int placement_bit) {
  require(data_bits >= 0.0, "data_bits must be nonnegative");
  require(placement_bit == 0 || placement_bit == 1, "placement_bit must be 0 or 1");
  if (placement_bit == 0) return 0.0;
  if (!(rate_bps > 0.0)) throw std::domain_error("upload rate must be positive");
  return data_bits / rate_bps;
}

int switch_indicator(const std::optional<double>& cached_retention, double proposed_retention,
                     double tolerance) {
  if (!cached_retention.has_value()) return 1;
  return std::abs(*cached_retention - proposed_retention) <= tolerance ? 0 : 1;
}

std::pair<double, double> downlink_shares(double total_bw_hz, double total_power_w,
                                          int downloader_count) {
  require(total_bw_hz > 0.0, "total_bw_hz must be positive");
  require(total_power_w > 0.0, "total_power_w must be positive");
  if (downloader_count < 1) {
    throw std::logic_error("downlink_shares called with no downloading UE");
  }
  return {total_bw_hz / downloader_count, total_power_w / downloader_count};
}

double download_delay(double retention, double foundation_bits, double downlink_rate_bps,
                      int indicator, int placement_bit) {
  require(retention >= 0.0, "retention must be nonnegative");
  require(foundation_bits >= 0.0, "foundation_bits must be nonnegative");
  require(indicator == 0 || indicator == 1, "indicator must be 0 or 1");
  require(placement_bit == 0 || placement_bit == 1, "placement_bit must be 0 or 1");
  if (indicator == 0 || placement_bit == 1) return 0.0;
  if (!(downlink_rate_bps > 0.0)) throw std::domain_error("download rate must be positive");
  return retention * foundation_bits / downlink_rate_bps;
}

double user_delay(double upload_s, double download_s, int placement_bit, int indicator) {
  require(upload_s >= 0.0, "upload_s must be nonnegative");
  require(download_s >= 0.0, "download_s must be nonnegative");
  return upload_s * placement_bit + download_s * indicator * (1 - placement_bit);
}

double emulator_accuracy(double retention, const std::array<double, 3>& coeffs) {
  require(retention > 0.0 && retention <= 1.0, "retention must be in (0, 1]");
  return coeffs[0] * retention * retention + coeffs[1] * retention + coeffs[2];
}

double task_perplexity(double retention, int placement_bit, double complexity, double iota,
                       const std::array<double, 3>& coeffs, bool inverse_scale) {
  require(complexity > 0.0, "complexity must be positive");
  require(iota > 0.0, "iota must be positive");
  require(placement_bit == 0 || placement_bit == 1, "placement_bit must be 0 or 1");
  const double base = placement_bit == 1 ? emulator_accuracy(1.0, coeffs)
                                         : emulator_accuracy(retention, coeffs);
  const double scale =
      inverse_scale ? iota / (complexity + iota) : (complexity + iota) / complexity;
  return base * scale;
}

std::pair<StepOutcome, CacheVector> step_system(const SystemConfig& config,
                                                const CacheVector& caches,
                                                const std::vector<TaskDraw>& tasks,
                                                const JointDecision& decision) {
  const int n = config.num_ues;
  require(static_cast<int>(caches.size()) == n, "caches length must equal num_ues");
  require(static_cast<int>(tasks.size()) == n, "tasks length must equal num_ues");
  require(static_cast<int>(decision.placement.size()) == n,
          "placement length must equal num_ues");
  require(static_cast<int>(decision.retention.size()) == n,
          "retention length must equal num_ues");
  for (int i = 0; i < n; ++i) {
    require(decision.placement[i] == 0 || decision.placement[i] == 1,
            "placement entries must be 0 or 1");
    require(decision.retention[i] >= config.retention_min &&
                decision.retention[i] <= config.retention_max,
            "retention entries must lie within [retention_min, retention_max]");
  }

  StepOutcome out;
  out.per_ue_delay_s.assign(n, 0.0);
  out.per_ue_upload_s.assign(n, 0.0);
  out.per_ue_download_s.assign(n, 0.0);
  out.per_ue_perplexity.assign(n, 0.0);
  out.switch_indicators.assign(n, 0);

  // Effective retention: near-matches snap onto the cached value so that a
  // reuse decision reproduces the cached emulator bit-for-bit.
  std::vector<double> effective(n, 0.0);
  int uploaders = 0;
  int downloaders = 0;
  for (int i = 0; i < n; ++i) {
    if (decision.placement[i] == 1) {
      out.switch_indicators[i] = 0;
      effective[i] = decision.retention[i];  // unused on the server path
      ++uploaders;
      continue;
    }
    const int ind =
        switch_indicator(caches[i], decision.retention[i], config.retention_match_tolerance);
    out.switch_indicators[i] = ind;
    effective[i] = ind == 0 ? *caches[i] : decision.retention[i];
    if (ind == 1) ++downloaders;
  }

  const double up_bw =
      uploaders > 0 ? uplink_bandwidth(config.uplink_bandwidth_total, uploaders) : 0.0;
  const auto [down_bw, down_pw] =
      downloaders > 0
          ? downlink_shares(config.downlink_bandwidth_total, config.downlink_power_total,
                            downloaders)
          : std::pair<double, double>{0.0, 0.0};

  double perplexity_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const int z = decision.placement[i];
    const int ind = out.switch_indicators[i];
    if (z == 1) {
      const double rate =
          uplink_rate(up_bw, tasks[i].uplink_power, tasks[i].avg_channel_gain, config.noise_psd);
      out.per_ue_upload_s[i] = upload_delay(tasks[i].data_size_bits, rate, 1);
    } else if (ind == 1) {
      const double rate =
          uplink_rate(down_bw, down_pw, tasks[i].avg_channel_gain, config.noise_psd);
      out.per_ue_download_s[i] =
          download_delay(effective[i], config.foundation_model_bits, rate, 1, 0);
    }
    out.per_ue_delay_s[i] = user_delay(out.per_ue_upload_s[i], out.per_ue_download_s[i], z, ind);
    out.per_ue_perplexity[i] =
        task_perplexity(effective[i], z, tasks[i].complexity, config.complexity_weight,
                        config.accuracy_poly, config.complexity_scale_inverse);
    perplexity_sum += out.per_ue_perplexity[i];
  }

  out.system_delay_s = *std::max_element(out.per_ue_delay_s.begin(), out.per_ue_delay_s.end());
  out.reward = config.reward_weight_perplexity * (perplexity_sum / n) +
               config.reward_weight_delay * out.system_delay_s;

  CacheVector updated = caches;
  for (int i = 0; i < n; ++i) {
    if (decision.placement[i] == 0 && out.switch_indicators[i] == 1) {
      updated[i] = effective[i];
    }
  }
  return {std::move(out), std::move(updated)};
}

}  // namespace peat
