#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "peat/rng.hpp"

namespace peat {

// All physical and scenario constants of the tuning-orchestration scenario.
// Units are SI throughout: Hz, W, W/Hz, bits, seconds, meters.
struct SystemConfig {
  int num_ues = 8;                          // N
  int tasks_per_ue = 50;                    // T
  double foundation_model_bits = 8.64e10;   // 10.8 GB at 1 GB = 1e9 bytes
  double uplink_bandwidth_total = 1e5;      // Hz, shared by uploading UEs
  double downlink_bandwidth_total = 1e6;    // Hz, shared by downloading UEs
  double downlink_power_total = 60.0;       // W, shared by downloading UEs
  double noise_psd = 4e-21;                 // W/Hz
  double path_loss_exponent = 2.0;
  double retention_min = 0.2;
  double retention_max = 0.8;
  double complexity_weight = 10.0;          // iota
  std::array<double, 3> accuracy_poly{25.2, -43.1, 31.9};  // a, b, c0
  double reward_weight_perplexity = -0.1;
  double reward_weight_delay = -0.001;      // per second
  std::pair<double, double> data_size_range_bits{2.4e9, 4.0e9};  // 300-500 MB
  std::pair<double, double> uplink_power_range{0.2, 1.0};        // W
  std::pair<double, double> ue_distance_range{100.0, 500.0};     // m
  std::pair<double, double> complexity_range{1.0, 10.0};
  int fading_samples_per_task = 100;        // M
  double retention_match_tolerance = 0.01;  // tau_E
  // When true, perplexity scales by iota/(c+iota) instead of (c+iota)/c.
  bool complexity_scale_inverse = false;

  // Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

// One task as seen by the channel and accuracy model.
struct TaskDraw {
  double complexity = 1.0;       // c, dimensionless
  double data_size_bits = 0.0;   // D
  double avg_channel_gain = 0.0; // h, path loss x mean small-scale power gain
  double uplink_power = 0.0;     // W
};

// One step's joint action: per-UE placement bit (1 = server, 0 = local) and
// proposed emulator retention.
struct JointDecision {
  std::vector<int> placement;
  std::vector<double> retention;
};

// Full outcome of one system step. Upload/download components are kept so
// callers can trace and audit the mask structure of the per-UE delay.
struct StepOutcome {
  std::vector<double> per_ue_delay_s;
  std::vector<double> per_ue_upload_s;
  std::vector<double> per_ue_download_s;
  double system_delay_s = 0.0;  // max over UEs
  std::vector<double> per_ue_perplexity;
  std::vector<int> switch_indicators;
  double reward = 0.0;
};

// Per-UE cached emulator retention; empty = no emulator downloaded yet.
using CacheVector = std::vector<std::optional<double>>;

// Average channel power gain for one task: distance^(-exponent) times the
// mean of num_samples unit-mean exponential small-scale draws.
double draw_channel_gain(double distance_m, double exponent, int num_samples, Rng& rng);

// Equal split of the uplink bandwidth across uploading UEs.
double uplink_bandwidth(double total_hz, int server_count);

// Shannon-form achievable rate in bits/s.
double uplink_rate(double bandwidth_hz, double power_w, double gain, double noise_psd);

// Data-upload time; zero when the task stays local.
double upload_delay(double data_bits, double rate_bps, int placement_bit);

// 1 when a local-training UE must fetch a different emulator than cached,
// 0 when the cached one matches within tolerance (caller then snaps the
// proposal onto the cache). An empty cache always forces a download.
int switch_indicator(const std::optional<double>& cached_retention, double proposed_retention,
                     double tolerance);

// Equal split of downlink bandwidth and power across downloading UEs.
std::pair<double, double> downlink_shares(double total_bw_hz, double total_power_w,
                                          int downloader_count);

// Emulator-download time; zero when cached or when training on the server.
double download_delay(double retention, double foundation_bits, double downlink_rate_bps,
                      int indicator, int placement_bit);

// Per-UE delay; the component terms already carry the placement/indicator
// masks, so under composed use this is just their sum.
double user_delay(double upload_s, double download_s, int placement_bit, int indicator);

// Fitted retention-to-perplexity polynomial a*E^2 + b*E + c0.
double emulator_accuracy(double retention, const std::array<double, 3>& coeffs);

// Task perplexity: full-model accuracy on the server, emulator accuracy
// locally, scaled by (c+iota)/c (or iota/(c+iota) when inverse_scale).
double task_perplexity(double retention, int placement_bit, double complexity, double iota,
                       const std::array<double, 3>& coeffs, bool inverse_scale = false);

// One full system step: switch indicators against the caches (near-matches
// snapped onto the cache), shared-resource rate allocation, per-UE delays
// and perplexities, global reward, and the updated caches.
std::pair<StepOutcome, CacheVector> step_system(const SystemConfig& config,
                                                const CacheVector& caches,
                                                const std::vector<TaskDraw>& tasks,
                                                const JointDecision& decision);

}  // namespace peat
