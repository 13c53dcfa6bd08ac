#include "peat/config_io.hpp"

#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace peat {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("value for key '" + key + "' is not a number: " + text);
  }
}

long parse_long(const std::string& text, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("value for key '" + key + "' is not an integer: " + text);
  }
}

namespace {

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("value for key '" + key + "' is not a boolean: " + text);
}

std::vector<double> parse_list(const std::string& text, const std::string& key,
                               std::size_t expected) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, key));
  if (out.size() != expected) {
    throw std::invalid_argument("key '" + key + "' expects " + std::to_string(expected) +
                                " comma-separated values, got " + std::to_string(out.size()));
  }
  return out;
}

std::string format_pair(const std::pair<double, double>& p) {
  return format_double(p.first) + "," + format_double(p.second);
}

template <typename T>
struct Field {
  std::string key;
  std::function<std::string(const T&)> get;
  std::function<void(T&, const std::string&)> set;
};

template <typename T>
const Field<T>* find_field(const std::vector<Field<T>>& fields, const std::string& key) {
  for (const auto& f : fields) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

std::vector<Field<SystemConfig>> system_config_fields() {
  using C = SystemConfig;
  auto dbl = [](double C::* member) {
    return Field<C>{"",
                    [member](const C& c) { return format_double(c.*member); },
                    [member](C& c, const std::string& v) { c.*member = parse_double(v, ""); }};
  };
  auto pair_field = [](std::pair<double, double> C::* member) {
    return Field<C>{
        "", [member](const C& c) { return format_pair(c.*member); },
        [member](C& c, const std::string& v) {
          auto vals = parse_list(v, "", 2);
          c.*member = {vals[0], vals[1]};
        }};
  };
  std::vector<Field<C>> fields;
  auto add = [&fields](std::string key, Field<C> f) {
    f.key = std::move(key);
    fields.push_back(std::move(f));
  };
  add("num_ues", {"",
                  [](const C& c) { return std::to_string(c.num_ues); },
                  [](C& c, const std::string& v) { c.num_ues = static_cast<int>(parse_long(v, "num_ues")); }});
  add("tasks_per_ue", {"",
                       [](const C& c) { return std::to_string(c.tasks_per_ue); },
                       [](C& c, const std::string& v) {
                         c.tasks_per_ue = static_cast<int>(parse_long(v, "tasks_per_ue"));
                       }});
  add("foundation_model_bits", dbl(&C::foundation_model_bits));
  add("uplink_bandwidth_total", dbl(&C::uplink_bandwidth_total));
  add("downlink_bandwidth_total", dbl(&C::downlink_bandwidth_total));
  add("downlink_power_total", dbl(&C::downlink_power_total));
  add("noise_psd", dbl(&C::noise_psd));
  add("path_loss_exponent", dbl(&C::path_loss_exponent));
  add("retention_min", dbl(&C::retention_min));
  add("retention_max", dbl(&C::retention_max));
  add("complexity_weight", dbl(&C::complexity_weight));
  add("accuracy_poly", {"",
                        [](const C& c) {
                          return format_double(c.accuracy_poly[0]) + "," +
                                 format_double(c.accuracy_poly[1]) + "," +
                                 format_double(c.accuracy_poly[2]);
                        },
                        [](C& c, const std::string& v) {
                          auto vals = parse_list(v, "accuracy_poly", 3);
                          c.accuracy_poly = {vals[0], vals[1], vals[2]};
                        }});
  add("reward_weight_perplexity", dbl(&C::reward_weight_perplexity));
  add("reward_weight_delay", dbl(&C::reward_weight_delay));
  add("data_size_range_bits", pair_field(&C::data_size_range_bits));
  add("uplink_power_range", pair_field(&C::uplink_power_range));
  add("ue_distance_range", pair_field(&C::ue_distance_range));
  add("complexity_range", pair_field(&C::complexity_range));
  add("fading_samples_per_task",
      {"",
       [](const C& c) { return std::to_string(c.fading_samples_per_task); },
       [](C& c, const std::string& v) {
         c.fading_samples_per_task = static_cast<int>(parse_long(v, "fading_samples_per_task"));
       }});
  add("retention_match_tolerance", dbl(&C::retention_match_tolerance));
  add("complexity_scale_inverse",
      {"",
       [](const C& c) { return c.complexity_scale_inverse ? "true" : "false"; },
       [](C& c, const std::string& v) {
         c.complexity_scale_inverse = parse_bool(v, "complexity_scale_inverse");
       }});
  return fields;
}

std::vector<Field<HyperParams>> hyper_params_fields() {
  using H = HyperParams;
  auto dbl = [](double H::* member) {
    return Field<H>{"",
                    [member](const H& h) { return format_double(h.*member); },
                    [member](H& h, const std::string& v) { h.*member = parse_double(v, ""); }};
  };
  auto integer = [](int H::* member) {
    return Field<H>{"",
                    [member](const H& h) { return std::to_string(h.*member); },
                    [member](H& h, const std::string& v) {
                      h.*member = static_cast<int>(parse_long(v, ""));
                    }};
  };
  std::vector<Field<H>> fields;
  auto add = [&fields](std::string key, Field<H> f) {
    f.key = std::move(key);
    fields.push_back(std::move(f));
  };
  add("discount", dbl(&H::discount));
  add("gae_lambda", dbl(&H::gae_lambda));
  add("clip_epsilon", dbl(&H::clip_epsilon));
  add("actor_lr", dbl(&H::actor_lr));
  add("critic_lr", dbl(&H::critic_lr));
  add("epochs_per_update", integer(&H::epochs_per_update));
  add("minibatch_size", integer(&H::minibatch_size));
  add("workers", integer(&H::workers));
  add("entropy_coef", dbl(&H::entropy_coef));
  add("value_coef", dbl(&H::value_coef));
  add("grad_clip_norm", dbl(&H::grad_clip_norm));
  add("total_steps", {"",
                      [](const H& h) { return std::to_string(h.total_steps); },
                      [](H& h, const std::string& v) { h.total_steps = parse_long(v, "total_steps"); }});
  add("eval_interval", integer(&H::eval_interval));
  add("eval_episodes", integer(&H::eval_episodes));
  add("normalize_advantages",
      {"",
       [](const H& h) { return h.normalize_advantages ? "true" : "false"; },
       [](H& h, const std::string& v) {
         h.normalize_advantages = parse_bool(v, "normalize_advantages");
       }});
  add("hidden_units", integer(&H::hidden_units));
  add("hidden_layers", integer(&H::hidden_layers));
  add("init_log_std", dbl(&H::init_log_std));
  return fields;
}

template <typename T>
std::vector<KeyValue> collect_key_values(const std::vector<Field<T>>& fields, const T& obj) {
  std::vector<KeyValue> out;
  out.reserve(fields.size());
  for (const auto& f : fields) out.emplace_back(f.key, f.get(obj));
  return out;
}

template <typename T>
void apply_to(const std::vector<Field<T>>& fields, T& obj, const std::string& key,
              const std::string& value) {
  const Field<T>* f = find_field(fields, key);
  if (!f) throw std::invalid_argument("unknown config key: " + key);
  try {
    f->set(obj, value);
  } catch (const std::invalid_argument& e) {
    // re-tag nested parse errors with the full key name
    std::string what = e.what();
    if (what.find(key) == std::string::npos) {
      throw std::invalid_argument("key '" + key + "': " + what);
    }
    throw;
  }
}

}  // namespace

std::vector<KeyValue> to_key_values(const SystemConfig& config) {
  return collect_key_values(system_config_fields(), config);
}

std::vector<KeyValue> to_key_values(const HyperParams& hyper) {
  return collect_key_values(hyper_params_fields(), hyper);
}

void apply_key_value(SystemConfig& config, const std::string& key, const std::string& value) {
  apply_to(system_config_fields(), config, key, value);
}

void apply_key_value(HyperParams& hyper, const std::string& key, const std::string& value) {
  apply_to(hyper_params_fields(), hyper, key, value);
}

}  // namespace peat
