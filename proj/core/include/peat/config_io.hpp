#pragma once

#include <string>
#include <utility>
#include <vector>

#include "peat/hmppo.hpp"
#include "peat/sysmodel.hpp"

namespace peat {

// Flat key/value views over the two config structs, used by the config-file
// loader, --set overrides, the resolved-config dump, and checkpoints.
// Doubles render with enough digits to round-trip exactly; pairs and the
// polynomial render as comma-separated lists.
using KeyValue = std::pair<std::string, std::string>;

std::vector<KeyValue> to_key_values(const SystemConfig& config);
std::vector<KeyValue> to_key_values(const HyperParams& hyper);

// Throw std::invalid_argument naming the key when it is unknown or its
// value does not parse.
void apply_key_value(SystemConfig& config, const std::string& key, const std::string& value);
void apply_key_value(HyperParams& hyper, const std::string& key, const std::string& value);

std::string format_double(double v);  // %.17g
double parse_double(const std::string& text, const std::string& key);
long parse_long(const std::string& text, const std::string& key);

}  // namespace peat
