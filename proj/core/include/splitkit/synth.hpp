#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "splitkit/dataset.hpp"

namespace splitkit {

// Item popularity weights active over [begin, end).
struct DriftWindow {
  Timestamp begin = 0;
  Timestamp end = 0;
  std::vector<double> weights;

  bool operator==(const DriftWindow&) const = default;
};

struct SynthConfig {
  std::uint32_t n_users = 0;
  std::uint32_t n_items = 0;
  std::uint32_t min_baskets_per_user = 1;
  std::uint32_t max_baskets_per_user = 1;
  std::uint32_t min_items_per_basket = 1;
  std::uint32_t max_items_per_basket = 1;
  Timestamp horizon = 0;
  std::vector<DriftWindow> windows;
  // 0 gives every user the full horizon; 1 jitters start and end by up
  // to half the horizon each.
  double user_activity_spread = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const SynthConfig&) const = default;
};

void validate_synth_config(const SynthConfig& config);

Dataset generate(const SynthConfig& config);

// Canonical dataset export plus a synth.json drift-truth sidecar.
void export_synth(const SynthConfig& config, const Dataset& dataset,
                  const std::filesystem::path& dir);

// JSON text round-trip, used standalone and embedded in experiment configs.
std::string synth_config_to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(std::string_view text);

}  // namespace splitkit
