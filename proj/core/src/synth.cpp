#include "splitkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "splitkit/errors.hpp"
#include "splitkit/ingest.hpp"
#include "splitkit/io_util.hpp"
#include "splitkit/rng.hpp"

namespace splitkit {

namespace {

using json = nlohmann::ordered_json;

std::string padded_id(char prefix, std::uint32_t index, std::uint32_t count) {
  std::uint32_t width = 1;
  for (std::uint32_t v = count; v >= 10; v /= 10) ++width;
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%c%0*u", prefix, static_cast<int>(width),
                index);
  return buf;
}

const DriftWindow& window_at(const SynthConfig& config, Timestamp t) {
  for (const DriftWindow& w : config.windows) {
    if (t >= w.begin && t < w.end) return w;
  }
  throw DataError("no drift window covers time " + std::to_string(t));
}

// Weighted draw without replacement: cumulative walk, then zero the
// chosen weight.
std::vector<ItemId> draw_basket(const DriftWindow& window, std::size_t size,
                                Rng& rng) {
  std::vector<double> w = window.weights;
  std::vector<ItemId> items;
  items.reserve(size);
  for (std::size_t k = 0; k < size; ++k) {
    double total = 0.0;
    for (double x : w) total += x;
    if (total <= 0.0) break;
    const double r = rng.uniform01() * total;
    double acc = 0.0;
    std::size_t pick = w.size();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] <= 0.0) continue;
      acc += w[i];
      if (r < acc) {
        pick = i;
        break;
      }
    }
    if (pick == w.size()) {
      // r landed on the far edge of the accumulated mass
      for (std::size_t i = w.size(); i-- > 0;) {
        if (w[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    items.push_back(static_cast<ItemId>(pick));
    w[pick] = 0.0;
  }
  return items;
}

}  // namespace

void validate_synth_config(const SynthConfig& config) {
  if (config.n_users == 0) throw ConfigError("synth: n_users must be >= 1");
  if (config.n_items == 0) throw ConfigError("synth: n_items must be >= 1");
  if (config.min_baskets_per_user == 0) {
    throw ConfigError("synth: min_baskets_per_user must be >= 1");
  }
  if (config.max_baskets_per_user < config.min_baskets_per_user) {
    throw ConfigError("synth: max_baskets_per_user below min");
  }
  if (config.min_items_per_basket == 0) {
    throw ConfigError("synth: min_items_per_basket must be >= 1");
  }
  if (config.max_items_per_basket < config.min_items_per_basket) {
    throw ConfigError("synth: max_items_per_basket below min");
  }
  if (config.max_items_per_basket > config.n_items) {
    throw ConfigError(
        "synth: infeasible config, max_items_per_basket " +
        std::to_string(config.max_items_per_basket) + " exceeds n_items " +
        std::to_string(config.n_items));
  }
  if (config.horizon < 1) throw ConfigError("synth: horizon must be >= 1");
  if (config.windows.empty()) {
    throw ConfigError("synth: at least one drift window required");
  }
  Timestamp expect = 0;
  for (std::size_t i = 0; i < config.windows.size(); ++i) {
    const DriftWindow& w = config.windows[i];
    const std::string where = "synth: windows[" + std::to_string(i) + "]";
    if (w.begin != expect) {
      throw ConfigError(where + " begins at " + std::to_string(w.begin) +
                        ", expected " + std::to_string(expect) +
                        " (windows must tile the horizon)");
    }
    if (w.end <= w.begin) throw ConfigError(where + " is empty");
    if (w.weights.size() != config.n_items) {
      throw ConfigError(where + " has " + std::to_string(w.weights.size()) +
                        " weights for " + std::to_string(config.n_items) +
                        " items");
    }
    bool any_positive = false;
    for (double x : w.weights) {
      if (!std::isfinite(x) || x < 0.0) {
        throw ConfigError(where + " has a negative or non-finite weight");
      }
      if (x > 0.0) any_positive = true;
    }
    if (!any_positive) throw ConfigError(where + " weights are all zero");
    expect = w.end;
  }
  if (expect != config.horizon) {
    throw ConfigError("synth: windows end at " + std::to_string(expect) +
                      " but horizon is " + std::to_string(config.horizon));
  }
  if (!(config.user_activity_spread >= 0.0 &&
        config.user_activity_spread <= 1.0)) {
    throw ConfigError("synth: user_activity_spread must be in [0,1]");
  }
}

Dataset generate(const SynthConfig& config) {
  validate_synth_config(config);
  DatasetBuilder builder;
  const Timestamp jitter = static_cast<Timestamp>(
      std::floor(config.user_activity_spread *
                 static_cast<double>(config.horizon) / 2.0));
  for (std::uint32_t u = 1; u <= config.n_users; ++u) {
    const std::string user_ext = padded_id('u', u, config.n_users);
    Rng rng(derive_seed(config.seed, {"synth-user", user_ext}));
    Timestamp start = static_cast<Timestamp>(
        rng.below(static_cast<std::uint64_t>(jitter) + 1));
    Timestamp end =
        config.horizon - static_cast<Timestamp>(
                             rng.below(static_cast<std::uint64_t>(jitter) + 1));
    if (end <= start) end = start + 1;

    const std::uint32_t span_baskets =
        config.max_baskets_per_user - config.min_baskets_per_user + 1;
    const std::uint32_t n_baskets =
        config.min_baskets_per_user +
        static_cast<std::uint32_t>(rng.below(span_baskets));
    for (std::uint32_t b = 1; b <= n_baskets; ++b) {
      const Timestamp t =
          start + static_cast<Timestamp>(
                      rng.below(static_cast<std::uint64_t>(end - start)));
      const DriftWindow& window = window_at(config, t);
      std::size_t positive = 0;
      for (double x : window.weights) {
        if (x > 0.0) ++positive;
      }
      const std::uint32_t span_items =
          config.max_items_per_basket - config.min_items_per_basket + 1;
      std::size_t size = config.min_items_per_basket +
                         static_cast<std::size_t>(rng.below(span_items));
      size = std::min(size, positive);
      const std::string basket_ext =
          user_ext + "-" + padded_id('b', b, config.max_baskets_per_user);
      for (ItemId item : draw_basket(window, size, rng)) {
        builder.add(user_ext, padded_id('i', item + 1, config.n_items),
                    basket_ext, t, 1);
      }
    }
  }
  return builder.build(BasketPolicy::kReject);
}

void export_synth(const SynthConfig& config, const Dataset& dataset,
                  const std::filesystem::path& dir) {
  export_dataset(dataset, dir);
  write_text(dir / "synth.json", synth_config_to_json(config));
}

std::string synth_config_to_json(const SynthConfig& config) {
  json j;
  j["n_users"] = config.n_users;
  j["n_items"] = config.n_items;
  j["baskets_per_user"] = {config.min_baskets_per_user,
                           config.max_baskets_per_user};
  j["items_per_basket"] = {config.min_items_per_basket,
                           config.max_items_per_basket};
  j["horizon"] = config.horizon;
  j["user_activity_spread"] = config.user_activity_spread;
  j["seed"] = config.seed;
  json windows = json::array();
  for (const DriftWindow& w : config.windows) {
    json jw;
    jw["begin"] = w.begin;
    jw["end"] = w.end;
    jw["weights"] = w.weights;
    windows.push_back(std::move(jw));
  }
  j["windows"] = std::move(windows);
  return j.dump(2) + "\n";
}

SynthConfig synth_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("cannot parse synth config: ") + e.what());
  }
  SynthConfig config;
  try {
    config.n_users = j.at("n_users").get<std::uint32_t>();
    config.n_items = j.at("n_items").get<std::uint32_t>();
    const auto& bp = j.at("baskets_per_user");
    config.min_baskets_per_user = bp.at(0).get<std::uint32_t>();
    config.max_baskets_per_user = bp.at(1).get<std::uint32_t>();
    const auto& ip = j.at("items_per_basket");
    config.min_items_per_basket = ip.at(0).get<std::uint32_t>();
    config.max_items_per_basket = ip.at(1).get<std::uint32_t>();
    config.horizon = j.at("horizon").get<Timestamp>();
    config.user_activity_spread = j.at("user_activity_spread").get<double>();
    config.seed = j.at("seed").get<std::uint64_t>();
    for (const json& jw : j.at("windows")) {
      DriftWindow w;
      w.begin = jw.at("begin").get<Timestamp>();
      w.end = jw.at("end").get<Timestamp>();
      w.weights = jw.at("weights").get<std::vector<double>>();
      config.windows.push_back(std::move(w));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed synth config: ") + e.what());
  }
  validate_synth_config(config);
  return config;
}

}  // namespace splitkit
