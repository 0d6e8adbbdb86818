#include "splitkit/split.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <json.hpp>

#include "splitkit/digest.hpp"
#include "splitkit/errors.hpp"
#include "splitkit/io_util.hpp"
#include "splitkit/rng.hpp"
#include "splitkit/version.hpp"

namespace splitkit {

namespace {

using json = nlohmann::ordered_json;

// Ceiling of ratio*n nudged against floating point drift; never 0 and
// never above n for ratio in (0,1).
std::size_t ceil_count(double ratio, std::size_t n) {
  if (n == 0) return 0;
  const double x = ratio * static_cast<double>(n);
  double c = std::ceil(x - 1e-9);
  if (c < 1.0) c = 1.0;
  auto k = static_cast<std::size_t>(c);
  return k > n ? n : k;
}

std::size_t floor_count(double ratio, std::size_t n) {
  const double x = ratio * static_cast<double>(n);
  const double f = std::floor(x + 1e-9);
  return f <= 0.0 ? 0 : static_cast<std::size_t>(f);
}

struct DropLog {
  std::map<std::string, std::uint64_t> reasons;
  std::uint64_t total = 0;

  void add(const char* reason, std::uint64_t n) {
    if (n == 0) return;
    reasons[reason] += n;
    total += n;
  }
};

// Drops validation/test rows whose user (optional) or item never shows
// up in train. Cold users are counted before cold items.
void intersection_pass(const Dataset& dataset,
                       const std::vector<std::uint32_t>& train,
                       std::vector<std::uint32_t>* validation,
                       std::vector<std::uint32_t>* test, DropLog& drops,
                       bool check_users) {
  std::vector<char> train_user(dataset.user_count(), 0);
  std::vector<char> train_item(dataset.item_count(), 0);
  for (std::uint32_t i : train) {
    train_user[dataset.interactions[i].user] = 1;
    train_item[dataset.interactions[i].item] = 1;
  }
  auto sweep = [&](std::vector<std::uint32_t>& part) {
    std::vector<std::uint32_t> kept;
    kept.reserve(part.size());
    for (std::uint32_t i : part) {
      const Interaction& x = dataset.interactions[i];
      if (check_users && !train_user[x.user]) {
        drops.add("cold-user", 1);
      } else if (!train_item[x.item]) {
        drops.add("cold-item", 1);
      } else {
        kept.push_back(i);
      }
    }
    part = std::move(kept);
  };
  if (validation) sweep(*validation);
  if (test) sweep(*test);
}

std::string render_index(const std::vector<std::uint32_t>& indices) {
  std::string out;
  for (std::uint32_t i : indices) {
    out += std::to_string(i);
    out.push_back('\n');
  }
  return out;
}

PartitionStats compute_stats(const Dataset& dataset,
                             const std::vector<std::uint32_t>& indices) {
  PartitionStats stats;
  stats.interactions = indices.size();
  std::vector<char> users(dataset.user_count(), 0);
  std::vector<char> items(dataset.item_count(), 0);
  std::vector<char> baskets(dataset.basket_count(), 0);
  for (std::uint32_t i : indices) {
    const Interaction& x = dataset.interactions[i];
    users[x.user] = 1;
    items[x.item] = 1;
    baskets[x.basket] = 1;
  }
  stats.users = static_cast<std::uint64_t>(
      std::count(users.begin(), users.end(), 1));
  stats.items = static_cast<std::uint64_t>(
      std::count(items.begin(), items.end(), 1));
  stats.baskets = static_cast<std::uint64_t>(
      std::count(baskets.begin(), baskets.end(), 1));
  stats.digest = digest_hex(render_index(indices));
  return stats;
}

SplitResult finalize(const Dataset& dataset, const SplitStrategy& strategy,
                     std::vector<std::uint32_t> train,
                     std::vector<std::uint32_t> validation,
                     std::vector<std::uint32_t> test, DropLog drops,
                     std::optional<Timestamp> boundary,
                     bool fold_in_validation, const char* empty_message) {
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
  std::sort(test.begin(), test.end());
  if (train.empty() || test.empty()) throw DataError(empty_message);
  if (train.size() + validation.size() + test.size() + drops.total !=
      dataset.size()) {
    throw DataError("split accounting mismatch");
  }

  SplitResult result;
  result.train = std::move(train);
  result.validation = std::move(validation);
  result.test = std::move(test);
  result.strategy = strategy;

  SplitManifest& m = result.manifest;
  m.format_version = kSplitFormatVersion;
  m.toolkit_version = kVersion;
  m.dataset_digest = dataset.content_digest();
  m.strategy = strategy;
  m.train = compute_stats(dataset, result.train);
  m.validation = compute_stats(dataset, result.validation);
  m.test = compute_stats(dataset, result.test);
  m.boundary_timestamp = boundary;
  m.dropped_interactions = drops.total;
  m.dropped_reasons = std::move(drops.reasons);
  m.fold_in_validation = fold_in_validation;
  m.leakage = leakage_report(result, dataset);
  return result;
}

SplitResult leave_one_last(const Dataset& dataset,
                           const SplitStrategy& strategy, bool by_basket) {
  std::vector<std::uint32_t> train, validation, test;
  DropLog drops;
  for (UserId u = 0; u < dataset.user_count(); ++u) {
    const std::span<const std::uint32_t> c = dataset.chronology(u);
    if (by_basket) {
      // Rows of one basket are contiguous in the chronology (a basket
      // has a single timestamp), so runs of equal basket id are the
      // user's baskets in time order.
      std::vector<std::pair<std::size_t, std::size_t>> groups;
      for (std::size_t i = 0; i < c.size();) {
        std::size_t j = i;
        const BasketId b = dataset.interactions[c[i]].basket;
        while (j < c.size() && dataset.interactions[c[j]].basket == b) ++j;
        groups.emplace_back(i, j);
        i = j;
      }
      if (groups.size() < 3) {
        drops.add("too-few-baskets", c.size());
        continue;
      }
      const auto& last = groups[groups.size() - 1];
      const auto& prev = groups[groups.size() - 2];
      for (std::size_t i = last.first; i < last.second; ++i)
        test.push_back(c[i]);
      for (std::size_t i = prev.first; i < prev.second; ++i)
        validation.push_back(c[i]);
      for (std::size_t i = 0; i < prev.first; ++i) train.push_back(c[i]);
    } else {
      if (c.size() < 3) {
        drops.add("too-few-interactions", c.size());
        continue;
      }
      test.push_back(c[c.size() - 1]);
      validation.push_back(c[c.size() - 2]);
      train.insert(train.end(), c.begin(), c.end() - 2);
    }
  }
  if (strategy.intersection_filter) {
    intersection_pass(dataset, train, &validation, &test, drops, true);
  }
  return finalize(dataset, strategy, std::move(train), std::move(validation),
                  std::move(test), std::move(drops), std::nullopt, false,
                  by_basket ? "no user has at least 3 baskets to split"
                            : "no user has at least 3 interactions to split");
}

SplitResult temporal_user(const Dataset& dataset,
                          const SplitStrategy& strategy) {
  std::vector<std::uint32_t> train, validation, test;
  DropLog drops;
  for (UserId u = 0; u < dataset.user_count(); ++u) {
    const std::span<const std::uint32_t> c = dataset.chronology(u);
    const std::size_t n = c.size();
    const std::size_t n_test = ceil_count(strategy.test_ratio, n);
    const std::size_t m = n - n_test;
    const std::size_t n_valid = ceil_count(strategy.valid_ratio, m);
    const std::size_t n_train = m - n_valid;
    if (n_test < 1 || n_valid < 1 || n_train < 1) {
      drops.add("too-few-interactions", n);
      continue;
    }
    for (std::size_t i = 0; i < n_train; ++i) train.push_back(c[i]);
    for (std::size_t i = n_train; i < m; ++i) validation.push_back(c[i]);
    for (std::size_t i = m; i < n; ++i) test.push_back(c[i]);
  }
  if (strategy.intersection_filter) {
    intersection_pass(dataset, train, &validation, &test, drops, true);
  }
  return finalize(dataset, strategy, std::move(train), std::move(validation),
                  std::move(test), std::move(drops), std::nullopt, false,
                  "temporal-user split left every user without a train row");
}

SplitResult temporal_global(const Dataset& dataset,
                            const SplitStrategy& strategy) {
  struct Group {
    std::size_t begin;
    std::size_t end;
    Timestamp t;
  };
  // Interactions are sorted by (timestamp, basket) and every basket has
  // one timestamp, so consecutive runs are the global basket order.
  std::vector<Group> groups;
  const std::size_t total = dataset.size();
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i;
    const BasketId b = dataset.interactions[i].basket;
    while (j < total && dataset.interactions[j].basket == b) ++j;
    groups.push_back({i, j, dataset.interactions[i].timestamp});
    i = j;
  }
  const std::size_t nb = groups.size();

  // Cut position: first test group.
  std::size_t p;
  if (strategy.boundary_by_interactions) {
    const std::size_t target = ceil_count(strategy.test_ratio, total);
    std::size_t rows = 0;
    p = nb;
    while (p > 0 && rows < target) {
      --p;
      rows += groups[p].end - groups[p].begin;
    }
  } else {
    p = nb - ceil_count(strategy.test_ratio, nb);
  }
  if (p == 0) {
    throw DataError("temporal-global test ratio leaves no training baskets");
  }
  // Baskets sharing the boundary timestamp stay on the train side.
  if (p < nb && groups[p].t == groups[p - 1].t) {
    const Timestamp tie = groups[p].t;
    while (p < nb && groups[p].t == tie) ++p;
    if (p == nb) {
      throw DataError(
          "temporal-global boundary is degenerate: every test-side basket "
          "shares timestamp " +
          std::to_string(tie));
    }
  }
  const Timestamp boundary = groups[p - 1].t;

  // Validation is the tail of the remaining train-side baskets.
  std::size_t q;
  if (strategy.boundary_by_interactions) {
    std::size_t head_rows = 0;
    for (std::size_t g = 0; g < p; ++g)
      head_rows += groups[g].end - groups[g].begin;
    const std::size_t target = ceil_count(strategy.valid_ratio, head_rows);
    std::size_t rows = 0;
    q = p;
    while (q > 0 && rows < target) {
      --q;
      rows += groups[q].end - groups[q].begin;
    }
  } else {
    q = p - ceil_count(strategy.valid_ratio, p);
  }
  if (q == 0) {
    throw DataError("temporal-global valid ratio leaves no training baskets");
  }

  std::vector<std::uint32_t> train, validation, test;
  auto expand = [&groups](std::size_t lo, std::size_t hi,
                          std::vector<std::uint32_t>& out) {
    for (std::size_t g = lo; g < hi; ++g) {
      for (std::size_t i = groups[g].begin; i < groups[g].end; ++i) {
        out.push_back(static_cast<std::uint32_t>(i));
      }
    }
  };
  expand(0, q, train);
  expand(q, p, validation);
  expand(p, nb, test);

  DropLog drops;
  intersection_pass(dataset, train, &validation, &test, drops, true);
  return finalize(dataset, strategy, std::move(train), std::move(validation),
                  std::move(test), std::move(drops), boundary, false,
                  "temporal-global split produced an empty partition");
}

SplitResult random_split(const Dataset& dataset,
                         const SplitStrategy& strategy) {
  const bool leave_one = strategy.tag == StrategyTag::kRandomLeaveOne;
  std::vector<std::uint32_t> train, validation, test;
  DropLog drops;
  for (UserId u = 0; u < dataset.user_count(); ++u) {
    const std::span<const std::uint32_t> c = dataset.chronology(u);
    const std::size_t n = c.size();
    Rng rng(derive_seed(strategy.seed,
                        {"random-split", dataset.users.external(u)}));
    if (leave_one) {
      if (n < 3) {
        drops.add("too-few-interactions", n);
        continue;
      }
      const std::size_t it = rng.below(n);
      std::size_t iv = rng.below(n - 1);
      if (iv >= it) ++iv;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == it) test.push_back(c[i]);
        else if (i == iv) validation.push_back(c[i]);
        else train.push_back(c[i]);
      }
    } else {
      const std::size_t n_test = ceil_count(strategy.test_ratio, n);
      const std::size_t m = n - n_test;
      const std::size_t n_valid = ceil_count(strategy.valid_ratio, m);
      const std::size_t n_train = m - n_valid;
      if (n_test < 1 || n_valid < 1 || n_train < 1) {
        drops.add("too-few-interactions", n);
        continue;
      }
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.below(i + 1)]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (i < n_test) test.push_back(c[order[i]]);
        else if (i < n_test + n_valid) validation.push_back(c[order[i]]);
        else train.push_back(c[order[i]]);
      }
    }
  }
  if (strategy.intersection_filter) {
    intersection_pass(dataset, train, &validation, &test, drops, true);
  }
  return finalize(dataset, strategy, std::move(train), std::move(validation),
                  std::move(test), std::move(drops), std::nullopt, false,
                  "random split left no user with all three partitions");
}

SplitResult user_split(const Dataset& dataset, const SplitStrategy& strategy) {
  const std::size_t n_users = dataset.user_count();
  if (n_users < 2) throw DataError("user-split needs at least 2 users");
  const std::size_t cohort_n = ceil_count(strategy.test_ratio, n_users);
  if (cohort_n >= n_users) {
    throw DataError("user-split cohort would swallow every user");
  }

  // Seeded cohort: rank users by a per-user derived key, ties broken by
  // external id, take the smallest cohort_n.
  struct Ranked {
    std::uint64_t key;
    UserId user;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(n_users);
  for (UserId u = 0; u < n_users; ++u) {
    ranked.push_back(
        {derive_seed(strategy.seed,
                     {"user-split-cohort", dataset.users.external(u)}),
         u});
  }
  std::sort(ranked.begin(), ranked.end(),
            [&dataset](const Ranked& a, const Ranked& b) {
              if (a.key != b.key) return a.key < b.key;
              return dataset.users.external(a.user) <
                     dataset.users.external(b.user);
            });
  std::vector<char> in_cohort(n_users, 0);
  for (std::size_t i = 0; i < cohort_n; ++i) in_cohort[ranked[i].user] = 1;

  std::vector<std::uint32_t> train, validation, test;
  DropLog drops;
  for (UserId u = 0; u < n_users; ++u) {
    const std::span<const std::uint32_t> c = dataset.chronology(u);
    if (!in_cohort[u]) {
      train.insert(train.end(), c.begin(), c.end());
      continue;
    }
    // Chronologically first slice is fold-in history, kept in the
    // validation partition; the rest is scored as test.
    const std::size_t fold_in = floor_count(strategy.fold_in_ratio, c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i < fold_in) validation.push_back(c[i]);
      else test.push_back(c[i]);
    }
  }
  // Every cohort user is unseen in train by construction, so only the
  // item side of the intersection rule applies, and only to fold-out.
  intersection_pass(dataset, train, nullptr, &test, drops, false);
  return finalize(dataset, strategy, std::move(train), std::move(validation),
                  std::move(test), std::move(drops), std::nullopt, true,
                  "user-split produced an empty partition");
}

void require_ratio(double value, const char* name) {
  if (!(value > 0.0 && value < 1.0)) {
    throw ConfigError(std::string(name) + " must be strictly between 0 and 1");
  }
}

}  // namespace

void validate_strategy(const SplitStrategy& strategy) {
  switch (strategy.tag) {
    case StrategyTag::kTemporalUser:
    case StrategyTag::kTemporalGlobal:
    case StrategyTag::kRandomRatio:
      require_ratio(strategy.test_ratio, "test_ratio");
      require_ratio(strategy.valid_ratio, "valid_ratio");
      break;
    case StrategyTag::kUserSplit:
      require_ratio(strategy.test_ratio, "test_ratio");
      if (!(strategy.fold_in_ratio >= 0.0 && strategy.fold_in_ratio < 1.0)) {
        throw ConfigError("fold_in_ratio must lie in [0,1)");
      }
      break;
    default:
      break;  // leave-one strategies take no ratios
  }
}

SplitResult run_split(const Dataset& dataset, const SplitStrategy& strategy) {
  validate_strategy(strategy);
  switch (strategy.tag) {
    case StrategyTag::kLeaveOneLastItem:
      return leave_one_last(dataset, strategy, false);
    case StrategyTag::kLeaveOneLastBasket:
      return leave_one_last(dataset, strategy, true);
    case StrategyTag::kTemporalUser:
      return temporal_user(dataset, strategy);
    case StrategyTag::kTemporalGlobal:
      return temporal_global(dataset, strategy);
    case StrategyTag::kRandomLeaveOne:
    case StrategyTag::kRandomRatio:
      return random_split(dataset, strategy);
    case StrategyTag::kUserSplit:
      return user_split(dataset, strategy);
  }
  throw ConfigError("unknown strategy tag");
}

SplitResult split_leave_one_last_item(const Dataset& dataset,
                                      bool intersection) {
  SplitStrategy s;
  s.tag = StrategyTag::kLeaveOneLastItem;
  s.intersection_filter = intersection;
  return run_split(dataset, s);
}

SplitResult split_leave_one_last_basket(const Dataset& dataset,
                                        bool intersection) {
  SplitStrategy s;
  s.tag = StrategyTag::kLeaveOneLastBasket;
  s.intersection_filter = intersection;
  return run_split(dataset, s);
}

SplitResult split_temporal_user(const Dataset& dataset, double test_ratio,
                                double valid_ratio) {
  SplitStrategy s;
  s.tag = StrategyTag::kTemporalUser;
  s.test_ratio = test_ratio;
  s.valid_ratio = valid_ratio;
  return run_split(dataset, s);
}

SplitResult split_temporal_global(const Dataset& dataset, double test_ratio,
                                  double valid_ratio, bool by_interactions) {
  SplitStrategy s;
  s.tag = StrategyTag::kTemporalGlobal;
  s.test_ratio = test_ratio;
  s.valid_ratio = valid_ratio;
  s.boundary_by_interactions = by_interactions;
  return run_split(dataset, s);
}

SplitResult split_random(const Dataset& dataset, StrategyTag mode,
                         std::uint64_t seed, double test_ratio,
                         double valid_ratio) {
  if (mode != StrategyTag::kRandomLeaveOne &&
      mode != StrategyTag::kRandomRatio) {
    throw ConfigError("split_random expects a random-* strategy tag");
  }
  SplitStrategy s;
  s.tag = mode;
  s.seed = seed;
  s.test_ratio = test_ratio;
  s.valid_ratio = valid_ratio;
  return run_split(dataset, s);
}

SplitResult split_user(const Dataset& dataset, double test_user_ratio,
                       double fold_in_ratio, std::uint64_t seed) {
  SplitStrategy s;
  s.tag = StrategyTag::kUserSplit;
  s.test_ratio = test_user_ratio;
  s.fold_in_ratio = fold_in_ratio;
  s.seed = seed;
  return run_split(dataset, s);
}

LeakageReport leakage_report(const SplitResult& split, const Dataset& dataset) {
  if (split.test.empty()) {
    throw DataError("leakage report requires a non-empty test partition");
  }
  LeakageReport report;
  report.boundary_type =
      split.strategy.tag == StrategyTag::kTemporalGlobal ? "global"
                                                         : "per-user";

  Timestamp min_test = std::numeric_limits<Timestamp>::max();
  for (std::uint32_t i : split.test) {
    min_test = std::min(min_test, dataset.interactions[i].timestamp);
  }
  std::uint64_t late = 0;
  for (std::uint32_t i : split.train) {
    if (dataset.interactions[i].timestamp > min_test) ++late;
  }
  report.leakage_fraction =
      split.train.empty()
          ? 0.0
          : static_cast<double>(late) / static_cast<double>(split.train.size());

  std::unordered_map<UserId, Timestamp> earliest;
  for (std::uint32_t i : split.test) {
    const Interaction& x = dataset.interactions[i];
    auto [it, fresh] = earliest.emplace(x.user, x.timestamp);
    if (!fresh) it->second = std::min(it->second, x.timestamp);
  }
  if (earliest.size() > 1) {
    Timestamp lo = std::numeric_limits<Timestamp>::max();
    Timestamp hi = std::numeric_limits<Timestamp>::min();
    for (const auto& [u, t] : earliest) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    report.per_user_boundary_spread = hi - lo;
  }
  return report;
}

namespace {

json strategy_to_json(const SplitStrategy& s) {
  json j;
  j["tag"] = strategy_tag_name(s.tag);
  j["test_ratio"] = s.test_ratio;
  j["valid_ratio"] = s.valid_ratio;
  j["seed"] = s.seed;
  j["fold_in_ratio"] = s.fold_in_ratio;
  j["intersection_filter"] = s.intersection_filter;
  j["boundary_by_interactions"] = s.boundary_by_interactions;
  return j;
}

SplitStrategy strategy_from_json(const json& j) {
  SplitStrategy s;
  s.tag = parse_strategy_tag(j.at("tag").get<std::string>());
  s.test_ratio = j.value("test_ratio", s.test_ratio);
  s.valid_ratio = j.value("valid_ratio", s.valid_ratio);
  s.seed = j.value("seed", s.seed);
  s.fold_in_ratio = j.value("fold_in_ratio", s.fold_in_ratio);
  s.intersection_filter = j.value("intersection_filter", false);
  s.boundary_by_interactions = j.value("boundary_by_interactions", false);
  return s;
}

json stats_to_json(const PartitionStats& p, const char* file) {
  json j;
  j["file"] = file;
  j["users"] = p.users;
  j["items"] = p.items;
  j["baskets"] = p.baskets;
  j["interactions"] = p.interactions;
  j["digest"] = p.digest;
  return j;
}

PartitionStats stats_from_json(const json& j) {
  PartitionStats p;
  p.users = j.at("users").get<std::uint64_t>();
  p.items = j.at("items").get<std::uint64_t>();
  p.baskets = j.at("baskets").get<std::uint64_t>();
  p.interactions = j.at("interactions").get<std::uint64_t>();
  p.digest = j.at("digest").get<std::string>();
  return p;
}

std::vector<std::uint32_t> parse_index(const std::string& text,
                                       const std::filesystem::path& path,
                                       std::size_t dataset_size) {
  std::vector<std::uint32_t> out;
  std::size_t pos = 0;
  std::uint64_t prev = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    std::uint64_t value = 0;
    for (char ch : line) {
      if (ch < '0' || ch > '9') {
        throw IoError("malformed index file: " + path.string());
      }
      value = value * 10 + static_cast<std::uint64_t>(ch - '0');
    }
    if (value >= dataset_size) {
      throw DataError("index " + std::to_string(value) + " in " +
                      path.string() + " is out of range for the dataset");
    }
    if (!first && value <= prev) {
      throw IoError("index file not strictly ascending: " + path.string());
    }
    prev = value;
    first = false;
    out.push_back(static_cast<std::uint32_t>(value));
  }
  return out;
}

}  // namespace

void export_split(const SplitResult& split, const std::filesystem::path& dir) {
  write_text(dir / "train.idx", render_index(split.train));
  write_text(dir / "validation.idx", render_index(split.validation));
  write_text(dir / "test.idx", render_index(split.test));

  const SplitManifest& m = split.manifest;
  json j;
  j["format_version"] = m.format_version;
  j["toolkit_version"] = m.toolkit_version;
  j["dataset_digest"] = m.dataset_digest;
  j["strategy"] = strategy_to_json(m.strategy);
  j["partitions"]["train"] = stats_to_json(m.train, "train.idx");
  j["partitions"]["validation"] = stats_to_json(m.validation, "validation.idx");
  j["partitions"]["test"] = stats_to_json(m.test, "test.idx");
  if (m.boundary_timestamp) {
    j["boundary_timestamp"] = *m.boundary_timestamp;
  } else {
    j["boundary_timestamp"] = nullptr;
  }
  j["dropped"]["total"] = m.dropped_interactions;
  j["dropped"]["reasons"] = json::object();
  for (const auto& [reason, count] : m.dropped_reasons) {
    j["dropped"]["reasons"][reason] = count;
  }
  j["leakage"]["fraction"] = m.leakage.leakage_fraction;
  j["leakage"]["per_user_boundary_spread"] = m.leakage.per_user_boundary_spread;
  j["leakage"]["boundary_type"] = m.leakage.boundary_type;
  j["fold_in_validation"] = m.fold_in_validation;
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

SplitResult load_split(const std::filesystem::path& dir,
                       const Dataset& dataset) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  json j;
  try {
    j = json::parse(read_text(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse " + manifest_path.string() + ": " + e.what());
  }

  SplitManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kSplitFormatVersion) {
      throw IoError("unsupported split format version " +
                    std::to_string(m.format_version));
    }
    m.toolkit_version = j.at("toolkit_version").get<std::string>();
    m.dataset_digest = j.at("dataset_digest").get<std::string>();
    m.strategy = strategy_from_json(j.at("strategy"));
    m.train = stats_from_json(j.at("partitions").at("train"));
    m.validation = stats_from_json(j.at("partitions").at("validation"));
    m.test = stats_from_json(j.at("partitions").at("test"));
    if (!j.at("boundary_timestamp").is_null()) {
      m.boundary_timestamp = j.at("boundary_timestamp").get<Timestamp>();
    }
    m.dropped_interactions = j.at("dropped").at("total").get<std::uint64_t>();
    for (const auto& [reason, count] : j.at("dropped").at("reasons").items()) {
      m.dropped_reasons[reason] = count.get<std::uint64_t>();
    }
    m.leakage.leakage_fraction = j.at("leakage").at("fraction").get<double>();
    m.leakage.per_user_boundary_spread =
        j.at("leakage").at("per_user_boundary_spread").get<std::int64_t>();
    m.leakage.boundary_type =
        j.at("leakage").at("boundary_type").get<std::string>();
    m.fold_in_validation = j.at("fold_in_validation").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed split manifest " + manifest_path.string() + ": " +
                  e.what());
  }

  if (m.dataset_digest != dataset.content_digest()) {
    throw DataError("split manifest was produced from a different dataset "
                    "(digest mismatch)");
  }

  SplitResult result;
  result.strategy = m.strategy;
  auto load_part = [&](const char* file, const PartitionStats& expect,
                       std::vector<std::uint32_t>& out) {
    const std::filesystem::path path = dir / file;
    const std::string text = read_text(path);
    if (digest_hex(text) != expect.digest) {
      throw IoError("content digest mismatch for " + path.string());
    }
    out = parse_index(text, path, dataset.size());
    const PartitionStats got = compute_stats(dataset, out);
    if (got.users != expect.users || got.items != expect.items ||
        got.baskets != expect.baskets ||
        got.interactions != expect.interactions) {
      throw DataError("manifest counts do not match partition " +
                      std::string(file));
    }
  };
  load_part("train.idx", m.train, result.train);
  load_part("validation.idx", m.validation, result.validation);
  load_part("test.idx", m.test, result.test);
  result.manifest = std::move(m);
  return result;
}

}  // namespace splitkit
