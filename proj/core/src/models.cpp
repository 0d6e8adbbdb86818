#include "splitkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
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

constexpr char kModelMagic[] = "#splitkit-model v";

std::string hexfloat(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || end != begin + text.size()) {
    throw IoError("unparseable float '" + text + "' in model checkpoint");
  }
  return v;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kPopularity: return "pop";
    case ModelKind::kItemKnn: return "itemknn";
    case ModelKind::kBprMf: return "mfbpr";
    case ModelKind::kNmf: return "nmf";
  }
  throw ConfigError("unknown model kind");
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "pop" || text == "popularity") return ModelKind::kPopularity;
  if (text == "itemknn") return ModelKind::kItemKnn;
  if (text == "mfbpr" || text == "bpr") return ModelKind::kBprMf;
  if (text == "nmf") return ModelKind::kNmf;
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

void validate_hyperparameters(ModelKind kind, const Hyperparameters& hp) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) {
      throw ConfigError(std::string(name) + " must be strictly positive");
    }
  };
  switch (kind) {
    case ModelKind::kPopularity:
      break;
    case ModelKind::kItemKnn:
      positive(static_cast<double>(hp.neighborhood_size), "neighborhood_size");
      break;
    case ModelKind::kBprMf:
      positive(static_cast<double>(hp.embedding_dim), "embedding_dim");
      positive(hp.learning_rate, "learning_rate");
      positive(static_cast<double>(hp.epochs), "epochs");
      positive(static_cast<double>(hp.negatives_per_positive),
               "negatives_per_positive");
      positive(hp.regularization, "regularization");
      break;
    case ModelKind::kNmf:
      positive(static_cast<double>(hp.embedding_dim), "embedding_dim");
      positive(static_cast<double>(hp.epochs), "epochs");
      break;
  }
}

std::string hyperparameters_digest(const Hyperparameters& hp) {
  std::string text;
  text += "embedding_dim=" + std::to_string(hp.embedding_dim);
  text += ";learning_rate=" + hexfloat(hp.learning_rate);
  text += ";epochs=" + std::to_string(hp.epochs);
  text += ";negatives_per_positive=" + std::to_string(hp.negatives_per_positive);
  text += ";regularization=" + hexfloat(hp.regularization);
  text += ";neighborhood_size=" + std::to_string(hp.neighborhood_size);
  return digest_hex(text);
}

std::vector<double> Recommender::score_all(UserId user) const {
  std::vector<double> scores(item_count());
  for (ItemId i = 0; i < scores.size(); ++i) {
    scores[i] = score(user, static_cast<ItemId>(i));
  }
  return scores;
}

std::vector<ItemId> Recommender::recommend(
    UserId user, std::size_t k,
    const std::unordered_set<ItemId>& exclude) const {
  const std::vector<double> scores = score_all(user);
  std::vector<ItemId> candidates;
  candidates.reserve(scores.size());
  for (ItemId i = 0; i < scores.size(); ++i) {
    if (!exclude.count(static_cast<ItemId>(i))) {
      candidates.push_back(static_cast<ItemId>(i));
    }
  }
  k = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + k,
                    candidates.end(), [&scores](ItemId a, ItemId b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  candidates.resize(k);
  return candidates;
}

std::string Recommender::digest() const { return digest_hex(serialize()); }

void Recommender::save(const std::filesystem::path& path) const {
  write_text(path, serialize());
}

double bpr_triple_loss(std::span<const double> u, std::span<const double> vi,
                       std::span<const double> vj, double reg) {
  double x = 0.0, nu = 0.0, ni = 0.0, nj = 0.0;
  for (std::size_t f = 0; f < u.size(); ++f) {
    x += u[f] * (vi[f] - vj[f]);
    nu += u[f] * u[f];
    ni += vi[f] * vi[f];
    nj += vj[f] * vj[f];
  }
  // -ln sigmoid(x) written as log1p(exp(-x)) for stability
  const double nll = x > 0.0 ? std::log1p(std::exp(-x))
                             : -x + std::log1p(std::exp(x));
  return nll + reg * (nu + ni + nj);
}

void bpr_triple_gradient(std::span<const double> u, std::span<const double> vi,
                         std::span<const double> vj, double reg,
                         std::span<double> gu, std::span<double> gvi,
                         std::span<double> gvj) {
  double x = 0.0;
  for (std::size_t f = 0; f < u.size(); ++f) x += u[f] * (vi[f] - vj[f]);
  const double g = -sigmoid(-x);  // d(-ln sigmoid(x))/dx
  for (std::size_t f = 0; f < u.size(); ++f) {
    gu[f] = g * (vi[f] - vj[f]) + 2.0 * reg * u[f];
    gvi[f] = g * u[f] + 2.0 * reg * vi[f];
    gvj[f] = -g * u[f] + 2.0 * reg * vj[f];
  }
}

namespace {

// ---------------------------------------------------------------- popularity

class PopularityModel final : public Recommender {
 public:
  void fit(const Dataset& dataset, const std::vector<std::uint32_t>& train,
           const std::vector<std::uint32_t>& validation,
           const Hyperparameters& hp, std::uint64_t seed) override {
    (void)validation;
    validate_hyperparameters(kind(), hp);
    if (train.empty()) throw DataError("popularity fit needs train rows");
    hp_ = hp;
    seed_ = seed;
    users_ = dataset.user_count();
    counts_.assign(dataset.item_count(), 0.0);
    for (std::uint32_t i : train) {
      counts_[dataset.interactions[i].item] += 1.0;
    }
  }

  double score(UserId, ItemId item) const override { return counts_[item]; }
  std::vector<double> score_all(UserId) const override { return counts_; }
  std::optional<std::vector<double>> score_from_history(
      std::span<const ItemId>) const override {
    return counts_;
  }

  ModelKind kind() const override { return ModelKind::kPopularity; }
  std::size_t user_count() const override { return users_; }
  std::size_t item_count() const override { return counts_.size(); }

  std::string serialize() const override;
  void restore(const json& header, std::istringstream& body);

 private:
  std::vector<double> counts_;
  std::size_t users_ = 0;
  Hyperparameters hp_;
  std::uint64_t seed_ = 0;
};

// ------------------------------------------------------------------- itemknn

class ItemKnnModel final : public Recommender {
 public:
  void fit(const Dataset& dataset, const std::vector<std::uint32_t>& train,
           const std::vector<std::uint32_t>& validation,
           const Hyperparameters& hp, std::uint64_t seed) override {
    (void)validation;
    validate_hyperparameters(kind(), hp);
    if (train.empty()) throw DataError("itemknn fit needs train rows");
    hp_ = hp;
    seed_ = seed;
    users_ = dataset.user_count();
    items_ = dataset.item_count();

    history_.assign(users_, {});
    for (std::uint32_t i : train) {
      const Interaction& x = dataset.interactions[i];
      history_[x.user].push_back(x.item);
    }
    for (auto& h : history_) {
      std::sort(h.begin(), h.end());
      h.erase(std::unique(h.begin(), h.end()), h.end());
    }

    std::vector<std::uint32_t> item_users(items_, 0);
    for (const auto& h : history_) {
      for (ItemId i : h) ++item_users[i];
    }

    // Co-occurrence over distinct (user, item) incidence.
    std::unordered_map<std::uint64_t, std::uint32_t> co;
    for (const auto& h : history_) {
      for (std::size_t a = 0; a < h.size(); ++a) {
        for (std::size_t b = a + 1; b < h.size(); ++b) {
          ++co[(static_cast<std::uint64_t>(h[a]) << 32) | h[b]];
        }
      }
    }

    std::vector<std::vector<std::pair<ItemId, double>>> cand(items_);
    for (const auto& [key, count] : co) {
      const ItemId a = static_cast<ItemId>(key >> 32);
      const ItemId b = static_cast<ItemId>(key & 0xffffffffu);
      const double sim =
          static_cast<double>(count) /
          std::sqrt(static_cast<double>(item_users[a]) *
                    static_cast<double>(item_users[b]));
      cand[a].emplace_back(b, sim);
      cand[b].emplace_back(a, sim);
    }

    neighbors_.assign(items_, {});
    for (ItemId i = 0; i < items_; ++i) {
      auto& c = cand[i];
      const std::size_t keep = std::min(hp.neighborhood_size, c.size());
      std::partial_sort(c.begin(), c.begin() + keep, c.end(),
                        [](const auto& x, const auto& y) {
                          if (x.second != y.second) return x.second > y.second;
                          return x.first < y.first;
                        });
      c.resize(keep);
      std::sort(c.begin(), c.end());  // by neighbor id for stable scoring
      neighbors_[i] = std::move(c);
    }
  }

  double score(UserId user, ItemId item) const override {
    const auto& h = history_[user];
    double s = 0.0;
    for (const auto& [j, sim] : neighbors_[item]) {
      if (std::binary_search(h.begin(), h.end(), j)) s += sim;
    }
    return s;
  }

  std::vector<double> score_all(UserId user) const override {
    return score_flags(history_[user]);
  }

  std::optional<std::vector<double>> score_from_history(
      std::span<const ItemId> history) const override {
    std::vector<ItemId> h(history.begin(), history.end());
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
    return score_flags(h);
  }

  ModelKind kind() const override { return ModelKind::kItemKnn; }
  std::size_t user_count() const override { return users_; }
  std::size_t item_count() const override { return items_; }

  std::string serialize() const override;
  void restore(const json& header, std::istringstream& body);

 private:
  std::vector<double> score_flags(const std::vector<ItemId>& history) const {
    std::vector<char> in_hist(items_, 0);
    for (ItemId j : history) {
      if (j < items_) in_hist[j] = 1;
    }
    std::vector<double> out(items_, 0.0);
    for (ItemId i = 0; i < items_; ++i) {
      double s = 0.0;
      for (const auto& [j, sim] : neighbors_[i]) {
        if (in_hist[j]) s += sim;
      }
      out[i] = s;
    }
    return out;
  }

  std::size_t users_ = 0;
  std::size_t items_ = 0;
  std::vector<std::vector<ItemId>> history_;
  std::vector<std::vector<std::pair<ItemId, double>>> neighbors_;
  Hyperparameters hp_;
  std::uint64_t seed_ = 0;
};

// -------------------------------------------------------------------- mf-bpr

class BprMfModel final : public Recommender {
 public:
  void fit(const Dataset& dataset, const std::vector<std::uint32_t>& train,
           const std::vector<std::uint32_t>& validation,
           const Hyperparameters& hp, std::uint64_t seed) override {
    validate_hyperparameters(kind(), hp);
    if (train.empty()) throw DataError("mf-bpr fit needs train rows");
    hp_ = hp;
    seed_ = seed;
    users_ = dataset.user_count();
    items_ = dataset.item_count();
    dim_ = hp.embedding_dim;

    Rng init_rng(derive_seed(seed, {"bpr", "init"}));
    const double scale = 0.01 / std::sqrt(static_cast<double>(dim_));
    u_.resize(users_ * dim_);
    v_.resize(items_ * dim_);
    for (double& w : u_) w = (init_rng.uniform01() * 2.0 - 1.0) * scale;
    for (double& w : v_) w = (init_rng.uniform01() * 2.0 - 1.0) * scale;

    std::vector<std::vector<ItemId>> positives(users_);
    std::vector<std::pair<UserId, ItemId>> pairs;
    pairs.reserve(train.size());
    for (std::uint32_t i : train) {
      const Interaction& x = dataset.interactions[i];
      positives[x.user].push_back(x.item);
      pairs.emplace_back(x.user, x.item);
    }
    for (auto& p : positives) {
      std::sort(p.begin(), p.end());
      p.erase(std::unique(p.begin(), p.end()), p.end());
    }

    std::vector<std::unordered_set<ItemId>> valid_sets(users_);
    bool any_valid = false;
    for (std::uint32_t i : validation) {
      const Interaction& x = dataset.interactions[i];
      valid_sets[x.user].insert(x.item);
      any_valid = true;
    }

    // Fixed triples for the loss curve, independent of SGD order.
    std::vector<std::tuple<UserId, ItemId, ItemId>> probe;
    {
      Rng probe_rng(derive_seed(seed, {"bpr", "probe"}));
      probe.reserve(pairs.size());
      for (const auto& [pu, pi] : pairs) {
        const ItemId nj = sample_negative(probe_rng, positives[pu]);
        if (nj != kNoItem) probe.emplace_back(pu, pi, nj);
      }
    }
    curve_.clear();
    curve_.push_back(probe_loss(probe));

    Rng sgd(derive_seed(seed, {"bpr", "sgd"}));
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> best_u, best_v;
    double best_recall = -1.0;
    int patience = kPatience;

    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[sgd.below(i)]);
      }
      for (std::size_t oi : order) {
        const auto& [user, pos] = pairs[oi];
        for (std::size_t t = 0; t < hp.negatives_per_positive; ++t) {
          const ItemId neg = sample_negative(sgd, positives[user]);
          if (neg == kNoItem) break;
          sgd_step(user, pos, neg);
        }
      }
      double checksum = 0.0;
      for (double w : u_) checksum += w;
      for (double w : v_) checksum += w;
      if (!std::isfinite(checksum)) {
        throw DataError("mf-bpr diverged at epoch " + std::to_string(epoch));
      }
      curve_.push_back(probe_loss(probe));

      if (any_valid) {
        const double recall = validation_recall(positives, valid_sets);
        if (recall > best_recall) {
          best_recall = recall;
          best_u = u_;
          best_v = v_;
          patience = kPatience;
        } else if (--patience == 0) {
          break;
        }
      }
    }
    if (!best_u.empty()) {
      u_ = std::move(best_u);
      v_ = std::move(best_v);
    }
  }

  double score(UserId user, ItemId item) const override {
    const double* pu = &u_[user * dim_];
    const double* pv = &v_[item * dim_];
    double s = 0.0;
    for (std::size_t f = 0; f < dim_; ++f) s += pu[f] * pv[f];
    return s;
  }

  ModelKind kind() const override { return ModelKind::kBprMf; }
  std::size_t user_count() const override { return users_; }
  std::size_t item_count() const override { return items_; }

  // probe-triple loss at init and after each epoch
  std::vector<double> training_curve() const override { return curve_; }

  std::string serialize() const override;
  void restore(const json& header, std::istringstream& body);

 private:
  static constexpr ItemId kNoItem = 0xffffffffu;
  static constexpr int kPatience = 5;

  ItemId sample_negative(Rng& rng, const std::vector<ItemId>& pos) const {
    if (pos.size() >= items_) return kNoItem;
    for (;;) {
      const ItemId j = static_cast<ItemId>(rng.below(items_));
      if (!std::binary_search(pos.begin(), pos.end(), j)) return j;
    }
  }

  void sgd_step(UserId user, ItemId pos, ItemId neg) {
    double* pu = &u_[user * dim_];
    double* pi = &v_[pos * dim_];
    double* pj = &v_[neg * dim_];
    double x = 0.0;
    for (std::size_t f = 0; f < dim_; ++f) x += pu[f] * (pi[f] - pj[f]);
    const double g = -sigmoid(-x);
    const double lr = hp_.learning_rate;
    const double reg = hp_.regularization;
    for (std::size_t f = 0; f < dim_; ++f) {
      const double uf = pu[f], vif = pi[f], vjf = pj[f];
      pu[f] = uf - lr * (g * (vif - vjf) + 2.0 * reg * uf);
      pi[f] = vif - lr * (g * uf + 2.0 * reg * vif);
      pj[f] = vjf - lr * (-g * uf + 2.0 * reg * vjf);
    }
  }

  double probe_loss(
      const std::vector<std::tuple<UserId, ItemId, ItemId>>& probe) const {
    if (probe.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [user, pos, neg] : probe) {
      total += bpr_triple_loss(
          std::span<const double>(&u_[user * dim_], dim_),
          std::span<const double>(&v_[pos * dim_], dim_),
          std::span<const double>(&v_[neg * dim_], dim_),
          hp_.regularization);
    }
    return total / static_cast<double>(probe.size());
  }

  double validation_recall(
      const std::vector<std::vector<ItemId>>& positives,
      const std::vector<std::unordered_set<ItemId>>& valid_sets) const {
    constexpr std::size_t kK = 10;
    double total = 0.0;
    std::size_t evaluated = 0;
    std::vector<ItemId> candidates;
    for (UserId u = 0; u < users_; ++u) {
      if (valid_sets[u].empty()) continue;
      candidates.clear();
      const auto& pos = positives[u];
      for (ItemId i = 0; i < items_; ++i) {
        if (!std::binary_search(pos.begin(), pos.end(), i)) {
          candidates.push_back(i);
        }
      }
      const std::size_t k = std::min(kK, candidates.size());
      std::partial_sort(candidates.begin(), candidates.begin() + k,
                        candidates.end(), [this, u](ItemId a, ItemId b) {
                          const double sa = score(u, a), sb = score(u, b);
                          if (sa != sb) return sa > sb;
                          return a < b;
                        });
      std::size_t hits = 0;
      for (std::size_t p = 0; p < k; ++p) {
        if (valid_sets[u].count(candidates[p])) ++hits;
      }
      total += static_cast<double>(hits) /
               static_cast<double>(valid_sets[u].size());
      ++evaluated;
    }
    return evaluated == 0 ? 0.0 : total / static_cast<double>(evaluated);
  }

  std::size_t users_ = 0;
  std::size_t items_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> u_, v_;
  std::vector<double> curve_;
  Hyperparameters hp_;
  std::uint64_t seed_ = 0;
};

// ----------------------------------------------------------------------- nmf

class NmfModel final : public Recommender {
 public:
  void fit(const Dataset& dataset, const std::vector<std::uint32_t>& train,
           const std::vector<std::uint32_t>& validation,
           const Hyperparameters& hp, std::uint64_t seed) override {
    (void)validation;
    validate_hyperparameters(kind(), hp);
    if (train.empty()) throw DataError("nmf fit needs train rows");
    hp_ = hp;
    seed_ = seed;
    users_ = dataset.user_count();
    items_ = dataset.item_count();
    dim_ = hp.embedding_dim;

    // Sparse count matrix: interaction rows per (user, item).
    std::unordered_map<std::uint64_t, double> cells;
    for (std::uint32_t i : train) {
      const Interaction& x = dataset.interactions[i];
      cells[(static_cast<std::uint64_t>(x.user) << 32) | x.item] += 1.0;
    }
    struct Cell {
      UserId user;
      ItemId item;
      double value;
    };
    std::vector<Cell> a;
    a.reserve(cells.size());
    for (const auto& [key, value] : cells) {
      a.push_back({static_cast<UserId>(key >> 32),
                   static_cast<ItemId>(key & 0xffffffffu), value});
    }
    std::sort(a.begin(), a.end(), [](const Cell& x, const Cell& y) {
      if (x.user != y.user) return x.user < y.user;
      return x.item < y.item;
    });
    double norm_a = 0.0;
    for (const Cell& c : a) norm_a += c.value * c.value;

    Rng rng(derive_seed(seed, {"nmf", "init"}));
    w_.resize(users_ * dim_);
    h_.resize(items_ * dim_);
    for (double& x : w_) x = rng.uniform01();
    for (double& x : h_) x = rng.uniform01();

    constexpr double kEps = 1e-12;
    const std::size_t d = dim_;
    std::vector<double> gram(d * d), num;
    curve_.clear();

    auto objective = [&]() {
      // |A|^2 - 2 sum a_ui (WH^T)_ui + trace((W^T W)(H^T H))
      double mid = 0.0;
      for (const Cell& c : a) {
        const double* pw = &w_[c.user * d];
        const double* ph = &h_[c.item * d];
        double dot = 0.0;
        for (std::size_t f = 0; f < d; ++f) dot += pw[f] * ph[f];
        mid += c.value * dot;
      }
      std::vector<double> gw(d * d, 0.0), gh(d * d, 0.0);
      for (std::size_t u = 0; u < users_; ++u) {
        const double* pw = &w_[u * d];
        for (std::size_t f = 0; f < d; ++f) {
          for (std::size_t g = f; g < d; ++g) gw[f * d + g] += pw[f] * pw[g];
        }
      }
      for (std::size_t i = 0; i < items_; ++i) {
        const double* ph = &h_[i * d];
        for (std::size_t f = 0; f < d; ++f) {
          for (std::size_t g = f; g < d; ++g) gh[f * d + g] += ph[f] * ph[g];
        }
      }
      double tail = 0.0;
      for (std::size_t f = 0; f < d; ++f) {
        for (std::size_t g = f; g < d; ++g) {
          const double scale = f == g ? 1.0 : 2.0;
          tail += scale * gw[f * d + g] * gh[f * d + g];
        }
      }
      return norm_a - 2.0 * mid + tail;
    };

    curve_.push_back(objective());
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
      // H <- H * (A^T W) / (H (W^T W))
      std::fill(gram.begin(), gram.end(), 0.0);
      for (std::size_t u = 0; u < users_; ++u) {
        const double* pw = &w_[u * d];
        for (std::size_t f = 0; f < d; ++f) {
          for (std::size_t g = 0; g < d; ++g) {
            gram[f * d + g] += pw[f] * pw[g];
          }
        }
      }
      num.assign(items_ * d, 0.0);
      for (const Cell& c : a) {
        const double* pw = &w_[c.user * d];
        double* pn = &num[c.item * d];
        for (std::size_t f = 0; f < d; ++f) pn[f] += c.value * pw[f];
      }
      for (std::size_t i = 0; i < items_; ++i) {
        double* ph = &h_[i * d];
        for (std::size_t f = 0; f < d; ++f) {
          double denom = 0.0;
          for (std::size_t g = 0; g < d; ++g) {
            denom += ph[g] * gram[g * d + f];
          }
          ph[f] *= num[i * d + f] / (denom + kEps);
        }
      }

      // W <- W * (A H) / (W (H^T H))
      std::fill(gram.begin(), gram.end(), 0.0);
      for (std::size_t i = 0; i < items_; ++i) {
        const double* ph = &h_[i * d];
        for (std::size_t f = 0; f < d; ++f) {
          for (std::size_t g = 0; g < d; ++g) {
            gram[f * d + g] += ph[f] * ph[g];
          }
        }
      }
      num.assign(users_ * d, 0.0);
      for (const Cell& c : a) {
        const double* ph = &h_[c.item * d];
        double* pn = &num[c.user * d];
        for (std::size_t f = 0; f < d; ++f) pn[f] += c.value * ph[f];
      }
      for (std::size_t u = 0; u < users_; ++u) {
        double* pw = &w_[u * d];
        for (std::size_t f = 0; f < d; ++f) {
          double denom = 0.0;
          for (std::size_t g = 0; g < d; ++g) {
            denom += pw[g] * gram[g * d + f];
          }
          pw[f] *= num[u * d + f] / (denom + kEps);
        }
      }

      const double obj = objective();
      if (!std::isfinite(obj)) {
        throw DataError("nmf diverged at epoch " + std::to_string(epoch));
      }
      curve_.push_back(obj);
    }
  }

  double score(UserId user, ItemId item) const override {
    const double* pw = &w_[user * dim_];
    const double* ph = &h_[item * dim_];
    double s = 0.0;
    for (std::size_t f = 0; f < dim_; ++f) s += pw[f] * ph[f];
    return s;
  }

  ModelKind kind() const override { return ModelKind::kNmf; }
  std::size_t user_count() const override { return users_; }
  std::size_t item_count() const override { return items_; }

  // Frobenius objective at init and after each epoch.
  std::vector<double> training_curve() const override { return curve_; }

  std::string serialize() const override;
  void restore(const json& header, std::istringstream& body);

 private:
  std::size_t users_ = 0;
  std::size_t items_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> w_, h_;
  std::vector<double> curve_;
  Hyperparameters hp_;
  std::uint64_t seed_ = 0;
};

// ------------------------------------------------------------ serialization

json hp_to_json(const Hyperparameters& hp) {
  json j;
  j["embedding_dim"] = hp.embedding_dim;
  j["learning_rate"] = hexfloat(hp.learning_rate);
  j["epochs"] = hp.epochs;
  j["negatives_per_positive"] = hp.negatives_per_positive;
  j["regularization"] = hexfloat(hp.regularization);
  j["neighborhood_size"] = hp.neighborhood_size;
  return j;
}

Hyperparameters hp_from_json(const json& j) {
  Hyperparameters hp;
  hp.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  hp.learning_rate = parse_double(j.at("learning_rate").get<std::string>());
  hp.epochs = j.at("epochs").get<std::size_t>();
  hp.negatives_per_positive =
      j.at("negatives_per_positive").get<std::size_t>();
  hp.regularization = parse_double(j.at("regularization").get<std::string>());
  hp.neighborhood_size = j.at("neighborhood_size").get<std::size_t>();
  return hp;
}

std::string header_line(ModelKind kind, std::size_t users, std::size_t items,
                        const Hyperparameters& hp, std::uint64_t seed) {
  json j;
  j["kind"] = model_kind_name(kind);
  j["users"] = users;
  j["items"] = items;
  j["seed"] = seed;
  j["hp"] = hp_to_json(hp);
  return j.dump();
}

void append_row(std::string& out, const double* row, std::size_t d) {
  for (std::size_t f = 0; f < d; ++f) {
    if (f) out.push_back(' ');
    out += hexfloat(row[f]);
  }
  out.push_back('\n');
}

std::string PopularityModel::serialize() const {
  std::string out = kModelMagic + std::to_string(kModelFormatVersion) + "\n";
  out += header_line(kind(), users_, counts_.size(), hp_, seed_) + "\n";
  for (double c : counts_) {
    out += hexfloat(c);
    out.push_back('\n');
  }
  return out;
}

void PopularityModel::restore(const json& header, std::istringstream& body) {
  users_ = header.at("users").get<std::size_t>();
  const auto items = header.at("items").get<std::size_t>();
  seed_ = header.at("seed").get<std::uint64_t>();
  hp_ = hp_from_json(header.at("hp"));
  counts_.reserve(items);
  std::string line;
  for (std::size_t i = 0; i < items; ++i) {
    if (!std::getline(body, line)) throw IoError("truncated model checkpoint");
    counts_.push_back(parse_double(line));
  }
}

std::string ItemKnnModel::serialize() const {
  std::string out = kModelMagic + std::to_string(kModelFormatVersion) + "\n";
  out += header_line(kind(), users_, items_, hp_, seed_) + "\n";
  for (const auto& h : history_) {
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (i) out.push_back(' ');
      out += std::to_string(h[i]);
    }
    out.push_back('\n');
  }
  for (const auto& nb : neighbors_) {
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if (i) out.push_back(' ');
      out += std::to_string(nb[i].first) + ":" + hexfloat(nb[i].second);
    }
    out.push_back('\n');
  }
  return out;
}

void ItemKnnModel::restore(const json& header, std::istringstream& body) {
  users_ = header.at("users").get<std::size_t>();
  items_ = header.at("items").get<std::size_t>();
  seed_ = header.at("seed").get<std::uint64_t>();
  hp_ = hp_from_json(header.at("hp"));
  history_.assign(users_, {});
  neighbors_.assign(items_, {});
  std::string line;
  for (std::size_t u = 0; u < users_; ++u) {
    if (!std::getline(body, line)) throw IoError("truncated model checkpoint");
    for (const std::string& tok : split_ws(line)) {
      history_[u].push_back(
          static_cast<ItemId>(std::strtoul(tok.c_str(), nullptr, 10)));
    }
  }
  for (std::size_t i = 0; i < items_; ++i) {
    if (!std::getline(body, line)) throw IoError("truncated model checkpoint");
    for (const std::string& tok : split_ws(line)) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos) {
        throw IoError("malformed itemknn neighbor entry '" + tok + "'");
      }
      neighbors_[i].emplace_back(
          static_cast<ItemId>(
              std::strtoul(tok.substr(0, colon).c_str(), nullptr, 10)),
          parse_double(tok.substr(colon + 1)));
    }
  }
}

std::string BprMfModel::serialize() const {
  std::string out = kModelMagic + std::to_string(kModelFormatVersion) + "\n";
  out += header_line(kind(), users_, items_, hp_, seed_) + "\n";
  for (std::size_t u = 0; u < users_; ++u) append_row(out, &u_[u * dim_], dim_);
  for (std::size_t i = 0; i < items_; ++i) append_row(out, &v_[i * dim_], dim_);
  return out;
}

void BprMfModel::restore(const json& header, std::istringstream& body) {
  users_ = header.at("users").get<std::size_t>();
  items_ = header.at("items").get<std::size_t>();
  seed_ = header.at("seed").get<std::uint64_t>();
  hp_ = hp_from_json(header.at("hp"));
  dim_ = hp_.embedding_dim;
  u_.reserve(users_ * dim_);
  v_.reserve(items_ * dim_);
  std::string line;
  auto read_rows = [&](std::vector<double>& dst, std::size_t rows) {
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(body, line)) {
        throw IoError("truncated model checkpoint");
      }
      const auto toks = split_ws(line);
      if (toks.size() != dim_) {
        throw IoError("model checkpoint row has wrong dimension");
      }
      for (const std::string& tok : toks) dst.push_back(parse_double(tok));
    }
  };
  read_rows(u_, users_);
  read_rows(v_, items_);
}

std::string NmfModel::serialize() const {
  std::string out = kModelMagic + std::to_string(kModelFormatVersion) + "\n";
  out += header_line(kind(), users_, items_, hp_, seed_) + "\n";
  for (std::size_t u = 0; u < users_; ++u) append_row(out, &w_[u * dim_], dim_);
  for (std::size_t i = 0; i < items_; ++i) append_row(out, &h_[i * dim_], dim_);
  return out;
}

void NmfModel::restore(const json& header, std::istringstream& body) {
  users_ = header.at("users").get<std::size_t>();
  items_ = header.at("items").get<std::size_t>();
  seed_ = header.at("seed").get<std::uint64_t>();
  hp_ = hp_from_json(header.at("hp"));
  dim_ = hp_.embedding_dim;
  std::string line;
  auto read_rows = [&](std::vector<double>& dst, std::size_t rows) {
    dst.reserve(rows * dim_);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(body, line)) {
        throw IoError("truncated model checkpoint");
      }
      const auto toks = split_ws(line);
      if (toks.size() != dim_) {
        throw IoError("model checkpoint row has wrong dimension");
      }
      for (const std::string& tok : toks) dst.push_back(parse_double(tok));
    }
  };
  read_rows(w_, users_);
  read_rows(h_, items_);
}

}  // namespace

std::unique_ptr<Recommender> make_recommender(ModelKind kind) {
  switch (kind) {
    case ModelKind::kPopularity: return std::make_unique<PopularityModel>();
    case ModelKind::kItemKnn: return std::make_unique<ItemKnnModel>();
    case ModelKind::kBprMf: return std::make_unique<BprMfModel>();
    case ModelKind::kNmf: return std::make_unique<NmfModel>();
  }
  throw ConfigError("unknown model kind");
}

std::unique_ptr<Recommender> load_model(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind(kModelMagic, 0) != 0) {
    throw IoError("not a splitkit model checkpoint: " + path.string());
  }
  const std::string version = line.substr(std::strlen(kModelMagic));
  if (version != std::to_string(kModelFormatVersion)) {
    throw IoError("unsupported model format version " + version);
  }
  if (!std::getline(in, line)) {
    throw IoError("truncated model checkpoint: " + path.string());
  }
  json header;
  try {
    header = json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed model header in " + path.string() + ": " +
                  e.what());
  }
  const ModelKind kind =
      parse_model_kind(header.at("kind").get<std::string>());
  auto model = make_recommender(kind);
  try {
    switch (kind) {
      case ModelKind::kPopularity:
        static_cast<PopularityModel&>(*model).restore(header, in);
        break;
      case ModelKind::kItemKnn:
        static_cast<ItemKnnModel&>(*model).restore(header, in);
        break;
      case ModelKind::kBprMf:
        static_cast<BprMfModel&>(*model).restore(header, in);
        break;
      case ModelKind::kNmf:
        static_cast<NmfModel&>(*model).restore(header, in);
        break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed model header in " + path.string() + ": " +
                  e.what());
  }
  return model;
}

}  // namespace splitkit
