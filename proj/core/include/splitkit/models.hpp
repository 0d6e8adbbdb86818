#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "splitkit/dataset.hpp"

namespace splitkit {

enum class ModelKind { kPopularity, kItemKnn, kBprMf, kNmf };

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

// The union of every model's knobs; each model reads its own subset.
struct Hyperparameters {
  std::size_t embedding_dim = 16;
  double learning_rate = 0.05;
  std::size_t epochs = 30;
  std::size_t negatives_per_positive = 1;
  double regularization = 0.01;
  std::size_t neighborhood_size = 100;

  bool operator==(const Hyperparameters&) const = default;
};

// Throws ConfigError when a field the model actually uses is not
// strictly positive.
void validate_hyperparameters(ModelKind kind, const Hyperparameters& hp);

// Stable digest of the hyperparameter values (same fields, same hex).
std::string hyperparameters_digest(const Hyperparameters& hp);

class Recommender {
 public:
  virtual ~Recommender() = default;

  // train/validation are interaction row indices into dataset.
  // Training is single threaded and fully determined by the seed.
  virtual void fit(const Dataset& dataset,
                   const std::vector<std::uint32_t>& train,
                   const std::vector<std::uint32_t>& validation,
                   const Hyperparameters& hp, std::uint64_t seed) = 0;

  virtual double score(UserId user, ItemId item) const = 0;

  // Scores for every item id in [0, item_count). Default loops score().
  virtual std::vector<double> score_all(UserId user) const;

  // Scoring path for a user unseen at fit time, described only by an
  // item history (user-split fold-in). Models without such a path
  // return nullopt and the caller skips the user.
  virtual std::optional<std::vector<double>> score_from_history(
      std::span<const ItemId> /*history*/) const {
    return std::nullopt;
  }

  virtual ModelKind kind() const = 0;
  virtual std::size_t user_count() const = 0;
  virtual std::size_t item_count() const = 0;

  // Per-epoch objective trace where the model has one: mf-bpr records
  // mean probe-triple loss (entry 0 at init), nmf the Frobenius
  // objective. Empty for models without an iterative fit.
  virtual std::vector<double> training_curve() const { return {}; }

  // Checkpoint body: versioned text, hexfloat factors, byte-stable.
  virtual std::string serialize() const = 0;

  // Top-K items by descending score, excluded ids removed, score ties
  // broken by ascending item index.
  std::vector<ItemId> recommend(UserId user, std::size_t k,
                                const std::unordered_set<ItemId>& exclude) const;

  std::string digest() const;  // digest of serialize()
  void save(const std::filesystem::path& path) const;
};

std::unique_ptr<Recommender> make_recommender(ModelKind kind);

// Reads a checkpoint written by save(); the kind is embedded.
std::unique_ptr<Recommender> load_model(const std::filesystem::path& path);

// The BPR objective for one (user, positive, negative) triple:
//   -ln sigmoid(u.vi - u.vj) + reg * (|u|^2 + |vi|^2 + |vj|^2)
// and its exact gradient, exposed for testing against finite
// differences. Gradient spans must match the factor dimension.
double bpr_triple_loss(std::span<const double> u, std::span<const double> vi,
                       std::span<const double> vj, double reg);
void bpr_triple_gradient(std::span<const double> u, std::span<const double> vi,
                         std::span<const double> vj, double reg,
                         std::span<double> gu, std::span<double> gvi,
                         std::span<double> gvj);

}  // namespace splitkit
