#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "splitkit/errors.hpp"
#include "splitkit/models.hpp"
#include "splitkit/rng.hpp"
#include "splitkit/split.hpp"

using namespace splitkit;

namespace {

std::vector<std::uint32_t> all_rows(const Dataset& data) {
  std::vector<std::uint32_t> rows(data.size());
  for (std::uint32_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

Dataset two_camp_fixture() {
  // u0/u1 buy only items 0..2, u2/u3 only items 3..5, many times over.
  DatasetBuilder builder;
  int basket = 0;
  for (int round = 0; round < 8; ++round) {
    for (int u = 0; u < 4; ++u) {
      const int base = u < 2 ? 0 : 3;
      for (int offset = 0; offset < 3; ++offset) {
        builder.add("u" + std::to_string(u), "i" + std::to_string(base + offset),
                    "b" + std::to_string(basket++), round * 10 + u, 1);
      }
    }
  }
  return builder.build();
}

}  // namespace

TEST_CASE("popularity ranks by training interaction count") {
  DatasetBuilder builder;
  for (int i = 0; i < 5; ++i) {
    builder.add("u" + std::to_string(i), "a", "b" + std::to_string(i), i, 1);
  }
  builder.add("u0", "b", "x1", 10, 1);
  builder.add("u1", "b", "x2", 11, 1);
  const auto data = builder.build();
  auto model = make_recommender(ModelKind::kPopularity);
  model->fit(data, all_rows(data), {}, Hyperparameters{}, 0);

  const auto top = model->recommend(0, 1, {});
  REQUIRE(top.size() == 1);
  CHECK(data.items.external(top[0]) == "a");
  CHECK(model->score(0, *data.items.find("a")) == 5.0);
  CHECK(model->score(3, *data.items.find("b")) == 2.0);
}

TEST_CASE("recommend breaks score ties by ascending item index") {
  DatasetBuilder builder;
  builder.add("u0", "first", "b0", 1, 1);
  builder.add("u1", "second", "b1", 2, 1);
  builder.add("u2", "third", "b2", 3, 1);
  const auto data = builder.build();
  auto model = make_recommender(ModelKind::kPopularity);
  model->fit(data, all_rows(data), {}, Hyperparameters{}, 0);
  const auto top = model->recommend(0, 3, {});
  CHECK(top == std::vector<ItemId>{0, 1, 2});
}

TEST_CASE("recommend drops excluded items and clamps k") {
  DatasetBuilder builder;
  builder.add("u0", "a", "b0", 1, 1);
  builder.add("u0", "b", "b1", 2, 1);
  builder.add("u0", "c", "b2", 3, 1);
  const auto data = builder.build();
  auto model = make_recommender(ModelKind::kPopularity);
  model->fit(data, all_rows(data), {}, Hyperparameters{}, 0);
  const auto top = model->recommend(0, 10, {1});
  CHECK(top == std::vector<ItemId>{0, 2});
}

TEST_CASE("popularity can exploit leaked future rows") {
  // The item bought only after the test boundary dominates the count
  // when train rows leak past it; trained on the clean prefix it never
  // outranks the steady seller.
  DatasetBuilder builder;
  for (int i = 0; i < 4; ++i) {
    builder.add("u" + std::to_string(i), "steady", "s" + std::to_string(i), i, 1);
  }
  for (int i = 0; i < 6; ++i) {
    builder.add("u" + std::to_string(i), "fad", "f" + std::to_string(i), 100 + i, 1);
  }
  const auto data = builder.build();

  std::vector<std::uint32_t> clean, leaky;
  for (std::uint32_t i = 0; i < data.size(); ++i) {
    if (data.interactions[i].timestamp < 100) clean.push_back(i);
    leaky.push_back(i);
  }
  auto on_clean = make_recommender(ModelKind::kPopularity);
  on_clean->fit(data, clean, {}, Hyperparameters{}, 0);
  auto on_leaky = make_recommender(ModelKind::kPopularity);
  on_leaky->fit(data, leaky, {}, Hyperparameters{}, 0);

  const ItemId steady = *data.items.find("steady");
  const ItemId fad = *data.items.find("fad");
  CHECK(on_clean->score(0, steady) > on_clean->score(0, fad));
  CHECK(on_leaky->score(0, fad) > on_leaky->score(0, steady));
}

TEST_CASE("itemknn similarity is one for perfect co occurrence") {
  DatasetBuilder builder;
  for (int u = 0; u < 3; ++u) {
    builder.add("u" + std::to_string(u), "left", "b" + std::to_string(u), 1, 1);
    builder.add("u" + std::to_string(u), "right", "c" + std::to_string(u), 2, 1);
  }
  builder.add("u0", "lonely", "d0", 3, 1);
  builder.add("u9", "apart", "e0", 1, 1);
  const auto data = builder.build();
  auto model = make_recommender(ModelKind::kItemKnn);
  model->fit(data, all_rows(data), {}, Hyperparameters{}, 0);

  const ItemId left = *data.items.find("left");
  const ItemId right = *data.items.find("right");
  const ItemId apart = *data.items.find("apart");
  // Score of "right" for a user whose history is exactly {left}: the
  // single neighbor contributes cos(left, right) = 3/sqrt(3*3) = 1.
  auto history_score = model->score_from_history(std::vector<ItemId>{left});
  REQUIRE(history_score.has_value());
  CHECK((*history_score)[right] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((*history_score)[apart] == 0.0);
  CHECK((*history_score)[left] == 0.0);  // self similarity excluded
}

TEST_CASE("itemknn matches the dense cosine oracle") {
  const auto data = oracle::random_fixture(321);
  auto model = make_recommender(ModelKind::kItemKnn);
  Hyperparameters hp;
  hp.neighborhood_size = 10000;  // keep every neighbor
  model->fit(data, all_rows(data), {}, hp, 0);

  std::vector<std::pair<UserId, ItemId>> events;
  for (const auto& x : data.interactions) events.emplace_back(x.user, x.item);
  const auto sim = oracle::dense_item_cosine(data.user_count(),
                                             data.item_count(), events);
  std::vector<std::vector<char>> seen(
      data.user_count(), std::vector<char>(data.item_count(), 0));
  for (const auto& [u, i] : events) seen[u][i] = 1;

  for (UserId u = 0; u < data.user_count(); ++u) {
    const auto scores = model->score_all(u);
    for (ItemId i = 0; i < data.item_count(); ++i) {
      double expected = 0.0;
      for (ItemId j = 0; j < data.item_count(); ++j) {
        if (j != i && seen[u][j]) expected += sim[i][j];
      }
      CHECK(scores[i] == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("itemknn neighborhood truncation keeps the strongest neighbors") {
  const auto data = two_camp_fixture();
  auto narrow = make_recommender(ModelKind::kItemKnn);
  Hyperparameters hp;
  hp.neighborhood_size = 1;
  narrow->fit(data, all_rows(data), {}, hp, 0);
  // With one neighbor each score is at most one similarity value.
  for (ItemId i = 0; i < data.item_count(); ++i) {
    CHECK(narrow->score(0, i) <= 1.0 + 1e-12);
  }
}

TEST_CASE("bpr separates users with disjoint tastes") {
  const auto data = two_camp_fixture();
  auto model = make_recommender(ModelKind::kBprMf);
  Hyperparameters hp;
  hp.embedding_dim = 8;
  hp.epochs = 120;
  hp.learning_rate = 0.1;
  model->fit(data, all_rows(data), {}, hp, 7);

  auto camp_mean = [&](UserId u, int base) {
    double s = 0.0;
    for (int offset = 0; offset < 3; ++offset) {
      s += model->score(u, static_cast<ItemId>(base + offset));
    }
    return s / 3.0;
  };
  const ItemId own_base = 0;
  const ItemId other_base = 3;
  CHECK(camp_mean(0, own_base) > camp_mean(0, other_base));
  CHECK(camp_mean(3, other_base) > camp_mean(3, own_base));
}

TEST_CASE("bpr probe loss falls during training") {
  const auto data = two_camp_fixture();
  auto model = make_recommender(ModelKind::kBprMf);
  Hyperparameters hp;
  hp.embedding_dim = 8;
  hp.epochs = 40;
  hp.learning_rate = 0.1;
  model->fit(data, all_rows(data), {}, hp, 3);
  const auto curve = model->training_curve();
  REQUIRE(curve.size() == 41);  // init entry plus one per epoch
  CHECK(curve.back() < curve.front());
}

TEST_CASE("bpr training is seed deterministic") {
  const auto data = oracle::random_fixture(77);
  Hyperparameters hp;
  hp.embedding_dim = 4;
  hp.epochs = 5;
  auto a = make_recommender(ModelKind::kBprMf);
  auto b = make_recommender(ModelKind::kBprMf);
  a->fit(data, all_rows(data), {}, hp, 42);
  b->fit(data, all_rows(data), {}, hp, 42);
  CHECK(a->digest() == b->digest());

  auto c = make_recommender(ModelKind::kBprMf);
  c->fit(data, all_rows(data), {}, hp, 43);
  CHECK(a->digest() != c->digest());
}

TEST_CASE("bpr triple gradient matches central differences") {
  Rng rng(888);
  const std::size_t dim = 8;
  const double reg = 0.01;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> u(dim), vi(dim), vj(dim);
    for (auto* vec : {&u, &vi, &vj}) {
      for (double& w : *vec) w = rng.uniform01() - 0.5;
    }
    std::vector<double> gu(dim), gvi(dim), gvj(dim);
    bpr_triple_gradient(u, vi, vj, reg, gu, gvi, gvj);

    const double h = 1e-5;
    auto fd_check = [&](std::vector<double>& vec, const std::vector<double>& g) {
      for (std::size_t f = 0; f < dim; ++f) {
        const double keep = vec[f];
        vec[f] = keep + h;
        const double up = bpr_triple_loss(u, vi, vj, reg);
        vec[f] = keep - h;
        const double down = bpr_triple_loss(u, vi, vj, reg);
        vec[f] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max(1.0, std::abs(numeric));
        CHECK(std::abs(g[f] - numeric) / denom < 1e-4);
      }
    };
    fd_check(u, gu);
    fd_check(vi, gvi);
    fd_check(vj, gvj);
  }
}

TEST_CASE("nmf reaches the optimum on a rank one matrix") {
  // Every user bought every item: the incidence matrix is all ones,
  // which rank >= 1 factors can fit exactly.
  DatasetBuilder builder;
  for (int u = 0; u < 4; ++u) {
    for (int i = 0; i < 3; ++i) {
      builder.add("u" + std::to_string(u), "i" + std::to_string(i),
                  "b" + std::to_string(u * 3 + i), 1, 1);
    }
  }
  const auto data = builder.build();
  auto model = make_recommender(ModelKind::kNmf);
  Hyperparameters hp;
  hp.embedding_dim = 2;
  hp.epochs = 400;
  model->fit(data, all_rows(data), {}, hp, 5);
  const auto curve = model->training_curve();
  REQUIRE(!curve.empty());
  CHECK(curve.back() < 1e-5);
  for (UserId u = 0; u < 4; ++u) {
    for (ItemId i = 0; i < 3; ++i) {
      CHECK(model->score(u, i) == doctest::Approx(1.0).epsilon(1e-3));
    }
  }
}

TEST_CASE("nmf objective never increases") {
  const auto data = oracle::random_fixture(99);
  auto model = make_recommender(ModelKind::kNmf);
  Hyperparameters hp;
  hp.embedding_dim = 4;
  hp.epochs = 60;
  model->fit(data, all_rows(data), {}, hp, 9);
  const auto curve = model->training_curve();
  REQUIRE(curve.size() >= 2);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i] <= curve[i - 1] + 1e-9);
  }
}

TEST_CASE("nmf factors stay nonnegative") {
  const auto data = oracle::random_fixture(101);
  auto model = make_recommender(ModelKind::kNmf);
  Hyperparameters hp;
  hp.embedding_dim = 3;
  hp.epochs = 30;
  model->fit(data, all_rows(data), {}, hp, 2);
  // Hexfloat factor entries in the checkpoint carry an explicit sign
  // only when negative.
  CHECK(model->serialize().find("-0x") == std::string::npos);
}

TEST_CASE("checkpoints round trip through save and load") {
  const auto data = oracle::random_fixture(60);
  const auto dir = oracle::temp_dir("models-roundtrip");
  Hyperparameters hp;
  hp.embedding_dim = 4;
  hp.epochs = 4;
  for (ModelKind kind : {ModelKind::kPopularity, ModelKind::kItemKnn,
                         ModelKind::kBprMf, ModelKind::kNmf}) {
    auto model = make_recommender(kind);
    model->fit(data, all_rows(data), {}, hp, 11);
    const auto path = dir / (model_kind_name(kind) + ".ckpt");
    model->save(path);
    const auto loaded = load_model(path);
    CHECK(loaded->kind() == kind);
    CHECK(loaded->digest() == model->digest());
    for (UserId u = 0; u < std::min<UserId>(4, data.user_count()); ++u) {
      CHECK(loaded->score_all(u) == model->score_all(u));
    }
  }
  CHECK_THROWS_AS(load_model(dir / "missing.ckpt"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("hyperparameter validation guards the fields a model reads") {
  Hyperparameters hp;
  hp.learning_rate = 0.0;
  CHECK_THROWS_AS(validate_hyperparameters(ModelKind::kBprMf, hp), ConfigError);
  CHECK_NOTHROW(validate_hyperparameters(ModelKind::kPopularity, hp));
  CHECK_NOTHROW(validate_hyperparameters(ModelKind::kItemKnn, hp));

  hp = Hyperparameters{};
  hp.neighborhood_size = 0;
  CHECK_THROWS_AS(validate_hyperparameters(ModelKind::kItemKnn, hp), ConfigError);
  CHECK_NOTHROW(validate_hyperparameters(ModelKind::kBprMf, hp));

  hp = Hyperparameters{};
  hp.embedding_dim = 0;
  CHECK_THROWS_AS(validate_hyperparameters(ModelKind::kBprMf, hp), ConfigError);
  CHECK_THROWS_AS(validate_hyperparameters(ModelKind::kNmf, hp), ConfigError);
}

TEST_CASE("hyperparameter digests track the values") {
  Hyperparameters a, b;
  CHECK(hyperparameters_digest(a) == hyperparameters_digest(b));
  b.regularization = 0.02;
  CHECK(hyperparameters_digest(a) != hyperparameters_digest(b));
  CHECK(hyperparameters_digest(b).size() == 16);
}

TEST_CASE("model kinds parse and print") {
  CHECK(parse_model_kind("popularity") == ModelKind::kPopularity);
  CHECK(parse_model_kind("itemknn") == ModelKind::kItemKnn);
  CHECK(parse_model_kind("mfbpr") == ModelKind::kBprMf);
  CHECK(parse_model_kind("nmf") == ModelKind::kNmf);
  CHECK(model_kind_name(ModelKind::kBprMf) == "mfbpr");
  CHECK_THROWS_AS(parse_model_kind("svdpp"), ConfigError);
}
