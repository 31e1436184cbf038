#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <pcam/errors.hpp>
#include <pcam/network.hpp>
#include <pcam/rng.hpp>
#include <pcam/train.hpp>

using namespace pcam;

namespace {

Tensor random_image(std::size_t c, std::size_t h, std::size_t w,
                    std::uint64_t seed) {
  Tensor t({c, h, w});
  RngState rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng_uniform(rng);
  return t;
}

// Two classes, class 0 bright on the left, class 1 bright on the right,
// plus mild per-sample noise.
Dataset halves_dataset(std::size_t n_per_class, std::size_t size,
                       std::uint64_t seed) {
  Dataset d;
  d.class_names = {"left", "right"};
  RngState rng(seed);
  for (std::size_t label = 0; label < 2; ++label) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      Tensor img({1, size, size});
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
          const bool bright = (label == 0) ? (x < size / 2) : (x >= size / 2);
          img.at(0, y, x) =
              (bright ? 0.8 : 0.2) + 0.1 * rng_uniform(rng);
        }
      d.samples.push_back({std::move(img), label, Tensor{}});
    }
  }
  return d;
}

Dataset labeled_dataset(const std::vector<std::size_t>& class_sizes,
                        std::uint64_t seed) {
  Dataset d;
  RngState rng(seed);
  for (std::size_t c = 0; c < class_sizes.size(); ++c)
    d.class_names.push_back("c" + std::to_string(c));
  for (std::size_t c = 0; c < class_sizes.size(); ++c)
    for (std::size_t i = 0; i < class_sizes[c]; ++i) {
      Tensor img({1, 1, 1});
      img[0] = rng_uniform(rng);
      d.samples.push_back({std::move(img), c, Tensor{}});
    }
  return d;
}

std::vector<double> pixel_values(const Dataset& d) {
  std::vector<double> v;
  for (const Sample& s : d.samples) v.push_back(s.image[0]);
  std::sort(v.begin(), v.end());
  return v;
}

Network identity_head_net() {
  Network net;
  net.in_channels = 2;
  net.in_height = 2;
  net.in_width = 2;
  net.class_names = {"a", "b"};
  net.layers.push_back(make_gap());
  LayerSpec dense;
  dense.kind = LayerKind::Dense;
  dense.weight = Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0});
  dense.bias = Tensor({2});
  net.layers.push_back(std::move(dense));
  net.layers.push_back(make_softmax());
  return net;
}

Tensor two_channel(double c0, double c1) {
  Tensor t({2, 2, 2});
  for (std::size_t i = 0; i < 4; ++i) t[i] = c0;
  for (std::size_t i = 4; i < 8; ++i) t[i] = c1;
  return t;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("sgdm two constant steps") {
    Tensor p({1}, {1.0});
    Tensor g({1}, {0.5});
    Tensor v({1});
    sgdm_step(p, g, v, 0.1, 1.0, 0.9);
    CHECK(v[0] == 0.5);
    CHECK(p[0] == doctest::Approx(0.95).epsilon(1e-15));
    sgdm_step(p, g, v, 0.1, 1.0, 0.9);
    // v = 0.9*0.5 + 0.5; total displacement lr*g*(2 + momentum).
    CHECK(v[0] == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(p[0] == doctest::Approx(1.0 - 2.9 * 0.1 * 0.5).epsilon(1e-14));
  }

  TEST_CASE("zero momentum reduces to plain sgd") {
    Tensor p({2}, {1.0, -1.0});
    Tensor g({2}, {0.25, -0.5});
    Tensor v({2});
    sgdm_step(p, g, v, 0.01, 1.0, 0.0);
    CHECK(p[0] == doctest::Approx(1.0 - 0.01 * 0.25).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(-1.0 + 0.01 * 0.5).epsilon(1e-15));
  }

  TEST_CASE("lr factor scales the step") {
    Tensor p1({1}, {0.0}), p2({1}, {0.0});
    Tensor g({1}, {1.0});
    Tensor v1({1}), v2({1});
    sgdm_step(p1, g, v1, 1e-4, 1.0, 0.0);
    sgdm_step(p2, g, v2, 1e-4, 20.0, 0.0);
    CHECK(p2[0] == doctest::Approx(20.0 * p1[0]).epsilon(1e-12));
    CHECK(p2[0] == doctest::Approx(-2e-3).epsilon(1e-15));
  }

  TEST_CASE("lr factor zero freezes the value but not the velocity") {
    Tensor p({1}, {3.0});
    Tensor g({1}, {1.0});
    Tensor v({1});
    sgdm_step(p, g, v, 0.1, 0.0, 0.9);
    CHECK(p[0] == 3.0);
    CHECK(v[0] == 1.0);
    CHECK_THROWS_AS(sgdm_step(p, g, v, 0.1, -1.0, 0.9),
                    std::invalid_argument);
  }

  TEST_CASE("frozen layers are skipped entirely") {
    RngState rng(300);
    Network net = build_preset("minivgg", 1, 2, rng, 16, 16);
    net.layers[0].frozen = true;
    const Tensor w_before = net.layers[0].weight;

    const Tensor x = random_image(1, 16, 16, 301);
    const ForwardTrace t = network_forward(net, x);
    NetworkGrads grads = alloc_grads(net);
    network_backward(net, t, 0, grads);
    NetworkGrads velocity = alloc_grads(net);
    sgdm_apply(net, grads, velocity, 0.1, 0.9);

    for (std::size_t i = 0; i < w_before.size(); ++i)
      CHECK(net.layers[0].weight[i] == w_before[i]);
    for (std::size_t i = 0; i < velocity[0].weight.size(); ++i)
      CHECK(velocity[0].weight[i] == 0.0);
    // Unfrozen layers did move (index 3 is the second conv).
    bool moved = false;
    for (std::size_t i = 0; i < velocity[3].weight.size() && !moved; ++i)
      moved = velocity[3].weight[i] != 0.0;
    CHECK(moved);
  }

  TEST_CASE("stop rule") {
    TrainConfig cfg;
    cfg.stop_window = 50;
    cfg.stop_threshold = 0.995;
    cfg.max_epochs = 30;

    std::vector<double> history;
    CHECK(!should_stop(history, 0, cfg));
    CHECK(should_stop(history, 30, cfg));
    CHECK(should_stop(history, 200, cfg));

    history.assign(49, 1.0);
    CHECK(!should_stop(history, 1, cfg));  // window not yet full
    history.push_back(1.0);
    CHECK(should_stop(history, 1, cfg));

    history.assign(50, 0.99);
    CHECK(!should_stop(history, 1, cfg));

    // Only the trailing window counts.
    history.assign(50, 0.0);
    history.insert(history.end(), 50, 1.0);
    CHECK(should_stop(history, 1, cfg));
    history.push_back(0.0);  // one bad batch drags the mean to 49/50 = 0.98
    CHECK(!should_stop(history, 1, cfg));
  }

  TEST_CASE("85/15 split sizes match the floor rule") {
    RngState rng(302);
    Dataset d = labeled_dataset({1511, 1592}, 303);
    auto [train, test] = split_85_15(d, rng);

    std::vector<std::size_t> train_per_class(2, 0), test_per_class(2, 0);
    for (const Sample& s : train.samples) ++train_per_class[s.label];
    for (const Sample& s : test.samples) ++test_per_class[s.label];
    CHECK(train_per_class[0] == 1284);
    CHECK(test_per_class[0] == 227);
    CHECK(train_per_class[1] == 1353);
    CHECK(test_per_class[1] == 239);
    CHECK(train.class_names == d.class_names);
  }

  TEST_CASE("85/15 split is a partition") {
    RngState rng(304);
    Dataset d = labeled_dataset({20, 7}, 305);
    auto [train, test] = split_85_15(d, rng);
    CHECK(train.samples.size() + test.samples.size() == 27);

    std::size_t train0 = 0;
    for (const Sample& s : train.samples)
      if (s.label == 0) ++train0;
    CHECK(train0 == 17);  // floor(0.85*20)
    CHECK(train.samples.size() - train0 == 5);  // floor(0.85*7)

    std::vector<double> all = pixel_values(d);
    Dataset joined;
    joined.samples = train.samples;
    joined.samples.insert(joined.samples.end(), test.samples.begin(),
                          test.samples.end());
    CHECK(pixel_values(joined) == all);
  }

  TEST_CASE("split rejects an empty class") {
    RngState rng(306);
    Dataset d = labeled_dataset({4, 4}, 307);
    d.class_names.push_back("ghost");
    CHECK_THROWS_AS(split_85_15(d, rng), std::invalid_argument);
  }

  TEST_CASE("kfold sizes and partition") {
    RngState rng(308);
    Dataset d = labeled_dataset({11}, 309);
    auto folds = kfold(d, 5, rng);
    REQUIRE(folds.size() == 5);

    std::multiset<std::size_t> sizes;
    for (auto& [tr, va] : folds) {
      CHECK(tr.samples.size() + va.samples.size() == 11);
      sizes.insert(va.samples.size());

      Dataset joined;
      joined.samples = tr.samples;
      joined.samples.insert(joined.samples.end(), va.samples.begin(),
                            va.samples.end());
      CHECK(pixel_values(joined) == pixel_values(d));
    }
    CHECK(sizes == std::multiset<std::size_t>{2, 2, 2, 2, 3});

    // Validation folds are pairwise disjoint and cover everything.
    std::vector<double> all_val;
    for (auto& [tr, va] : folds)
      for (const Sample& s : va.samples) all_val.push_back(s.image[0]);
    std::sort(all_val.begin(), all_val.end());
    CHECK(all_val == pixel_values(d));
  }

  TEST_CASE("kfold rejects bad k") {
    RngState rng(310);
    Dataset d = labeled_dataset({10}, 311);
    CHECK_THROWS_AS(kfold(d, 1, rng), std::invalid_argument);
    CHECK_THROWS_AS(kfold(d, 11, rng), std::invalid_argument);
  }

  TEST_CASE("training is deterministic per seed") {
    Dataset d = halves_dataset(4, 16, 312);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.base_lr = 0.01;
    cfg.max_epochs = 3;
    cfg.seed = 313;
    cfg.augment = true;

    RngState init1(314), init2(314);
    Network n1 = build_preset("minivgg", 1, 2, init1, 16, 16);
    Network n2 = build_preset("minivgg", 1, 2, init2, 16, 16);
    RngState s1(315), s2(315);
    TrainHistory h1 = train_loop(n1, d, cfg, s1);
    TrainHistory h2 = train_loop(n2, d, cfg, s2);

    REQUIRE(h1.batches.size() == h2.batches.size());
    for (std::size_t i = 0; i < h1.batches.size(); ++i) {
      CHECK(h1.batches[i].loss == h2.batches[i].loss);
      CHECK(h1.batches[i].accuracy == h2.batches[i].accuracy);
    }
    for (std::size_t l = 0; l < n1.layers.size(); ++l)
      for (std::size_t i = 0; i < n1.layers[l].weight.size(); ++i)
        CHECK(n1.layers[l].weight[i] == n2.layers[l].weight[i]);
  }

  TEST_CASE("augmentation changes the training trajectory") {
    Dataset d = halves_dataset(4, 16, 316);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.base_lr = 0.01;
    cfg.max_epochs = 2;
    cfg.seed = 317;

    RngState init1(318), init2(318);
    Network n1 = build_preset("minivgg", 1, 2, init1, 16, 16);
    Network n2 = build_preset("minivgg", 1, 2, init2, 16, 16);
    cfg.augment = true;
    RngState s1(319);
    train_loop(n1, d, cfg, s1);
    cfg.augment = false;
    RngState s2(319);
    train_loop(n2, d, cfg, s2);

    bool differ = false;
    for (std::size_t i = 0; i < n1.layers[0].weight.size() && !differ; ++i)
      differ = n1.layers[0].weight[i] != n2.layers[0].weight[i];
    CHECK(differ);
  }

  TEST_CASE("short final batch is kept") {
    Dataset d = halves_dataset(3, 16, 320);  // 6 samples
    TrainConfig cfg;
    cfg.batch_size = 4;  // 4 + 2
    cfg.base_lr = 1e-3;
    cfg.max_epochs = 1;
    cfg.seed = 321;
    cfg.augment = false;

    RngState init(322);
    Network net = build_preset("minivgg", 1, 2, init, 16, 16);
    RngState shuffle(323);
    TrainHistory h = train_loop(net, d, cfg, shuffle);
    REQUIRE(h.batches.size() == 2);
    CHECK(h.batches[0].epoch == 0);
    CHECK(h.batches[0].batch == 0);
    CHECK(h.batches[1].batch == 1);
    CHECK(h.epochs_done == 1);
    CHECK(!h.stopped_early);
  }

  TEST_CASE("a separable toy problem trains to the stop rule") {
    Dataset d = halves_dataset(4, 16, 324);
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.base_lr = 0.02;
    cfg.max_epochs = 400;
    cfg.stop_window = 10;
    cfg.stop_threshold = 0.995;
    cfg.seed = 325;
    cfg.augment = false;

    RngState init(326);
    Network net = build_preset("minivgg", 1, 2, init, 16, 16);
    RngState shuffle(327);
    TrainHistory h = train_loop(net, d, cfg, shuffle);

    CHECK(h.stopped_early);
    CHECK(h.epochs_done < cfg.max_epochs);
    const Metrics m = evaluate(net, d);
    CHECK(m.overall_accuracy == 1.0);
    // Later losses land well under the first ones.
    CHECK(h.batches.back().loss < 0.5 * h.batches.front().loss);
  }

  TEST_CASE("non-finite loss aborts with context") {
    Dataset d = halves_dataset(2, 16, 328);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.max_epochs = 1;
    cfg.seed = 329;
    cfg.augment = false;

    RngState init(330);
    Network net = build_preset("minivgg", 1, 2, init, 16, 16);
    net.layers[0].weight[0] = std::numeric_limits<double>::quiet_NaN();
    RngState shuffle(331);
    try {
      train_loop(net, d, cfg, shuffle);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("batch") != std::string::npos);
    }
  }

  TEST_CASE("evaluate on a hand-checkable head") {
    Network net = identity_head_net();
    Dataset d;
    d.class_names = {"a", "b"};
    d.samples.push_back({two_channel(1.0, 0.0), 0, Tensor{}});  // right
    d.samples.push_back({two_channel(0.0, 1.0), 0, Tensor{}});  // wrong
    d.samples.push_back({two_channel(0.0, 1.0), 1, Tensor{}});  // right

    const Metrics m = evaluate(net, d);
    CHECK(m.overall_accuracy == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(m.per_class_accuracy[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.per_class_accuracy[1] == 1.0);
    REQUIRE(m.confusion.size() == 2);
    CHECK(m.confusion[0] == std::vector<std::size_t>{1, 1});
    CHECK(m.confusion[1] == std::vector<std::size_t>{0, 1});

    Dataset empty;
    empty.class_names = {"a", "b"};
    CHECK_THROWS_AS(evaluate(net, empty), std::invalid_argument);
  }

  TEST_CASE("cross validation averages the fold accuracies") {
    Dataset d = halves_dataset(5, 16, 332);  // 10 samples, k=5
    RngState init(333);
    Network base = build_preset("minivgg", 1, 2, init, 16, 16);

    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.base_lr = 0.02;
    cfg.max_epochs = 20;
    cfg.seed = 334;
    cfg.augment = false;

    const CrossvalResult r = cross_validate(base, d, 5, cfg);
    REQUIRE(r.fold_accuracies.size() == 5);
    double mean = 0.0;
    for (double a : r.fold_accuracies) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
      mean += a;
    }
    mean /= 5.0;
    CHECK(std::abs(mean - r.mean_accuracy) < 1e-12);
  }
}
