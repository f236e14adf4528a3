#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "chimp/experiment.hpp"
#include "chimp/training.hpp"
#include "appendix.hpp"
#include "oracles.hpp"

using namespace chimp;

namespace {

std::vector<double> untied_h(std::size_t n, std::mt19937_64& rng) {
  for (;;) {
    auto h = oracle::random_h(n, rng);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) ok = ok && std::abs(h[i] - h[j]) > 1e-3;
    if (ok) return h;
  }
}

}  // namespace

TEST_CASE("loss and mse") {
  const std::vector<double> l{1.0, 0.0}, y{0.5, 0.5};
  CHECK(loss(l, l) == 0.0);
  CHECK(loss(std::vector<double>{1.0}, std::vector<double>{0.0}) == 0.5);
  CHECK(loss(l, y) == doctest::Approx(0.25));
  CHECK(mse(l, y) == doctest::Approx(0.25));
  CHECK_THROWS_AS(loss(l, std::vector<double>{1.0}), StructuralError);
}

TEST_CASE("derivative weights") {
  CHECK(max_derivative_weights(std::vector<double>{0.3, 0.7}) == std::vector<double>{0.0, 1.0});
  CHECK(max_derivative_weights(std::vector<double>{0.5, 0.5}) == std::vector<double>{0.5, 0.5});
  CHECK(max_derivative_weights(std::vector<double>{0.2, 0.9, 0.9, 0.1}) == std::vector<double>{0, 0.5, 0.5, 0});
  CHECK(min_derivative_weights(std::vector<double>{0.2, 0.9, 0.2}) == std::vector<double>{0.5, 0, 0.5});
  CHECK_THROWS_AS(max_derivative_weights(std::vector<double>{}), StructuralError);
}

TEST_CASE("config checks") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.check());
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.check(), StructuralError);
  cfg = TrainConfig{};
  cfg.init_low = 0.3;
  CHECK_THROWS_AS(cfg.check(), StructuralError);
  CHECK(batch_mode_from_string("full-batch") == BatchMode::full_batch);
  CHECK_THROWS_AS(batch_mode_from_string("minibatch"), StructuralError);
}

TEST_CASE("backward_params examples") {
  const std::vector<double> h{0.6, 0.2, 0.9};
  const auto p = ChimpParams::encode(table1_measure(4));
  const auto pass = forward(p, h);

  SUBCASE("zero error gives zero gradients") {
    const auto b = backward_params(p, h, pass.y, pass);
    for (double d : b.d_raw) CHECK(d == 0.0);
    CHECK(b.loss == 0.0);
  }

  SUBCASE("top increment") {
    const auto b = backward_params(p, h, 0.0, pass);
    CHECK(b.d_raw[7] == doctest::Approx(pass.y * 0.2 * (p.raw(7) > 0 ? 1.0 : 0.0)));
  }

  SUBCASE("stale cache") {
    const std::vector<double> other{0.1, 0.2, 0.3};
    CHECK_THROWS_AS(backward_params(p, other, 0.0, pass), std::logic_error);
  }
}

TEST_CASE("backward_params equals the n = 3 hand-derived formulas exactly") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> raw(-0.2, 0.5), lab(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    ChimpParams p(3);
    for (Subset a = 1; a < 8; ++a) p.raw(a) = raw(rng);
    const auto h = oracle::random_h(3, rng);
    const double l = lab(rng);
    const auto pass = forward(p, h);
    const auto b = backward_params(p, h, l, pass);
    const auto ref = appendix::weight_gradients(p, pass, l);
    for (Subset a = 1; a < 8; ++a) {
      CHECK(b.d_measure[a] == ref.d_g[a]);
      CHECK(b.d_raw[a] == ref.d_raw[a]);
    }
  }
}

TEST_CASE("backward_params splits tied argmaxes equally") {
  ChimpParams p(3, std::vector<double>(8, 0.2));
  const std::vector<double> h{0.7, 0.1, 0.4};
  const auto pass = forward(p, h);
  const auto b = backward_params(p, h, 0.0, pass);
  const auto ref = appendix::weight_gradients(p, pass, 0.0);
  for (Subset a = 1; a < 8; ++a) CHECK(b.d_raw[a] == ref.d_raw[a]);
}

TEST_CASE("backward_inputs matches the n = 3 hand-derived formulas") {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 500; ++t) {
    const auto p = ChimpParams::uniform(3, -0.1, 0.5, rng);
    const auto h = untied_h(3, rng);
    const auto pass = forward(p, h);
    const auto d = backward_inputs(p, h, 0.3, pass);
    const auto ref = appendix::input_gradients(pass, 0.3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(d[i] == doctest::Approx(ref[i]).epsilon(1e-14).scale(1.0));
  }
}

TEST_CASE("backward_inputs special measures") {
  std::mt19937_64 rng(43);
  for (std::size_t n = 2; n <= 6; ++n) {
    const auto h = untied_h(n, rng);
    const auto mean = ChimpParams::encode(make_special(SpecialKind::mean, n));
    auto pass = forward(mean, h);
    auto d = backward_inputs(mean, h, 0.0, pass);
    for (double x : d) CHECK(x == doctest::Approx(pass.y / n).epsilon(1e-12));

    const auto max = ChimpParams::encode(make_special(SpecialKind::max, n));
    pass = forward(max, h);
    d = backward_inputs(max, h, 0.0, pass);
    const auto top = std::max_element(h.begin(), h.end()) - h.begin();
    for (std::size_t i = 0; i < n; ++i) CHECK(d[i] == doctest::Approx(i == std::size_t(top) ? pass.y : 0.0));
  }
}

TEST_CASE("property: finite differences agree") {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> raw(-0.2, 0.5), lab(0.0, 1.0);
  for (std::size_t n = 2; n <= 5; ++n) {
    for (int t = 0; t < 40; ++t) {
      ChimpParams p(n);
      for (Subset a = 1; a < lattice_size(n); ++a) p.raw(a) = raw(rng);
      const auto h = oracle::random_h(n, rng);
      const auto r = grad_check(p, h, lab(rng));
      CHECK(r.max_rel_error < 1e-5);
      CHECK(r.checked > 0);
    }
  }
}

TEST_CASE("reverse-mode accumulation agrees with the path sum") {
  std::mt19937_64 rng(45);
  for (std::size_t n = 2; n <= 7; ++n) {
    const auto p = ChimpParams::uniform(n, -0.1, 0.4, rng);
    const auto h = oracle::random_h(n, rng);
    const auto pass = forward(p, h);
    const auto b = backward_params(p, h, 0.25, pass);
    std::vector<double> acc(lattice_size(n), 0.0), scratch;
    detail::accumulate_param_gradient(p, pass, pass.y - 0.25, acc, scratch);
    for (Subset a = 1; a < acc.size(); ++a) CHECK(acc[a] == doctest::Approx(b.d_raw[a]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("grad_check edge cases") {
  ChimpParams p(3, std::vector<double>(8, 0.15));
  const std::vector<double> tied{0.4, 0.4, 0.7};
  const auto r = grad_check(p, tied, 0.2);
  bool flagged = false;
  for (const auto& c : r.skipped) flagged = flagged || (c.kind == GradCheckCoordinate::Kind::input && c.index < 2);
  CHECK(flagged);
  CHECK_THROWS_AS(grad_check(p, tied, 0.2, 0.0), StructuralError);
}

TEST_CASE("sgd_fit") {
  SUBCASE("full batch decreases the loss on FM2 data") {
    const auto data = generate(table1_measure(2), 300, 0.0, 5);
    TrainConfig cfg;
    cfg.batch_mode = BatchMode::full_batch;
    cfg.epochs = 100;
    const auto fit = sgd_fit(data, cfg);
    REQUIRE(fit.history.size() == 101);
    CHECK(fit.history[100] < fit.history[0]);
    CHECK(validate(materialize(fit.params).g).valid());
  }

  SUBCASE("idempotent data is fit immediately") {
    Dataset data(3);
    for (double c : {0.1, 0.4, 0.8}) data.add(std::vector<double>{c, c, c}, c);
    const auto fit = sgd_fit(data, TrainConfig{.epochs = 5}, ChimpParams::encode(make_special(SpecialKind::mean, 3)));
    CHECK(fit.history[0] < 1e-30);
    CHECK(fit.history.back() < 1e-30);
  }

  SUBCASE("same seed, same result") {
    const auto data = generate(table1_measure(3), 50, 0.1, 6);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 99;
    const auto a = sgd_fit(data, cfg), b = sgd_fit(data, cfg);
    for (Subset s = 1; s < 8; ++s) CHECK(a.params.raw(s) == b.params.raw(s));
  }

  SUBCASE("non-finite loss aborts") {
    Dataset data(2);
    data.add(std::vector<double>{1e200, 1e200}, 0.0);
    TrainConfig cfg;
    cfg.learning_rate = 1.0;
    cfg.epochs = 3;
    CHECK_THROWS_AS(sgd_fit(data, cfg), NumericError);
  }

  SUBCASE("mismatched initial params") {
    const auto data = generate(table1_measure(1), 10, 0.0, 1);
    CHECK_THROWS_AS(sgd_fit(data, TrainConfig{}, ChimpParams(4)), StructuralError);
  }
}

TEST_CASE("history CSV") {
  std::ostringstream out;
  write_history_csv(std::vector<double>{0.5, 0.25}, out);
  CHECK(out.str() == "epoch,train_mse\n0,5.0000000000000000e-01\n1,2.5000000000000000e-01\n");
}
