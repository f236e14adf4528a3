#include <doctest.h>

#include <cmath>
#include <random>

#include "chimp/experiment.hpp"
#include "chimp/xai.hpp"
#include "oracles.hpp"

using namespace chimp;

TEST_CASE("shapley examples") {
  for (double phi : shapley(make_special(SpecialKind::mean, 3))) CHECK(phi == doctest::Approx(1.0 / 3.0));

  const auto phi = shapley(table1_measure(4));
  CHECK(phi[0] == doctest::Approx(0.183333).epsilon(1e-5));
  CHECK(phi[1] == doctest::Approx(0.333333).epsilon(1e-5));
  CHECK(phi[2] == doctest::Approx(0.483333).epsilon(1e-5));

  FuzzyMeasure bad(2, {0.0, 0.8, 0.3, 0.5});
  CHECK_THROWS_AS(shapley(bad), StructuralError);
}

TEST_CASE("interaction examples") {
  CHECK(interaction(make_special(SpecialKind::min, 2))[0][1] == doctest::Approx(1.0));
  CHECK(interaction(make_special(SpecialKind::max, 2))[0][1] == doctest::Approx(-1.0));
  CHECK(std::isnan(interaction(make_special(SpecialKind::max, 2))[0][0]));
  CHECK_THROWS_AS(interaction(make_special(SpecialKind::max, 1)), StructuralError);
}

TEST_CASE("property: indices match the permutation and factorial oracles") {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + t % 5;
    const auto g = oracle::random_measure(n, rng, t % 2 ? 1.0 : 1.4);
    const auto phi = shapley(g);
    const auto ref = oracle::shapley(g);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(phi[i] == doctest::Approx(ref[i]).epsilon(1e-12));
      sum += phi[i];
    }
    CHECK(std::abs(sum - g.total()) < 1e-12);

    const auto I = interaction(g);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        CHECK(I[i][j] == I[j][i]);
        CHECK(I[i][j] == doctest::Approx(oracle::interaction(g, i, j)).epsilon(1e-12).scale(1.0));
        if (g.total() == 1.0) CHECK(std::abs(I[i][j]) <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("property: additive measures have no interaction") {
  std::mt19937_64 rng(52);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + t % 6;
    const auto I = interaction(oracle::random_additive(n, rng));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) CHECK(std::abs(I[i][j]) < 1e-14);
    const auto phi = shapley(make_special(SpecialKind::mean, n));
    for (double x : phi) CHECK(x == doctest::Approx(1.0 / n).epsilon(1e-13));
  }
}

TEST_CASE("operator distances") {
  SUBCASE("special measures sit at zero") {
    for (std::size_t n = 2; n <= 7; ++n) {
      CHECK(operator_distances(make_special(SpecialKind::max, n)).max == 0.0);
      CHECK(operator_distances(make_special(SpecialKind::min, n)).min == 0.0);
      CHECK(operator_distances(make_special(SpecialKind::mean, n)).mean < 1e-15);
      CHECK(operator_distances(make_special(SpecialKind::mean, n)).los < 1e-15);
      std::mt19937_64 rng(n);
      const auto w = oracle::random_simplex(n, rng);
      CHECK(operator_distances(make_special(SpecialKind::los, n, w)).los < 1e-15);
    }
  }

  SUBCASE("max is one away from min") {
    CHECK(operator_distances(make_special(SpecialKind::max, 4)).min == doctest::Approx(1.0));
  }

  SUBCASE("FM1 is cardinality symmetric") { CHECK(operator_distances(table1_measure(1)).los < 1e-15); }

  SUBCASE("normalized scale divides by g(X)") {
    auto v = std::vector<double>(8);
    for (Subset a = 0; a < 8; ++a) v[a] = 2.0 * cardinality(a) / 3.0;
    const FuzzyMeasure g(3, v);
    CHECK(operator_distances(g, DistanceScale::normalized).mean < 1e-15);
    CHECK(operator_distances(g).mean > 0.3);
  }

  SUBCASE("hand RMS") {
    // interior values of FM4 against 1/3, 2/3
    const auto g = table1_measure(4);
    double s = 0.0;
    for (Subset a = 1; a < 7; ++a) s += std::pow(g[a] - cardinality(a) / 3.0, 2);
    CHECK(operator_distances(g).mean == doctest::Approx(std::sqrt(s / 6.0)));
  }
}

TEST_CASE("walk_stats") {
  SUBCASE("sorted rows give one dominant walk") {
    Dataset d(3);
    std::mt19937_64 rng(53);
    for (int r = 0; r < 20; ++r) {
      auto h = oracle::random_h(3, rng);
      std::sort(h.begin(), h.end(), std::greater<>());
      d.add(h, 0.0);
    }
    const auto s = walk_stats(d);
    CHECK(s.observed_walks.size() == 1);
    CHECK(s.walk_coverage == doctest::Approx(1.0 / 6.0));
    REQUIRE(s.dominant_walk.has_value());
    CHECK(s.dominant_walk->first == Walk{0, 1, 2});
    CHECK(s.dominant_walk->second == doctest::Approx(1.0));
  }

  SUBCASE("uniform rows cover every walk") {
    const auto d = generate(make_special(SpecialKind::mean, 3), 3000, 0.0, 54);
    const auto s = walk_stats(d);
    CHECK(s.walk_coverage == 1.0);
    CHECK_FALSE(s.dominant_walk.has_value());
    double total = 0.0;
    for (const auto& [w, c] : s.observed_walks) total += c;
    CHECK(total == doctest::Approx(3000.0));
  }

  SUBCASE("single row visits n variables") {
    Dataset d(4);
    d.add(std::vector<double>{0.1, 0.5, 0.3, 0.9}, 0.0);
    const auto s = walk_stats(d);
    CHECK(s.variable_coverage == doctest::Approx(3.0 / 14.0));
    CHECK(s.variable_counts[0b1000] == 1.0);
    CHECK(s.variable_counts[0b1010] == 1.0);
    CHECK(s.variable_counts[0b1110] == 1.0);
    CHECK(s.variable_counts[0b1111] == 1.0);
  }

  SUBCASE("tied rows split their count") {
    Dataset d(2);
    d.add(std::vector<double>{0.5, 0.5}, 0.0);
    const auto s = walk_stats(d);
    CHECK(s.observed_walks.at(Walk{0, 1}) == 0.5);
    CHECK(s.observed_walks.at(Walk{1, 0}) == 0.5);
  }

  CHECK_THROWS_AS(walk_stats(Dataset(3)), StructuralError);
}

TEST_CASE("trust") {
  Dataset d(3);
  d.add(std::vector<double>{0.9, 0.5, 0.1}, 0.0);
  const auto s = walk_stats(d);
  CHECK(trust(s, std::vector<double>{0.8, 0.6, 0.2}) == 1.0);
  CHECK(trust(s, std::vector<double>{0.1, 0.5, 0.9}) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(trust(s, std::vector<double>{0.1}), StructuralError);
}

TEST_CASE("explain and rendering") {
  const auto g = table1_measure(4);
  const auto d = generate(g, 50, 0.0, 55);
  const auto rep = explain(g, &d);
  CHECK(rep.trust.size() == 50);
  CHECK(rep.support.has_value());
  for (std::size_t i = 0; i < 3; ++i) CHECK(rep.shapley_normalized[i] == doctest::Approx(rep.shapley[i]));

  const auto j = to_json(rep);
  CHECK(j.contains("shapley"));
  CHECK(j.contains("interaction"));
  CHECK(j.contains("distances"));
  CHECK(j.contains("support"));

  const auto text = render_summary(rep);
  CHECK(text.find("shapley") != std::string::npos);
  const auto svg = shapley_svg(rep);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);

  const auto bare = explain(g);
  CHECK_FALSE(bare.support.has_value());
  CHECK(bare.trust.empty());
}
