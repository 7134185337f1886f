#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "graphdict/eval.hpp"
#include "oracles.hpp"

using namespace graphdict;

namespace {

EdgeSet bits(std::initializer_list<int> v) {
  EdgeSet e(static_cast<Index>(v.size()));
  Index i = 0;
  for (int b : v) e(i++) = b != 0;
  return e;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("mcc examples") {
    CHECK(mcc(bits({1, 0, 1, 0}), bits({1, 0, 1, 0})) == doctest::Approx(1.0));
    CHECK(mcc(bits({0, 1, 0, 1}), bits({1, 0, 1, 0})) == doctest::Approx(-1.0));
    CHECK(mcc(bits({1, 1, 1, 1}), bits({1, 0, 1, 0})) == 0.0);
    CHECK(mcc(bits({0, 0, 0, 0}), bits({1, 0, 1, 0})) == 0.0);
    ConfusionCounts c;
    c.tp = 3;
    c.tn = 4;
    c.fp = 1;
    c.fn = 2;
    CHECK(mcc(c) == doctest::Approx((12.0 - 2.0) / std::sqrt(4.0 * 5.0 * 5.0 * 6.0)));
    const auto cc = confusion(bits({1, 1, 0, 0, 1}), bits({1, 0, 0, 1, 1}));
    CHECK(cc.tp == 2);
    CHECK(cc.fp == 1);
    CHECK(cc.tn == 1);
    CHECK(cc.fn == 1);
    CHECK(cc.total() == 5);
    CHECK_THROWS_AS(confusion(bits({1}), bits({1, 0})), std::invalid_argument);
  }

  TEST_CASE("mcc symmetries") {
    std::mt19937_64 g(1);
    std::bernoulli_distribution b(0.4);
    for (int trial = 0; trial < 50; ++trial) {
      EdgeSet p(30), t(30);
      for (Index i = 0; i < 30; ++i) {
        p(i) = b(g);
        t(i) = b(g);
      }
      const double m = mcc(p, t);
      CHECK(m >= -1.0);
      CHECK(m <= 1.0);
      CHECK(mcc(t, p) == doctest::Approx(m));
      CHECK(mcc(!p, !t) == doctest::Approx(m));
      CHECK(mcc(!p, t) == doctest::Approx(-m));
    }
  }

  TEST_CASE("thresholding") {
    Vector w(4);
    w << 0.0, 1e-5, 0.5, 2.0;
    const EdgeSet e = threshold_edges(w, 1e-4);
    CHECK_FALSE(e(0));
    CHECK_FALSE(e(1));
    CHECK(e(2));
    CHECK(e(3));
    CHECK_THROWS_AS(threshold_edges(w, -1.0), std::invalid_argument);
  }

  TEST_CASE("instantaneous mcc") {
    std::mt19937_64 g(2);
    Matrix w = oracle::random(3, 45, g, 0.0, 1.0);
    w = (w.array() > 0.7).select(w, 0.0);
    Matrix c = Matrix::Zero(6, 3);
    for (Index t = 0; t < 6; ++t) c(t, t % 3) = 1.0;
    CHECK(mean_instantaneous_mcc(w, c, c * w) == doctest::Approx(1.0));
    // scaling the estimate changes nothing
    CHECK(mean_instantaneous_mcc(7.0 * w, 0.5 * c, c * w) == doctest::Approx(1.0));

    // independent random graphs score near zero
    Matrix truth = oracle::random(400, 45, g, 0.0, 1.0);
    truth = (truth.array() > 0.5).select(truth, 0.0);
    Matrix est = oracle::random(400, 45, g, 0.0, 1.0);
    est = (est.array() > 0.5).select(est, 0.0);
    const auto s = instantaneous_mcc(est, truth);
    double mean = 0;
    for (double v : s) mean += v;
    CHECK(std::abs(mean / 400.0) < 0.03);
    CHECK_THROWS_AS(instantaneous_mcc(est, truth.topRows(3)), std::invalid_argument);
  }

  TEST_CASE("state features") {
    Matrix c(8, 2);
    c << 1, 0, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0;
    const auto f = state_features(c, 2.0);
    CHECK(f[0].occurrences == 2);
    CHECK(f[0].active_count == 5);
    CHECK(f[0].coverage == doctest::Approx(2.5));
    CHECK(f[0].avg_duration == doctest::Approx(1.25));
    CHECK(f[1].occurrences == 1);
    CHECK(f[1].coverage == doctest::Approx(1.5));
    const auto none = state_features(Matrix::Zero(4, 1), 1.0);
    CHECK(none[0].occurrences == 0);
    CHECK(none[0].avg_duration == 0.0);
    CHECK_THROWS_AS(state_features(c, 0.0), std::invalid_argument);
  }

  TEST_CASE("grid enumeration") {
    GridSpec g{{{"a", {1, 2}}, {"b", {10, 20, 30}}}};
    CHECK(g.size() == 6);
    CHECK(g.point(0)[0].second == 1);
    CHECK(g.point(1)[1].second == 20);
    CHECK(g.point(3)[0].second == 2);
    CHECK(g.point(3)[1].second == 10);
    CHECK_THROWS_AS(GridSpec{}.validate(), std::invalid_argument);
    CHECK_THROWS_AS((GridSpec{{{"a", {}}}}.validate()), std::invalid_argument);
  }

  TEST_CASE("grid search picks the best point") {
    GridSpec g{{{"x", {-1, 0, 2, 3}}}};
    const auto r = grid_search(g, [](const GridPoint& p, std::uint64_t) { return -std::abs(p.get("x", 0) - 2.1); }, 0);
    CHECK(r.best == 2);
    CHECK(r.best_row().point.get("x", 0) == 2);
    CHECK(r.best_row().point.get("missing", 5.0) == 5.0);

    GridSpec single{{{"x", {4}}}};
    CHECK(grid_search(single, [](const GridPoint&, std::uint64_t) { return 0.3; }, 0).best == 0);
  }

  TEST_CASE("ties go to the first point") {
    GridSpec g{{{"x", {1, 1, 1}}}};
    CHECK(grid_search(g, [](const GridPoint&, std::uint64_t) { return 0.5; }, 0).best == 0);
  }

  TEST_CASE("failed points are skipped, all failing throws") {
    GridSpec g{{{"alpha", {0.1, 1e300, 0.2}}}};
    auto scorer = [](const GridPoint& p, std::uint64_t) {
      const double a = p.get("alpha", 0);
      if (a > 1e10) throw std::runtime_error("absurd");
      return a;
    };
    const auto r = grid_search(g, scorer, 0);
    CHECK(r.rows[1].failed);
    CHECK(r.rows[1].error == "absurd");
    CHECK(r.best == 2);
    GridSpec nan{{{"x", {1}}}};
    CHECK_THROWS_AS(grid_search(nan, [](const GridPoint&, std::uint64_t) { return std::nan(""); }, 0),
                    std::runtime_error);
    CHECK_THROWS_AS(grid_search(g, [](const GridPoint&, std::uint64_t) -> double { throw std::runtime_error("x"); }, 0),
                    std::runtime_error);
  }

  TEST_CASE("grid search is independent of thread count") {
    GridSpec g{{{"a", {1, 2, 3, 4}}, {"b", {1, 2, 3}}}};
    auto scorer = [](const GridPoint& p, std::uint64_t seed) {
      std::mt19937_64 r(seed);
      return p.get("a", 0) * 0.1 + std::uniform_real_distribution<double>(0, 1)(r);
    };
    const auto one = grid_search(g, scorer, 77, 1);
    const auto four = grid_search(g, scorer, 77, 4);
    CHECK(one.best == four.best);
    for (std::size_t i = 0; i < one.rows.size(); ++i) CHECK(one.rows[i].score == four.rows[i].score);
    const auto other = grid_search(g, scorer, 78, 1);
    CHECK(other.rows[0].score != one.rows[0].score);
  }

  TEST_CASE("score table") {
    GridSpec g{{{"a", {1, 2}}}};
    const auto r = grid_search(g, [](const GridPoint& p, std::uint64_t) { return p.get("a", 0); }, 0);
    const std::string csv = score_table_csv(g, r);
    CHECK(csv.rfind("a,score,failed,wall_seconds\n1,1,0,", 0) == 0);
  }

  TEST_CASE("parallel_for runs every job and rethrows") {
    std::vector<int> hit(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                      if (i == 5) throw std::logic_error("boom");
                    }),
                    std::logic_error);
  }
}
