#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "picarz/error.hpp"
#include "picarz/metrics.hpp"
#include "picarz/random.hpp"

using namespace picarz;

TEST_SUITE("metrics") {
  TEST_CASE("rmspe hand case") {
    CHECK(rmspe(Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, -1.0)) == doctest::Approx(1.0));
    CHECK(rmspe(Eigen::Vector2d(0.0, 2.0), Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(1.0));
    CHECK(rmspe(Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(2.0, 0.0)) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(rmspe(Eigen::Vector2d::Zero(), Eigen::Vector3d::Zero()), InputError);
  }

  TEST_CASE("AUC equals the pair-counting oracle, ties included") {
    Rng rng(1);
    for (int rep = 0; rep < 30; ++rep) {
      const Index n = 5 + rep;
      Eigen::VectorXd labels(n), scores(n);
      for (Index i = 0; i < n; ++i) {
        labels[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
        scores[i] = std::floor(rng.uniform() * 6.0) / 6.0;  // coarse, so ties are common
      }
      labels[0] = 1.0;
      labels[1] = 0.0;
      CHECK(auc(labels, scores) == oracle::pair_auc(labels, scores));
    }
    CHECK(auc(Eigen::Vector4d(0, 0, 1, 1), Eigen::Vector4d(0.1, 0.2, 0.3, 0.4)) == 1.0);
    CHECK(auc(Eigen::Vector4d(0, 0, 1, 1), Eigen::Vector4d(0.5, 0.5, 0.5, 0.5)) == 0.5);
  }

  TEST_CASE("AUC is invariant to monotone transforms of the score") {
    Rng rng(2);
    Eigen::VectorXd labels(50), scores(50);
    for (Index i = 0; i < 50; ++i) {
      labels[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      scores[i] = rng.normal();
    }
    const Eigen::VectorXd transformed = (2.0 * scores.array()).exp() + 3.0;
    CHECK(auc(labels, scores) == auc(labels, transformed));
  }

  TEST_CASE("batch-means ESS: iid, AR(1), monotone in autocorrelation") {
    Rng rng(3);
    const Eigen::VectorXd iid = rng.normal_vector(100000);
    const BatchMeans b = ess_batch_means(iid);
    CHECK(b.batches == 316);
    CHECK(std::abs(b.ess / 100000.0 - 1.0) <= 0.2);

    const Index t = 1000000;
    const BatchMeans ar = ess_batch_means(oracle::ar1(0.9, t, 4));
    const double expected = (1.0 - 0.9) / (1.0 + 0.9);
    CHECK(std::abs(ar.ess / static_cast<double>(t) - expected) <= 0.3 * expected);

    int monotone = 0;
    for (std::uint64_t r = 0; r < 50; ++r) {
      const double low = ess_batch_means(oracle::ar1(0.3, 20000, 100 + r)).ess;
      const double high = ess_batch_means(oracle::ar1(0.8, 20000, 100 + r)).ess;
      if (high < low) ++monotone;
    }
    CHECK(monotone == 50);
    CHECK_THROWS_AS(ess_batch_means(Eigen::VectorXd::Zero(99)), InputError);
  }

  TEST_CASE("quantile, credible interval and coverage") {
    CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
    CHECK(quantile({1.0, 2.0}, 0.0) == 1.0);
    CHECK(quantile({1.0, 2.0}, 1.0) == 2.0);
    CHECK(median({5.0, 1.0, 3.0, 2.0}) == 2.5);

    Eigen::VectorXd d(101);
    for (Index i = 0; i <= 100; ++i) d[i] = static_cast<double>(i);
    const Interval iv = credible_interval(d, 0.9);
    CHECK(iv.lower == doctest::Approx(5.0));
    CHECK(iv.upper == doctest::Approx(95.0));

    CHECK(coverage({{0, 1}, {0, 1}, {2, 3}, {0, 1}}, {0.5, 1.0, 0.0, 2.0}) == 0.5);

    std::vector<Eigen::MatrixXd> draws;
    std::vector<Eigen::VectorXd> truth;
    for (int r = 0; r < 4; ++r) {
      Eigen::MatrixXd m(101, 2);
      m.col(0) = d;
      m.col(1) = d.array() + 1000.0;
      draws.push_back(m);
      truth.push_back(Eigen::Vector2d(r < 3 ? 50.0 : 99.0, 50.0));
    }
    const Eigen::VectorXd c = coverage(draws, truth, 0.95);
    CHECK(c[0] == 0.75);
    CHECK(c[1] == 0.0);
  }

  TEST_CASE("validation report") {
    const Eigen::Vector4d truth(0, 0, 2, 4), pred(0.5, 0.5, 2, 3), score(0.1, 0.2, 0.8, 0.9);
    const ValidationReport r = validate(truth, pred, score);
    CHECK(r.n_cv == 4);
    CHECK(r.n_positive == 2);
    CHECK(r.auc == 1.0);
    CHECK(r.rmspe_total == doctest::Approx(std::sqrt((0.25 + 0.25 + 0.0 + 1.0) / 4.0)));
    CHECK(r.rmspe_positive == doctest::Approx(std::sqrt(0.5)));
  }

  TEST_CASE("diagnostics report ESS per second") {
    Rng rng(5);
    Eigen::MatrixXd draws(400, 2);
    draws.col(0) = rng.normal_vector(400);
    draws.col(1) = oracle::ar1(0.9, 400, 6);
    const ChainDiagnostics diag = diagnose(draws, {"a", "b"}, 2.0);
    REQUIRE(diag.parameters.size() == 2);
    CHECK(diag.parameters[0].ess_per_second == doctest::Approx(diag.parameters[0].ess / 2.0));
    CHECK(diag.parameters[1].ess < diag.parameters[0].ess);
    CHECK_THROWS_AS(diagnose(draws, {"a"}, 1.0), InputError);
  }

  TEST_CASE("report medians per family and method") {
    const std::vector<ReportRow> rows = {
        {"hurdle_count", "picar", 1.0, 2.0, 0.7, 1.0},
        {"hurdle_count", "picar", 3.0, 4.0, 0.9, 3.0},
        {"hurdle_count", "frk", 5.0, 6.0, 0.6, 2.0},
    };
    const std::vector<ReportRow> m = aggregate_medians(rows);
    REQUIRE(m.size() == 2);
    CHECK(m[0].method == "picar");
    CHECK(m[0].rmspe_total == 2.0);
    CHECK(m[0].auc == doctest::Approx(0.8));
    CHECK(m[1].method == "frk");
    CHECK(m[1].rmspe_total == 5.0);

    std::stringstream s;
    write_report(s, rows);
    const std::vector<ReportRow> back = read_report(s);
    REQUIRE(back.size() == 3);
    CHECK(back[1].minutes == 3.0);
    CHECK(back[2].family == "hurdle_count");
  }
}
