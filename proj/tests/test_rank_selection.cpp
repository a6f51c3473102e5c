#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "picarz/error.hpp"
#include "picarz/pipeline.hpp"
#include "picarz/rank_selection.hpp"
#include "picarz/simulation.hpp"

using namespace picarz;

namespace {

Eigen::MatrixXd design(Index n, Rng& rng) {
  Eigen::MatrixXd x(n, 2);
  for (Index i = 0; i < n; ++i) x.row(i) << 1.0, rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_SUITE("rank_selection") {
  TEST_CASE("binarize and positive subset keep order") {
    const Eigen::Vector4d z(0.0, 2.0, 0.0, 0.5);
    CHECK(binarize_occurrence(z) == Eigen::Vector4d(0, 1, 0, 1));
    Eigen::MatrixXd x(4, 1);
    x << 10, 20, 30, 40;
    const PositiveSubset s = positive_subset(z, x, {{0, 0}, {1, 1}, {2, 2}, {3, 3}});
    CHECK(s.rows == std::vector<Index>{1, 3});
    CHECK(s.x(1, 0) == 40.0);
    CHECK(s.sites[0].x == 1.0);
    CHECK_THROWS_WITH_AS(positive_subset(Eigen::Vector2d::Zero(), Eigen::MatrixXd::Ones(2, 1)),
                         "prevalence subset empty", InputError);
  }

  TEST_CASE("logistic fit matches a brute-force likelihood maximization") {
    Rng rng(1);
    const Eigen::MatrixXd x = design(400, rng);
    Eigen::VectorXd y(400);
    for (Index i = 0; i < 400; ++i) y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-(0.3 + 1.2 * x(i, 1))))) ? 1.0 : 0.0;
    const GlmFit fit = fit_glm(GlmKind::logistic, x, y);
    const Eigen::Vector2d best = oracle::grid_search_2d(
        [&](const Eigen::Vector2d& b) { return oracle::logistic_loglik(x, y, b); }, Eigen::Vector2d::Zero(), 4.0, 41, 12);
    CHECK((fit.coefficients - best).cwiseAbs().maxCoeff() <= 1e-4);
  }

  TEST_CASE("zero-truncated Poisson fit matches a brute-force likelihood maximization") {
    Rng rng(2);
    const Eigen::MatrixXd x = design(300, rng);
    Eigen::VectorXd y(300);
    for (Index i = 0; i < 300; ++i) y[i] = static_cast<double>(rng.zero_truncated_poisson(std::exp(0.5 + 0.8 * x(i, 1))));
    const GlmFit fit = fit_glm(GlmKind::zero_truncated_poisson, x, y);
    const Eigen::Vector2d best = oracle::grid_search_2d(
        [&](const Eigen::Vector2d& b) { return oracle::ztp_loglik(x, y, b); }, Eigen::Vector2d::Zero(), 4.0, 41, 12);
    CHECK((fit.coefficients - best).cwiseAbs().maxCoeff() <= 1e-4);
    // Stopping rule: Newton decrement g'H^-1 g below 1e-12 of |loglik|, with
    // the score and information computed here from the truncated likelihood.
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    for (Index i = 0; i < x.rows(); ++i) {
      const double lambda = std::exp(x.row(i).dot(fit.coefficients)), e = std::exp(-lambda);
      const double mean = lambda / (1.0 - e);
      const double slope = mean * (1.0 - lambda * e / (1.0 - e));  // d mean / d eta
      g += (y[i] - mean) * x.row(i).transpose();
      h += slope * x.row(i).transpose() * x.row(i);
    }
    const double decrement = g.dot(h.ldlt().solve(g));
    CHECK(decrement <= 1e-12 * std::abs(oracle::ztp_loglik(x, y, fit.coefficients)));
  }

  TEST_CASE("zero-truncated Poisson stays finite when the mean underflows") {
    // One huge column drives eta far below the exp underflow point on the first
    // Newton steps; the truncation normalizer must stay finite there.
    Rng rng(7);
    Eigen::MatrixXd x(200, 3);
    Eigen::VectorXd y(200);
    for (Index i = 0; i < 200; ++i) {
      const double u = rng.uniform(-1.0, 1.0);
      x.row(i) << 1.0, u, (i % 2 == 0 ? 900.0 : 0.0);
      y[i] = static_cast<double>(rng.zero_truncated_poisson(std::exp(0.2 + 0.5 * u)));
      if (i % 2 == 0) y[i] = 1.0;
    }
    const GlmFit fit = fit_glm(GlmKind::zero_truncated_poisson, x, y);
    CHECK(fit.coefficients.allFinite());
    CHECK(glm_predict(fit, x).allFinite());
    CHECK(glm_predict(fit, x).minCoeff() >= 1.0);
  }

  TEST_CASE("lognormal fit is least squares on log y") {
    Rng rng(3);
    const Eigen::MatrixXd x = design(200, rng);
    Eigen::VectorXd y(200);
    for (Index i = 0; i < 200; ++i) y[i] = std::exp(1.0 - 0.5 * x(i, 1) + 0.3 * rng.normal());
    const GlmFit fit = fit_glm(GlmKind::lognormal, x, y);
    const Eigen::VectorXd ly = y.array().log();
    const Eigen::VectorXd closed = (x.transpose() * x).ldlt().solve(x.transpose() * ly);
    CHECK((fit.coefficients - closed).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(fit.residual_variance == doctest::Approx((ly - x * closed).squaredNorm() / 198.0).epsilon(1e-6));
    const Eigen::VectorXd m = glm_predict(fit, x);
    CHECK(m[0] == doctest::Approx(std::exp(x.row(0).dot(fit.coefficients) + 0.5 * fit.residual_variance)));
  }

  TEST_CASE("prevalence GLM per family") {
    CHECK(prevalence_glm({Family::hurdle_count, 0.0}) == GlmKind::zero_truncated_poisson);
    CHECK(prevalence_glm({Family::hurdle_lognormal, 0.0}) == GlmKind::lognormal);
    CHECK(prevalence_glm({Family::mixture_tobit, 0.0}) == GlmKind::linear);
  }

  TEST_CASE("rank grid is equally spaced, deduplicated and bounded") {
    const RankGrid g = RankGrid::equally_spaced(50, 25);
    CHECK(g.candidates.front() == 2);
    CHECK(g.candidates.back() == 50);
    CHECK(g.candidates.size() == 25);
    CHECK(std::is_sorted(g.candidates.begin(), g.candidates.end()));
    CHECK(std::set<Index>(g.candidates.begin(), g.candidates.end()).size() == g.candidates.size());
    for (std::size_t k = 1; k < g.candidates.size(); ++k) CHECK(g.candidates[k] - g.candidates[k - 1] == 2);

    const RankGrid small = RankGrid::equally_spaced(5, 25);
    CHECK(small.candidates == std::vector<Index>{2, 3, 4, 5});
    CHECK(RankGrid::defaults(5888).p_max == 250);
    CHECK(RankGrid::defaults(400).p_max == 100);
    CHECK_THROWS_AS(RankGrid::equally_spaced(1, 5), InputError);
  }

  TEST_CASE("select_ranks returns grid members deterministically") {
    SimulationConfig sc;
    sc.family.tag = Family::hurdle_count;
    sc.n = 400;
    sc.n_cv = 0;
    const SyntheticDataset d = generate_dataset(sc, 4);
    const SpatialBasis b = build_spatial_basis(d, {MeshMode::regular_lattice, 256, 0.1}, 40);
    const RankGrid grid = RankGrid::equally_spaced(40, 8);
    RankSelectionOptions o;
    o.split_seed = 5;
    const RankChoice a = select_ranks(d.z, d.x, b.projector_train, b.basis, d.family, grid, o);
    const RankChoice c = select_ranks(d.z, d.x, b.projector_train, b.basis, d.family, grid, o);
    CHECK(a.p_o == c.p_o);
    CHECK(a.p_p == c.p_p);
    CHECK(std::count(grid.candidates.begin(), grid.candidates.end(), a.p_o) == 1);
    CHECK(std::count(grid.candidates.begin(), grid.candidates.end(), a.p_p) == 1);
    REQUIRE(a.table.size() == grid.candidates.size());

    // The chosen ranks are optimal under the documented ordering.
    double best_auc = -1.0, best_rmspe = 1e300;
    for (const RankScore& s : a.table) {
      best_auc = std::max(best_auc, s.auc_occurrence);
      best_rmspe = std::min(best_rmspe, s.rmspe_prevalence);
    }
    for (const RankScore& s : a.table) {
      if (s.rank == a.p_o) CHECK(s.auc_occurrence == best_auc);
      if (s.rank == a.p_p) CHECK(s.rmspe_prevalence == best_rmspe);
      CHECK(s.auc_occurrence >= 0.0);
      CHECK(s.auc_occurrence <= 1.0);
    }

    std::ostringstream out;
    write_score_table(out, a.table);
    CHECK(out.str().rfind("rank,auc_occurrence,rmspe_occurrence,rmspe_prevalence\n", 0) == 0);

    const RankGrid too_big = RankGrid::equally_spaced(41, 3);
    CHECK_THROWS_AS(select_ranks(d.z, d.x, b.projector_train, b.basis, d.family, too_big, o), InputError);
  }

  TEST_CASE("select_ranks rejects data without positive values") {
    SimulationConfig sc;
    sc.n = 60;
    sc.n_cv = 0;
    const SyntheticDataset d = generate_dataset(sc, 6);
    const SpatialBasis b = build_spatial_basis(d, {MeshMode::regular_lattice, 64, 0.1}, 8);
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(d.z.size());
    CHECK_THROWS_AS(select_ranks(zeros, d.x, b.projector_train, b.basis, d.family, RankGrid::equally_spaced(8, 3)),
                    InputError);
  }
}
