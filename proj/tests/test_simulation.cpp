#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "picarz/error.hpp"
#include "picarz/likelihoods.hpp"
#include "picarz/simulation.hpp"

using namespace picarz;

namespace {

// General Matern through the modified Bessel function.
double matern_bessel(double h, double nu, double range, double sill) {
  if (h == 0.0) return sill;
  const double u = std::sqrt(2.0 * nu) * h / range;
  return sill * std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(u, nu) * std::cyl_bessel_k(nu, u);
}

std::vector<Point2> grid_sites(int k) {
  std::vector<Point2> s;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) s.push_back({(i + 0.5) / k, (j + 0.5) / k});
  return s;
}

}  // namespace

TEST_SUITE("simulation") {
  TEST_CASE("half-integer Matern matches the Bessel form") {
    for (double nu : {0.5, 1.5, 2.5}) {
      for (double h : {0.0, 0.01, 0.1, 0.3, 1.0, 2.5}) {
        const MaternParams p{nu, 0.25, 1.7};
        CHECK(matern_cov(h, p) == doctest::Approx(matern_bessel(h, nu, 0.25, 1.7)).epsilon(1e-10));
      }
    }
    CHECK_THROWS_AS(matern_cov(0.1, {1.0, 0.2, 1.0}), InputError);
    CHECK_THROWS_AS(matern_cov(-0.1, {0.5, 0.2, 1.0}), InputError);
    CHECK_THROWS_AS(matern_cov(0.1, {0.5, 0.0, 1.0}), InputError);
  }

  TEST_CASE("covariance matrix is symmetric with the sill on the diagonal") {
    const auto sites = grid_sites(5);
    const Eigen::MatrixXd c = covariance_matrix(sites, {1.5, 0.3, 2.0});
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((c.diagonal().array() - 2.0).abs().maxCoeff() == 0.0);
    const Eigen::MatrixXd l = cholesky_with_jitter(c);
    CHECK((l * l.transpose() - c).cwiseAbs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("duplicate sites are separated") {
    const std::vector<Point2> s = jitter_duplicates({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.1, 0.2}});
    std::set<std::pair<double, double>> seen;
    for (const Point2& p : s) seen.insert({p.x, p.y});
    CHECK(seen.size() == 4);
    CHECK(s[3].x == 0.1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(s[i].x - 0.5) + std::abs(s[i].y - 0.5) <= 1e-8);
  }

  TEST_CASE("cross-field covariance matches rho L_o L_p' by Monte Carlo") {
    Rng site_rng(1);
    std::vector<Point2> sites(20);
    for (auto& p : sites) p = {site_rng.uniform(), site_rng.uniform()};
    CrossGPConfig cfg;
    cfg.occurrence = {0.5, 0.2, 1.0};
    cfg.prevalence = {1.5, 0.3, 0.5};
    cfg.rho = 0.7;
    const CrossFieldSampler sampler(sites, cfg);
    const Eigen::MatrixXd co = covariance_matrix(sites, cfg.occurrence);
    const Eigen::MatrixXd cp = covariance_matrix(sites, cfg.prevalence);
    const Eigen::MatrixXd cross = cfg.rho * sampler.factor_o() * sampler.factor_p().transpose();

    const int draws = 40000;
    Rng rng(2);
    Eigen::MatrixXd s_op = Eigen::MatrixXd::Zero(20, 20), s_oo = s_op, s_pp = s_op;
    Eigen::MatrixXd q_op = s_op;  // sums of squared products for the standard error
    for (int r = 0; r < draws; ++r) {
      const CrossFields f = sampler.sample(rng);
      const Eigen::MatrixXd op = f.w_o * f.w_p.transpose();
      s_op += op;
      q_op += op.cwiseProduct(op);
      s_oo += f.w_o * f.w_o.transpose();
      s_pp += f.w_p * f.w_p.transpose();
    }
    const double n = draws;
    int outside = 0;
    for (Index i = 0; i < 20; ++i) {
      for (Index j = 0; j < 20; ++j) {
        const double mean = s_op(i, j) / n;
        const double se = std::sqrt(std::max(q_op(i, j) / n - mean * mean, 1e-300) / n);
        if (std::abs(mean - cross(i, j)) > 4.0 * se) ++outside;
      }
    }
    CHECK(outside == 0);
    CHECK((s_oo / n - co).cwiseAbs().maxCoeff() <= 0.05);
    CHECK((s_pp / n - cp).cwiseAbs().maxCoeff() <= 0.05);
  }

  TEST_CASE("rho = 1 with equal marginals gives identical fields") {
    const auto sites = grid_sites(3);
    CrossGPConfig cfg;
    cfg.rho = 1.0;
    const CrossFields a = sample_cross_fields(sites, cfg, 3);
    const CrossFieldSampler s(sites, cfg);
    Rng rng(3);
    const CrossFields b = s.sample(rng);
    CHECK(a.w_o == b.w_o);
    // With equal marginals and rho = 1 the fields coincide.
    CHECK((a.w_o - a.w_p).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("datasets have the requested shape and are seed-deterministic") {
    for (Family fam : {Family::hurdle_count, Family::hurdle_lognormal, Family::mixture_poisson, Family::mixture_tobit}) {
      SimulationConfig c;
      c.family.tag = fam;
      c.n = 120;
      c.n_cv = 30;
      const SyntheticDataset a = generate_dataset(c, 7);
      const SyntheticDataset b = generate_dataset(c, 7);
      const SyntheticDataset other = generate_dataset(c, 8);
      CHECK(a.size() == 150);
      CHECK(a.train.size() == 120);
      CHECK(a.validate.size() == 30);
      CHECK(a.train.front() == 0);
      CHECK(a.validate.front() == 120);
      CHECK(a.x.cols() == 2);
      CHECK(a.z == b.z);
      CHECK(a.x == b.x);
      CHECK(a.z != other.z);
      for (Index i = 0; i < a.size(); ++i) {
        CHECK_NOTHROW(check_observation(a.family, a.z[i]));
        if (a.z[i] > 0.0) CHECK(a.occupied[static_cast<std::size_t>(i)] == 1);
        if (fam == Family::hurdle_count || fam == Family::hurdle_lognormal) {
          CHECK((a.z[i] > 0.0) == (a.occupied[static_cast<std::size_t>(i)] == 1));
        }
        CHECK(a.sites[static_cast<std::size_t>(i)].x >= 0.0);
        CHECK(a.sites[static_cast<std::size_t>(i)].x <= 1.0);
        CHECK(a.x(i, 0) >= 0.0);
        CHECK(a.x(i, 0) <= 1.0);
      }
    }
    SimulationConfig bad;
    bad.beta_p = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(generate_dataset(bad, 1), InputError);
  }

  TEST_CASE("zero-truncated Poisson sampler mean") {
    Rng rng(9);
    for (double lambda : {0.2, 1.0, 4.0}) {
      double s = 0.0, s2 = 0.0;
      const int n = 200000;
      for (int i = 0; i < n; ++i) {
        const double v = static_cast<double>(rng.zero_truncated_poisson(lambda));
        CHECK_FALSE(v < 1.0);
        s += v;
        s2 += v * v;
      }
      const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
      CHECK(std::abs(mean - lambda / (1.0 - std::exp(-lambda))) <= 4.0 * se);
    }
  }

  TEST_CASE("bisquare basis: 84 knots at three resolutions with compact support") {
    const BoundingBox unit{0.0, 1.0, 0.0, 1.0};
    const std::vector<BisquareKnot> knots = bisquare_knots(unit);
    CHECK(knots.size() == 84);
    CHECK(std::count_if(knots.begin(), knots.end(), [](const BisquareKnot& k) { return k.resolution == 1; }) == 4);
    CHECK(std::count_if(knots.begin(), knots.end(), [](const BisquareKnot& k) { return k.resolution == 3; }) == 64);
    CHECK(bisquare(0.0, 0.3) == 1.0);
    CHECK(bisquare(0.3, 0.3) == 0.0);
    CHECK(bisquare(0.5, 0.3) == 0.0);
    CHECK(bisquare(0.15, 0.3) == doctest::Approx(0.5625));

    Rng rng(10);
    std::vector<Point2> sites(100);
    for (auto& p : sites) p = {rng.uniform(), rng.uniform()};
    const BisquareDesign d = build_bisquare_design(sites, unit);
    CHECK(d.phi.rows() == 100);
    CHECK(d.phi.cols() == 84);
    CHECK(d.phi.minCoeff() >= 0.0);
    CHECK(d.phi.maxCoeff() <= 1.0);
    for (Index i = 0; i < 100; ++i) {
      for (Index c = 0; c < 84; ++c) {
        const double dist = std::hypot(sites[static_cast<std::size_t>(i)].x - knots[static_cast<std::size_t>(c)].center.x,
                                       sites[static_cast<std::size_t>(i)].y - knots[static_cast<std::size_t>(c)].center.y);
        if (dist >= knots[static_cast<std::size_t>(c)].aperture) CHECK(d.phi(i, c) == 0.0);
      }
      CHECK(d.phi.row(i).maxCoeff() > 0.0);
    }
  }
}
