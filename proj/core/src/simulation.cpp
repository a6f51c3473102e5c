#include "picarz/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include <Eigen/Cholesky>

#include "picarz/error.hpp"

namespace picarz {
namespace {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

double matern_cov(double h, const MaternParams& p) {
  if (!(h >= 0.0)) throw InputError("matern_cov: negative distance");
  if (!(p.range > 0.0) || !(p.sill > 0.0)) throw InputError("matern_cov: range and sill must be positive");
  const double r = h / p.range;
  if (std::abs(p.nu - 0.5) < 1e-12) return p.sill * std::exp(-r);
  if (std::abs(p.nu - 1.5) < 1e-12) {
    const double a = std::sqrt(3.0) * r;
    return p.sill * (1.0 + a) * std::exp(-a);
  }
  if (std::abs(p.nu - 2.5) < 1e-12) {
    const double a = std::sqrt(5.0) * r;
    return p.sill * (1.0 + a + a * a / 3.0) * std::exp(-a);
  }
  throw InputError("unsupported Matern smoothness");
}

Eigen::MatrixXd covariance_matrix(const std::vector<Point2>& sites, const MaternParams& params) {
  const auto n = static_cast<Index>(sites.size());
  Eigen::MatrixXd c(n, n);
  for (Index j = 0; j < n; ++j) {
    c(j, j) = matern_cov(0.0, params);
    for (Index i = j + 1; i < n; ++i) {
      c(i, j) = c(j, i) = matern_cov(distance(sites[static_cast<std::size_t>(i)], sites[static_cast<std::size_t>(j)]), params);
    }
  }
  return c;
}

Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += 1e-8 * cov.diagonal().maxCoeff();
    llt.compute(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance Cholesky failed after jitter");
  }
  return llt.matrixL();
}

std::vector<Point2> jitter_duplicates(std::vector<Point2> sites) {
  std::map<std::pair<double, double>, int> seen;
  for (Point2& p : sites) {
    const int k = seen[{p.x, p.y}]++;
    if (k > 0) p.x += 1e-9 * k;
  }
  return sites;
}

CrossFieldSampler::CrossFieldSampler(const std::vector<Point2>& sites, const CrossGPConfig& config)
    : rho_(config.rho) {
  if (!(std::abs(config.rho) <= 1.0)) throw InputError("cross-correlation must lie in [-1, 1]");
  const std::vector<Point2> clean = jitter_duplicates(sites);
  l_o_ = cholesky_with_jitter(covariance_matrix(clean, config.occurrence));
  const bool same = config.occurrence.nu == config.prevalence.nu &&
                    config.occurrence.range == config.prevalence.range &&
                    config.occurrence.sill == config.prevalence.sill;
  l_p_ = same ? l_o_ : cholesky_with_jitter(covariance_matrix(clean, config.prevalence));
}

CrossFields CrossFieldSampler::sample(Rng& rng) const {
  const Index n = l_o_.rows();
  const Eigen::VectorXd z1 = rng.normal_vector(n);
  const Eigen::VectorXd z2 = rng.normal_vector(n);
  CrossFields f;
  f.w_o = l_o_.triangularView<Eigen::Lower>() * z1;
  const Eigen::VectorXd mix = rho_ * z1 + std::sqrt(std::max(0.0, 1.0 - rho_ * rho_)) * z2;
  f.w_p = l_p_.triangularView<Eigen::Lower>() * mix;
  return f;
}

CrossFields sample_cross_fields(const std::vector<Point2>& sites, const CrossGPConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  return CrossFieldSampler(sites, config).sample(rng);
}

std::string_view to_string(CovariateDistribution d) {
  return d == CovariateDistribution::uniform ? "uniform" : "standard-normal";
}

CovariateDistribution parse_covariates(std::string_view name) {
  if (name == "uniform") return CovariateDistribution::uniform;
  if (name == "standard-normal") return CovariateDistribution::standard_normal;
  throw InputError("unknown covariate distribution '" + std::string(name) + "'");
}

SyntheticDataset generate_dataset(const SimulationConfig& config, std::uint64_t seed) {
  if (config.n < 1 || config.n_cv < 0) throw InputError("simulation sizes must be positive");
  if (config.beta_o.size() != config.beta_p.size()) throw InputError("beta_o and beta_p lengths differ");
  if (config.family.has_nugget() && !(config.nugget > 0.0)) throw InputError("nugget must be positive");
  const Index total = config.n + config.n_cv;
  const Index k = config.beta_o.size();

  SyntheticDataset d;
  d.family = config.family;
  d.seed = seed;
  d.config = config;
  const Rng root(seed);

  Rng site_rng = root.split(1);
  d.sites.resize(static_cast<std::size_t>(total));
  for (Point2& p : d.sites) {
    p.x = site_rng.uniform();
    p.y = site_rng.uniform();
  }

  Rng cov_rng = root.split(2);
  d.x.resize(total, k);
  for (Index i = 0; i < total; ++i) {
    for (Index j = 0; j < k; ++j) {
      d.x(i, j) = config.covariates == CovariateDistribution::uniform ? cov_rng.uniform() : cov_rng.normal();
    }
  }

  Rng field_rng = root.split(3);
  CrossFields f = CrossFieldSampler(d.sites, config.fields).sample(field_rng);
  d.w_o = std::move(f.w_o);
  d.w_p = std::move(f.w_p);

  Rng obs_rng = root.split(4);
  const Eigen::VectorXd eta_o = d.x * config.beta_o + d.w_o;
  const Eigen::VectorXd eta_p = d.x * config.beta_p + d.w_p;
  d.z = Eigen::VectorXd::Zero(total);
  d.occupied.assign(static_cast<std::size_t>(total), 0);
  const double sd = std::sqrt(config.nugget);
  for (Index i = 0; i < total; ++i) {
    const double pi = occurrence_prob(eta_o[i], config.link);
    const bool present = obs_rng.bernoulli(pi);
    // Always consume the prevalence draw so the stream does not depend on O.
    double value = 0.0;
    switch (config.family.tag) {
      case Family::hurdle_count:
        value = static_cast<double>(obs_rng.zero_truncated_poisson(std::exp(eta_p[i])));
        break;
      case Family::mixture_poisson:
        value = static_cast<double>(obs_rng.poisson(std::exp(eta_p[i])));
        break;
      case Family::hurdle_lognormal:
        value = std::exp(eta_p[i] + sd * obs_rng.normal());
        break;
      case Family::mixture_tobit: {
        const double latent = eta_p[i] + sd * obs_rng.normal();
        value = latent > config.family.tobit_threshold ? latent : 0.0;
        break;
      }
    }
    d.occupied[static_cast<std::size_t>(i)] = present ? 1 : 0;
    d.z[i] = present ? value : 0.0;
  }

  for (Index i = 0; i < config.n; ++i) d.train.push_back(i);
  for (Index i = config.n; i < total; ++i) d.validate.push_back(i);
  return d;
}

double bisquare(double distance, double aperture) {
  if (!(distance < aperture)) return 0.0;
  const double u = distance / aperture;
  const double v = 1.0 - u * u;
  return v * v;
}

std::vector<BisquareKnot> bisquare_knots(const BoundingBox& domain, double expansion) {
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) throw InputError("bisquare domain must have positive area");
  const BoundingBox box = domain.padded(expansion);
  std::vector<BisquareKnot> knots;
  int resolution = 0;
  for (int k : {2, 4, 8}) {
    ++resolution;
    const double dx = box.width() / k, dy = box.height() / k;
    const double aperture = 1.5 * std::min(dx, dy);
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < k; ++i) {
        knots.push_back({{box.xmin + (i + 0.5) * dx, box.ymin + (j + 0.5) * dy}, aperture, resolution});
      }
    }
  }
  return knots;
}

Eigen::MatrixXd bisquare_matrix(const std::vector<Point2>& sites, const std::vector<BisquareKnot>& knots) {
  Eigen::MatrixXd phi(static_cast<Index>(sites.size()), static_cast<Index>(knots.size()));
  for (std::size_t c = 0; c < knots.size(); ++c) {
    for (std::size_t i = 0; i < sites.size(); ++i) {
      phi(static_cast<Index>(i), static_cast<Index>(c)) = bisquare(distance(sites[i], knots[c].center), knots[c].aperture);
    }
  }
  return phi;
}

BisquareDesign build_bisquare_design(const std::vector<Point2>& sites, const BoundingBox& domain) {
  BisquareDesign d;
  d.knots = bisquare_knots(domain);
  d.phi = bisquare_matrix(sites, d.knots);
  return d;
}

}  // namespace picarz
