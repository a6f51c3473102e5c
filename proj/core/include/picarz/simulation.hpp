#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "picarz/geometry.hpp"
#include "picarz/likelihoods.hpp"
#include "picarz/random.hpp"

namespace picarz {

struct MaternParams {
  double nu = 0.5;     ///< 0.5, 1.5 or 2.5
  double range = 0.2;  ///< phi > 0
  double sill = 1.0;   ///< sigma^2 > 0
};

/// Closed-form half-integer Matern covariance at distance h >= 0.
double matern_cov(double h, const MaternParams& params);

/// Dense covariance over the sites.
Eigen::MatrixXd covariance_matrix(const std::vector<Point2>& sites, const MaternParams& params);

/// Lower Cholesky factor; one retry with 1e-8 * max diagonal added.
Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd cov);

/// Copy of the sites with exact duplicates nudged by multiples of 1e-9.
std::vector<Point2> jitter_duplicates(std::vector<Point2> sites);

struct CrossGPConfig {
  MaternParams occurrence;
  MaternParams prevalence;
  double rho = 0.7;
};

struct CrossFields {
  Eigen::VectorXd w_o;
  Eigen::VectorXd w_p;
};

/// Factors the two covariances once; each draw is
/// W_o = L_o z1, W_p = L_p (rho z1 + sqrt(1 - rho^2) z2).
class CrossFieldSampler {
 public:
  CrossFieldSampler(const std::vector<Point2>& sites, const CrossGPConfig& config);

  CrossFields sample(Rng& rng) const;
  const Eigen::MatrixXd& factor_o() const { return l_o_; }
  const Eigen::MatrixXd& factor_p() const { return l_p_; }

 private:
  double rho_;
  Eigen::MatrixXd l_o_, l_p_;
};

CrossFields sample_cross_fields(const std::vector<Point2>& sites, const CrossGPConfig& config, std::uint64_t seed);

enum class CovariateDistribution { uniform, standard_normal };

std::string_view to_string(CovariateDistribution d);
CovariateDistribution parse_covariates(std::string_view name);

struct SimulationConfig {
  TwoPartFamily family;
  Link link = Link::logit;
  Index n = 1000;
  Index n_cv = 400;
  CrossGPConfig fields;
  Eigen::VectorXd beta_o = Eigen::VectorXd::Ones(2);
  Eigen::VectorXd beta_p = Eigen::VectorXd::Ones(2);
  double nugget = 0.1;  ///< semi-continuous families only
  CovariateDistribution covariates = CovariateDistribution::uniform;
};

struct SyntheticDataset {
  std::vector<Point2> sites;
  Eigen::MatrixXd x;
  Eigen::VectorXd w_o, w_p;
  Eigen::VectorXd z;
  std::vector<std::uint8_t> occupied;  ///< the drawn O(s); empty for loaded data
  std::vector<Index> train, validate;
  TwoPartFamily family;
  std::uint64_t seed = 0;
  SimulationConfig config;

  Index size() const { return z.size(); }
};

/// Sites uniform on the unit square; the first n rows are the training split.
SyntheticDataset generate_dataset(const SimulationConfig& config, std::uint64_t seed);

struct BisquareKnot {
  Point2 center;
  double aperture = 0.0;
  int resolution = 0;
};

struct BisquareDesign {
  std::vector<BisquareKnot> knots;
  Eigen::MatrixXd phi;  ///< sites x knots
};

/// (1 - (d / w)^2)^2 for d < w, else 0.
double bisquare(double distance, double aperture);

/// 2x2, 4x4 and 8x8 knot grids at cell centres of the box expanded by
/// `expansion` of its span on every side. Aperture: 1.5 x the like-resolution spacing.
std::vector<BisquareKnot> bisquare_knots(const BoundingBox& domain, double expansion = 0.15);
Eigen::MatrixXd bisquare_matrix(const std::vector<Point2>& sites, const std::vector<BisquareKnot>& knots);
BisquareDesign build_bisquare_design(const std::vector<Point2>& sites, const BoundingBox& domain);

}  // namespace picarz
