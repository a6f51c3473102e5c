#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "picarz/geometry.hpp"
#include "picarz/likelihoods.hpp"
#include "picarz/spectral.hpp"

namespace picarz {

/// Z_o*: 1 where z > 0, else 0.
Eigen::VectorXd binarize_occurrence(const Eigen::VectorXd& z);

struct PositiveSubset {
  Eigen::VectorXd z;
  Eigen::MatrixXd x;
  std::vector<Point2> sites;   ///< empty when no sites were given
  std::vector<Index> rows;     ///< positions in the input, increasing
};

/// Rows with z > 0 in their original order. Throws "prevalence subset empty".
PositiveSubset positive_subset(const Eigen::VectorXd& z, const Eigen::MatrixXd& x,
                               const std::vector<Point2>& sites = {});

enum class GlmKind { logistic, zero_truncated_poisson, lognormal, linear };

struct GlmOptions {
  double ridge = 1e-6;
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
};

struct GlmFit {
  GlmKind kind = GlmKind::linear;
  Eigen::VectorXd coefficients;
  double residual_variance = 0.0;  ///< lognormal (log scale) and linear only
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Ridge-stabilized maximum likelihood. Logistic: IRLS. Zero-truncated
/// Poisson: Newton on the exact truncated likelihood. Lognormal: least
/// squares on log y. Linear: least squares. Newton iterations stop at the
/// gradient tolerance or when the Newton decrement is below 1e-12 of the
/// objective. Throws NumericalError after max_iterations.
GlmFit fit_glm(GlmKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GlmOptions& options = {});

/// Response-scale mean: probability, E[y | y > 0], exp(mu + s2 / 2), or mu.
Eigen::VectorXd glm_predict(const GlmFit& fit, const Eigen::MatrixXd& x);

/// GLM used for the positive values of a family.
GlmKind prevalence_glm(const TwoPartFamily& family);

struct RankGrid {
  Index p_max = 0;
  std::vector<Index> candidates;

  /// h equally spaced integers in [2, p_max], rounded and deduplicated.
  static RankGrid equally_spaced(Index p_max, Index h);
  /// p_max = min(floor(m / 4), 250).
  static RankGrid defaults(Index vertex_count, Index h = 25);
};

struct RankScore {
  Index rank = 0;
  double auc_occurrence = 0.0;
  double rmspe_occurrence = 0.0;
  double rmspe_prevalence = 0.0;
};

struct RankChoice {
  Index p_o = 0;
  Index p_p = 0;
  std::vector<RankScore> table;
};

struct RankSelectionOptions {
  double holdout_fraction = 0.2;
  std::uint64_t split_seed = 1;
  /// Scores closer than this count as ties.
  double tie_tolerance = 0.0;
  GlmOptions glm;
};

/// Fits [X, A M_{1..p}] for every candidate p; p_o maximizes holdout AUC
/// (ties: smaller rmspe, then smaller rank), p_p minimizes holdout rmspe on
/// the positive values (ties: smaller rank).
RankChoice select_ranks(const Eigen::VectorXd& z, const Eigen::MatrixXd& x, const SparseRowMatrix& projector,
                        const MoranBasis& pool, const TwoPartFamily& family, const RankGrid& grid,
                        const RankSelectionOptions& options = {});

/// Columns: rank,auc_occurrence,rmspe_occurrence,rmspe_prevalence.
void write_score_table(std::ostream& out, const std::vector<RankScore>& table);

}  // namespace picarz
