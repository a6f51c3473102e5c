#pragma once

#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "picarz/geometry.hpp"
#include "picarz/random.hpp"

namespace picarz {

struct AdaptationSettings {
  double target_acceptance = 0.234;
  Index window = 200;            ///< iterations between covariance refreshes
  double initial_scale = 0.1;    ///< proposal s.d. before the first refresh
  double step_exponent = 0.6;    ///< Robbins-Monro gain ~ (1 + t / 50)^-exponent
  Index diagonal_above = 200;    ///< blocks larger than this adapt a diagonal covariance
  bool adapt_covariance = true;
};

/// Adaptive random-walk proposal for one Metropolis block.
///
/// The proposal is x + s * L z with z standard normal. Before the first
/// covariance refresh L = initial_scale * I; afterwards L = 2.38 / sqrt(d) *
/// chol(C) with C the running covariance of recorded states. log s follows a
/// Robbins-Monro recursion towards the target acceptance rate. After freeze()
/// both s and L are constant.
class AdaptiveProposal {
 public:
  AdaptiveProposal() = default;
  AdaptiveProposal(std::string name, Index dim, const AdaptationSettings& settings);

  const std::string& name() const { return name_; }
  Index dim() const { return dim_; }

  void propose(Rng& rng, const Eigen::VectorXd& current, Eigen::VectorXd& out) const;
  double propose(Rng& rng, double current) const;

  /// Metropolis accept step for a log target difference.
  static bool accept(Rng& rng, double log_ratio);

  /// Record the outcome of one proposal and the resulting chain state.
  void record(const Eigen::VectorXd& state, bool accepted);
  void record(double state, bool accepted);

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  double log_scale() const { return log_scale_; }
  const Eigen::MatrixXd& factor() const { return factor_; }
  bool diagonal() const { return diagonal_; }

  long proposals() const { return proposals_; }
  long accepts() const { return accepts_; }
  /// Counts restricted to proposals made after freeze().
  long frozen_proposals() const { return frozen_proposals_; }
  long frozen_accepts() const { return frozen_accepts_; }
  double acceptance_rate() const;
  double frozen_acceptance_rate() const;

 private:
  void refresh_factor();

  std::string name_;
  Index dim_ = 0;
  AdaptationSettings settings_;
  bool diagonal_ = false;
  bool frozen_ = false;
  bool refreshed_ = false;
  double log_scale_ = 0.0;
  Eigen::MatrixXd factor_;  // lower triangular, or a diagonal stored as one column
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;  // full or diagonal (one column) sum of squared deviations
  long recorded_ = 0;
  long proposals_ = 0, accepts_ = 0;
  long frozen_proposals_ = 0, frozen_accepts_ = 0;
  mutable Eigen::VectorXd noise_;
};

}  // namespace picarz
