#include "picarz/metropolis.hpp"

#include <cmath>

#include "picarz/error.hpp"

namespace picarz {

AdaptiveProposal::AdaptiveProposal(std::string name, Index dim, const AdaptationSettings& settings)
    : name_(std::move(name)), dim_(dim), settings_(settings) {
  if (dim < 1) throw InputError("proposal block '" + name_ + "' has no components");
  if (!(settings.initial_scale > 0.0)) throw InputError("proposal scale must be positive");
  if (!(settings.target_acceptance > 0.0 && settings.target_acceptance < 1.0)) {
    throw InputError("target acceptance must lie in (0, 1)");
  }
  if (settings.window < 1) throw InputError("adaptation window must be positive");
  diagonal_ = dim > settings.diagonal_above;
  mean_ = Eigen::VectorXd::Zero(dim);
  if (diagonal_) {
    factor_ = Eigen::VectorXd::Constant(dim, settings.initial_scale);
    scatter_ = Eigen::VectorXd::Zero(dim);
  } else {
    factor_ = settings.initial_scale * Eigen::MatrixXd::Identity(dim, dim);
    if (settings.adapt_covariance) scatter_ = Eigen::MatrixXd::Zero(dim, dim);
  }
  noise_.resize(dim);
}

void AdaptiveProposal::propose(Rng& rng, const Eigen::VectorXd& current, Eigen::VectorXd& out) const {
  for (Index i = 0; i < dim_; ++i) noise_[i] = rng.normal();
  const double s = std::exp(log_scale_);
  if (diagonal_) {
    out = current + s * factor_.col(0).cwiseProduct(noise_);
  } else {
    noise_ = factor_.triangularView<Eigen::Lower>() * noise_;
    out = current + s * noise_;
  }
}

double AdaptiveProposal::propose(Rng& rng, double current) const {
  return current + std::exp(log_scale_) * factor_(0, 0) * rng.normal();
}

bool AdaptiveProposal::accept(Rng& rng, double log_ratio) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(rng.uniform()) < log_ratio;
}

double AdaptiveProposal::acceptance_rate() const {
  return proposals_ == 0 ? 0.0 : static_cast<double>(accepts_) / static_cast<double>(proposals_);
}

double AdaptiveProposal::frozen_acceptance_rate() const {
  return frozen_proposals_ == 0
             ? 0.0
             : static_cast<double>(frozen_accepts_) / static_cast<double>(frozen_proposals_);
}

void AdaptiveProposal::record(double state, bool accepted) {
  Eigen::VectorXd v(1);
  v[0] = state;
  record(v, accepted);
}

void AdaptiveProposal::record(const Eigen::VectorXd& state, bool accepted) {
  ++proposals_;
  if (accepted) ++accepts_;
  if (frozen_) {
    ++frozen_proposals_;
    if (accepted) ++frozen_accepts_;
    return;
  }
  const double gain = std::pow(1.0 + static_cast<double>(proposals_) / 50.0, -settings_.step_exponent);
  log_scale_ += gain * ((accepted ? 1.0 : 0.0) - settings_.target_acceptance);
  if (!settings_.adapt_covariance) return;

  // Welford update of the running mean and scatter.
  ++recorded_;
  const Eigen::VectorXd delta = state - mean_;
  mean_ += delta / static_cast<double>(recorded_);
  if (diagonal_) {
    scatter_.col(0) += delta.cwiseProduct(state - mean_);
  } else {
    scatter_.selfadjointView<Eigen::Lower>().rankUpdate(delta, 1.0 - 1.0 / static_cast<double>(recorded_));
  }
  const Index warmup = std::max<Index>(settings_.window, diagonal_ ? 2 : dim_ + 10);
  if (recorded_ >= warmup && recorded_ % settings_.window == 0) refresh_factor();
}

void AdaptiveProposal::refresh_factor() {
  const double denom = static_cast<double>(recorded_ - 1);
  const double optimal = 2.38 / std::sqrt(static_cast<double>(dim_));
  if (diagonal_) {
    Eigen::VectorXd var = scatter_.col(0) / denom;
    const double floor = 1e-10 * std::max(1e-300, var.mean());
    factor_.col(0) = optimal * (var.array() + floor).sqrt().matrix();
  } else {
    Eigen::MatrixXd cov = scatter_.selfadjointView<Eigen::Lower>();
    cov /= denom;
    const double jitter = 1e-10 * std::max(1e-300, cov.trace() / static_cast<double>(dim_));
    cov.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) return;  // keep the previous factor
    factor_ = optimal * Eigen::MatrixXd(llt.matrixL());
  }
  if (!refreshed_) log_scale_ = 0.0;
  refreshed_ = true;
}

}  // namespace picarz
