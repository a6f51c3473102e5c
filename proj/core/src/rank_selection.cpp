#include "picarz/rank_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "picarz/csv.hpp"
#include "picarz/error.hpp"
#include "picarz/metrics.hpp"
#include "picarz/random.hpp"

namespace picarz {
namespace {

// log(1 + e^eta)
double softplus(double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

// Mean and d(mean)/d(eta) of a zero-truncated Poisson with theta = e^eta.
void ztp_moments(double eta, double& mean, double& slope) {
  const double theta = std::exp(eta);
  if (theta < 1e-4) {
    // Series in theta; also covers theta underflowing to 0.
    mean = 1.0 + theta * (0.5 + theta / 12.0);
    slope = theta * (0.5 + theta / 6.0);
    return;
  }
  const double q = -std::expm1(-theta);  // 1 - e^-theta
  mean = theta / q;
  slope = theta * (q - theta * std::exp(-theta)) / (q * q);
}

// log(1 - e^-theta) with theta = e^eta, finite for every finite eta.
double ztp_log_norm(double eta) {
  const double theta = std::exp(eta);
  if (theta < 1e-4) return eta + std::log1p(theta * (-0.5 + theta / 6.0));
  return std::log(-std::expm1(-theta));
}

const char* kind_name(GlmKind kind) {
  switch (kind) {
    case GlmKind::logistic: return "logistic";
    case GlmKind::zero_truncated_poisson: return "zero-truncated-poisson";
    case GlmKind::lognormal: return "lognormal";
    case GlmKind::linear: return "linear";
  }
  return "glm";
}

// Penalized log-likelihood, gradient, and negative Hessian at beta.
double newton_terms(GlmKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                    double ridge, Eigen::VectorXd* grad, Eigen::MatrixXd* info) {
  const Eigen::VectorXd eta = x * beta;
  const Index n = x.rows();
  Eigen::VectorXd resid(n), weight(n);
  double ll = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (kind == GlmKind::logistic) {
      ll += y[i] * eta[i] - softplus(eta[i]);
      const double p = 1.0 / (1.0 + std::exp(-eta[i]));
      resid[i] = y[i] - p;
      weight[i] = p * (1.0 - p);
    } else {
      const double theta = std::exp(eta[i]);
      ll += y[i] * eta[i] - theta - ztp_log_norm(eta[i]);
      double mean, slope;
      ztp_moments(eta[i], mean, slope);
      resid[i] = y[i] - mean;
      weight[i] = slope;
    }
  }
  ll -= 0.5 * ridge * beta.squaredNorm();
  if (grad) *grad = x.transpose() * resid - ridge * beta;
  if (info) {
    *info = x.transpose() * weight.asDiagonal() * x;
    info->diagonal().array() += ridge;
  }
  return ll;
}

GlmFit newton_fit(GlmKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GlmOptions& opt) {
  GlmFit fit;
  fit.kind = kind;
  fit.coefficients = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd grad;
  Eigen::MatrixXd info;
  double ll = newton_terms(kind, x, y, fit.coefficients, opt.ridge, &grad, &info);
  for (fit.iterations = 0; fit.iterations < opt.max_iterations; ++fit.iterations) {
    fit.gradient_norm = grad.lpNorm<Eigen::Infinity>();
    if (fit.gradient_norm <= opt.gradient_tolerance) return fit;
    const Eigen::VectorXd step = info.ldlt().solve(grad);
    // Newton decrement: half of it bounds the remaining objective gain.
    // Near quasi-separation the ridge leaves directions so flat that the
    // gradient stalls above tolerance while the objective is converged.
    if (0.5 * grad.dot(step) <= 1e-12 * std::max(1.0, std::abs(ll))) return fit;
    double t = 1.0;
    bool improved = false;
    Eigen::VectorXd trial;
    double trial_ll = ll;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      trial = fit.coefficients + t * step;
      trial_ll = newton_terms(kind, x, y, trial, opt.ridge, nullptr, nullptr);
      if (std::isfinite(trial_ll) && trial_ll >= ll) {
        improved = true;
        break;
      }
    }
    if (!improved) {
      // The objective is flat to rounding: accept when the gradient is at the
      // floating-point floor of the score sum.
      const double floor = 1e-10 * std::max(1.0, y.cwiseAbs().sum());
      if (fit.gradient_norm <= floor) return fit;
      break;
    }
    fit.coefficients = trial;
    ll = newton_terms(kind, x, y, fit.coefficients, opt.ridge, &grad, &info);
  }
  fit.gradient_norm = grad.lpNorm<Eigen::Infinity>();
  if (fit.gradient_norm <= opt.gradient_tolerance) return fit;
  std::ostringstream msg;
  msg << kind_name(kind) << " fit did not converge: " << fit.iterations << " iterations, gradient norm "
      << fit.gradient_norm;
  throw NumericalError(msg.str());
}

GlmFit least_squares(GlmKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GlmOptions& opt) {
  GlmFit fit;
  fit.kind = kind;
  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += opt.ridge;
  const Eigen::VectorXd rhs = x.transpose() * y;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(kind_name(kind)) + " normal equations singular");
  fit.coefficients = llt.solve(rhs);
  const Eigen::VectorXd resid = y - x * fit.coefficients;
  const double dof = static_cast<double>(std::max<Index>(1, x.rows() - x.cols()));
  fit.residual_variance = resid.squaredNorm() / dof;
  fit.gradient_norm = (x.transpose() * resid - opt.ridge * fit.coefficients).lpNorm<Eigen::Infinity>();
  fit.iterations = 1;
  return fit;
}

}  // namespace

Eigen::VectorXd binarize_occurrence(const Eigen::VectorXd& z) {
  return (z.array() > 0.0).cast<double>().matrix();
}

PositiveSubset positive_subset(const Eigen::VectorXd& z, const Eigen::MatrixXd& x, const std::vector<Point2>& sites) {
  if (x.rows() != z.size()) throw InputError("positive_subset: row count mismatch");
  if (!sites.empty() && static_cast<Index>(sites.size()) != z.size()) {
    throw InputError("positive_subset: site count mismatch");
  }
  PositiveSubset out;
  for (Index i = 0; i < z.size(); ++i) {
    if (z[i] > 0.0) out.rows.push_back(i);
  }
  if (out.rows.empty()) throw InputError("prevalence subset empty");
  out.z = z(out.rows);
  out.x = x(out.rows, Eigen::all);
  if (!sites.empty()) {
    for (Index i : out.rows) out.sites.push_back(sites[static_cast<std::size_t>(i)]);
  }
  return out;
}

GlmFit fit_glm(GlmKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GlmOptions& options) {
  if (x.rows() != y.size()) throw InputError("fit_glm: row count mismatch");
  if (x.rows() == 0) throw InputError("fit_glm: no observations");
  switch (kind) {
    case GlmKind::logistic:
      for (Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) throw InputError("logistic response must be 0 or 1");
      }
      return newton_fit(kind, x, y, options);
    case GlmKind::zero_truncated_poisson:
      for (Index i = 0; i < y.size(); ++i) {
        if (!(y[i] >= 1.0) || y[i] != std::floor(y[i])) {
          throw InputError("zero-truncated Poisson response must be a positive integer");
        }
      }
      return newton_fit(kind, x, y, options);
    case GlmKind::lognormal: {
      if ((y.array() <= 0.0).any()) throw InputError("lognormal response must be positive");
      return least_squares(kind, x, y.array().log().matrix(), options);
    }
    case GlmKind::linear:
      return least_squares(kind, x, y, options);
  }
  throw InputError("unknown GLM kind");
}

Eigen::VectorXd glm_predict(const GlmFit& fit, const Eigen::MatrixXd& x) {
  if (x.cols() != fit.coefficients.size()) throw InputError("glm_predict: column count mismatch");
  const Eigen::VectorXd eta = x * fit.coefficients;
  Eigen::VectorXd out(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    switch (fit.kind) {
      case GlmKind::logistic: out[i] = 1.0 / (1.0 + std::exp(-eta[i])); break;
      case GlmKind::zero_truncated_poisson: {
        double mean, slope;
        ztp_moments(eta[i], mean, slope);
        out[i] = mean;
        break;
      }
      case GlmKind::lognormal: out[i] = std::exp(eta[i] + 0.5 * fit.residual_variance); break;
      case GlmKind::linear: out[i] = eta[i]; break;
    }
  }
  return out;
}

GlmKind prevalence_glm(const TwoPartFamily& family) {
  switch (family.tag) {
    case Family::hurdle_count:
    case Family::mixture_poisson: return GlmKind::zero_truncated_poisson;
    case Family::hurdle_lognormal: return GlmKind::lognormal;
    case Family::mixture_tobit: return GlmKind::linear;
  }
  return GlmKind::linear;
}

RankGrid RankGrid::equally_spaced(Index p_max, Index h) {
  if (p_max < 2) throw InputError("rank grid needs p_max >= 2");
  if (h < 1) throw InputError("rank grid resolution must be positive");
  RankGrid grid;
  grid.p_max = p_max;
  if (h == 1) {
    grid.candidates = {2};
    return grid;
  }
  for (Index k = 0; k < h; ++k) {
    const double v = 2.0 + static_cast<double>(k) * static_cast<double>(p_max - 2) / static_cast<double>(h - 1);
    const auto p = static_cast<Index>(std::llround(v));
    if (grid.candidates.empty() || grid.candidates.back() != p) grid.candidates.push_back(p);
  }
  return grid;
}

RankGrid RankGrid::defaults(Index vertex_count, Index h) {
  return equally_spaced(std::min<Index>(vertex_count / 4, 250), h);
}

RankChoice select_ranks(const Eigen::VectorXd& z, const Eigen::MatrixXd& x, const SparseRowMatrix& projector,
                        const MoranBasis& pool, const TwoPartFamily& family, const RankGrid& grid,
                        const RankSelectionOptions& options) {
  if (grid.candidates.empty()) throw InputError("empty rank grid");
  const Index n = z.size();
  if (x.rows() != n || projector.rows() != n) throw InputError("select_ranks: row count mismatch");
  if (projector.cols() != pool.vertex_count()) throw InputError("select_ranks: projector does not match basis");
  const Index p_max = *std::max_element(grid.candidates.begin(), grid.candidates.end());
  if (pool.rank() < p_max) throw InputError("basis pool has fewer columns than the largest candidate rank");
  if (*std::min_element(grid.candidates.begin(), grid.candidates.end()) < 1) {
    throw InputError("candidate ranks must be positive");
  }
  if (!(options.holdout_fraction > 0.0 && options.holdout_fraction < 1.0)) {
    throw InputError("holdout fraction must lie in (0, 1)");
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(options.split_seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const auto n_hold = static_cast<std::size_t>(
      std::clamp<long long>(std::llround(options.holdout_fraction * static_cast<double>(n)), 1, n - 1));
  std::vector<Index> hold(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<Index> train(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());
  std::sort(hold.begin(), hold.end());
  std::sort(train.begin(), train.end());

  std::vector<Index> train_pos, hold_pos;
  for (Index i : train) {
    if (z[i] > 0.0) train_pos.push_back(i);
  }
  for (Index i : hold) {
    if (z[i] > 0.0) hold_pos.push_back(i);
  }
  if (train_pos.empty() || hold_pos.empty()) throw InputError("prevalence subset empty");

  const Eigen::MatrixXd field = projector * pool.vectors.leftCols(p_max);
  const Eigen::VectorXd occ = binarize_occurrence(z);
  const GlmKind prev_kind = prevalence_glm(family);

  RankChoice choice;
  for (Index p : grid.candidates) {
    Eigen::MatrixXd design(n, x.cols() + p);
    design << x, field.leftCols(p);
    RankScore s;
    s.rank = p;

    const GlmFit occ_fit = fit_glm(GlmKind::logistic, design(train, Eigen::all), occ(train), options.glm);
    const Eigen::VectorXd occ_hat = glm_predict(occ_fit, design(hold, Eigen::all));
    s.auc_occurrence = auc(occ(hold), occ_hat);
    s.rmspe_occurrence = rmspe(occ(hold), occ_hat);

    const GlmFit prev_fit = fit_glm(prev_kind, design(train_pos, Eigen::all), z(train_pos), options.glm);
    const Eigen::VectorXd prev_hat = glm_predict(prev_fit, design(hold_pos, Eigen::all));
    s.rmspe_prevalence = rmspe(z(hold_pos), prev_hat);
    choice.table.push_back(s);
  }

  const double tol = options.tie_tolerance;
  const RankScore* best_o = &choice.table.front();
  const RankScore* best_p = &choice.table.front();
  for (const RankScore& s : choice.table) {
    if (s.auc_occurrence > best_o->auc_occurrence + tol) {
      best_o = &s;
    } else if (std::abs(s.auc_occurrence - best_o->auc_occurrence) <= tol) {
      if (s.rmspe_occurrence < best_o->rmspe_occurrence - tol ||
          (std::abs(s.rmspe_occurrence - best_o->rmspe_occurrence) <= tol && s.rank < best_o->rank)) {
        best_o = &s;
      }
    }
    if (s.rmspe_prevalence < best_p->rmspe_prevalence - tol ||
        (std::abs(s.rmspe_prevalence - best_p->rmspe_prevalence) <= tol && s.rank < best_p->rank)) {
      best_p = &s;
    }
  }
  choice.p_o = best_o->rank;
  choice.p_p = best_p->rank;
  return choice;
}

void write_score_table(std::ostream& out, const std::vector<RankScore>& table) {
  out << "rank,auc_occurrence,rmspe_occurrence,rmspe_prevalence\n";
  for (const RankScore& s : table) {
    out << s.rank << ',' << format_double(s.auc_occurrence) << ',' << format_double(s.rmspe_occurrence) << ','
        << format_double(s.rmspe_prevalence) << '\n';
  }
}

}  // namespace picarz
