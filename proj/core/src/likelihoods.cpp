#include "picarz/likelihoods.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "picarz/error.hpp"

namespace picarz {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(1 - exp(-theta)) for theta > 0.
double log1m_exp_neg(double theta) {
  return theta > std::numbers::ln2 ? std::log1p(-std::exp(-theta)) : std::log(-std::expm1(-theta));
}

double log_sigmoid(double eta) {
  return eta >= 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

double normal_logpdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(variance) - 0.5 * d * d / variance;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::hurdle_count: return "hurdle-count";
    case Family::hurdle_lognormal: return "hurdle-lognormal";
    case Family::mixture_poisson: return "mixture-poisson";
    case Family::mixture_tobit: return "mixture-tobit";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::hurdle_count, Family::hurdle_lognormal, Family::mixture_poisson,
                   Family::mixture_tobit}) {
    if (name == to_string(f)) return f;
  }
  throw InputError("unknown family '" + std::string(name) + "'");
}

std::string_view to_string(Link l) { return l == Link::logit ? "logit" : "probit"; }

Link parse_link(std::string_view name) {
  if (name == "logit") return Link::logit;
  if (name == "probit") return Link::probit;
  throw InputError("unknown link '" + std::string(name) + "'");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_normal_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  if (x > -20.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  // Mills-ratio asymptotic series.
  const double r = 1.0 / (x * x);
  const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
  return -0.5 * x * x - kLogSqrt2Pi - std::log(-x) + std::log(series);
}

Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                                 const SparseRowMatrix& projector, const MoranBasis& basis,
                                 const Eigen::VectorXd& delta) {
  if (x.cols() != beta.size() || projector.rows() != x.rows() ||
      projector.cols() != basis.vertex_count() || basis.rank() != delta.size()) {
    throw InputError("linear_predictor: dimension mismatch");
  }
  const Eigen::VectorXd vertex_field = basis.vectors * delta;
  return x * beta + projector * vertex_field;
}

double occurrence_prob(double eta, Link link) {
  double pi;
  if (link == Link::logit) {
    pi = eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
  } else {
    pi = normal_cdf(eta);
  }
  return std::clamp(pi, 1e-15, 1.0 - 1e-15);
}

Eigen::VectorXd occurrence_prob(const Eigen::VectorXd& eta, Link link) {
  Eigen::VectorXd out(eta.size());
  for (Index i = 0; i < eta.size(); ++i) out[i] = occurrence_prob(eta[i], link);
  return out;
}

void log_occurrence(double eta, Link link, double& log_pi, double& log_one_minus_pi) {
  if (link == Link::logit) {
    log_pi = log_sigmoid(eta);
    log_one_minus_pi = log_sigmoid(-eta);
  } else {
    log_pi = log_normal_cdf(eta);
    log_one_minus_pi = log_normal_cdf(-eta);
  }
}

void check_observation(const TwoPartFamily& family, double z) {
  if (!std::isfinite(z) || z < 0.0) throw InputError("observation inconsistent with family");
  if (family.is_count() && z != std::floor(z)) {
    throw InputError("observation inconsistent with family");
  }
  if (family.tag == Family::mixture_tobit && z > 0.0 && z <= family.tobit_threshold) {
    throw InputError("observation inconsistent with family");
  }
}

double loglik(const TwoPartFamily& family, double z, double pi, double location, double variance) {
  check_observation(family, z);
  if (!(pi >= 0.0 && pi <= 1.0)) throw InputError("occurrence probability outside [0, 1]");
  if (family.is_count() && !(location > 0.0)) throw InputError("intensity must be positive");
  if (family.has_nugget() && !(variance > 0.0)) throw InputError("nugget variance must be positive");
  const double log_pi = std::log(pi);
  const double log_q = std::log1p(-pi);
  switch (family.tag) {
    case Family::hurdle_count:
      if (z == 0.0) return log_q;
      return log_pi + z * std::log(location) - location - std::lgamma(z + 1.0) -
             log1m_exp_neg(location);
    case Family::hurdle_lognormal:
      if (z == 0.0) return log_q;
      return log_pi - std::log(z) + normal_logpdf(std::log(z), location, variance);
    case Family::mixture_poisson:
      if (z == 0.0) return log_add_exp(log_q, log_pi - location);
      return log_pi + z * std::log(location) - location - std::lgamma(z + 1.0);
    case Family::mixture_tobit: {
      const double sd = std::sqrt(variance);
      if (z == 0.0) {
        return log_add_exp(log_q, log_pi + log_normal_cdf((family.tobit_threshold - location) / sd));
      }
      return log_pi + normal_logpdf(z, location, variance);
    }
  }
  return kNegInf;
}

double total_loglik(const TwoPartFamily& family, const Eigen::VectorXd& z, const Eigen::VectorXd& pi,
                    const Eigen::VectorXd& location, double variance) {
  if (z.size() != pi.size() || z.size() != location.size()) {
    throw InputError("total_loglik: length mismatch");
  }
  double sum = 0.0;
  for (Index i = 0; i < z.size(); ++i) sum += loglik(family, z[i], pi[i], location[i], variance);
  return sum;
}

double predictive_mean(const TwoPartFamily& family, double pi, double location, double variance) {
  if (pi == 0.0) return 0.0;
  switch (family.tag) {
    case Family::hurdle_count:
      return pi * location / -std::expm1(-location);
    case Family::hurdle_lognormal:
      return pi * std::exp(location + 0.5 * variance);
    case Family::mixture_poisson:
      return pi * location;
    case Family::mixture_tobit: {
      const double sd = std::sqrt(variance);
      const double a = (family.tobit_threshold - location) / sd;
      return pi * (location * normal_cdf(-a) + sd * normal_pdf(a));
    }
  }
  return 0.0;
}

double prob_positive(const TwoPartFamily& family, double pi, double location, double variance) {
  switch (family.tag) {
    case Family::hurdle_count:
    case Family::hurdle_lognormal:
      return pi;
    case Family::mixture_poisson:
      return pi * -std::expm1(-location);
    case Family::mixture_tobit:
      return pi * normal_cdf((location - family.tobit_threshold) / std::sqrt(variance));
  }
  return pi;
}

SiteLikelihood::SiteLikelihood(TwoPartFamily family, Link link, Eigen::VectorXd z)
    : family_(family), link_(link), z_(std::move(z)) {
  log_z_ = Eigen::VectorXd::Zero(z_.size());
  log_factorial_ = Eigen::VectorXd::Zero(z_.size());
  for (Index i = 0; i < z_.size(); ++i) {
    check_observation(family_, z_[i]);
    if (z_[i] > 0.0) {
      log_z_[i] = std::log(z_[i]);
      log_factorial_[i] = std::lgamma(z_[i] + 1.0);
      positives_.push_back(i);
    } else {
      zeros_.push_back(i);
    }
  }
}

void SiteLikelihood::occurrence_terms(const Eigen::VectorXd& eta_o, Eigen::VectorXd& log_pi,
                                      Eigen::VectorXd& log_q) const {
  const Index n = z_.size();
  log_pi.resize(n);
  log_q.resize(n);
  if (link_ == Link::logit) {
    for (Index i = 0; i < n; ++i) {
      // log sigmoid(eta) and log sigmoid(-eta) share one softplus.
      const double e = eta_o[i];
      const double sp = std::log1p(std::exp(-std::abs(e)));
      log_pi[i] = (e >= 0.0 ? 0.0 : e) - sp;
      log_q[i] = (e >= 0.0 ? -e : 0.0) - sp;
    }
  } else {
    for (Index i = 0; i < n; ++i) log_occurrence(eta_o[i], link_, log_pi[i], log_q[i]);
  }
}

void SiteLikelihood::prevalence_terms(const Eigen::VectorXd& eta_p, double variance, Eigen::VectorXd& r) const {
  r.setZero(z_.size());
  switch (family_.tag) {
    case Family::hurdle_count:
      for (Index i : positives_) {
        const double theta = std::exp(eta_p[i]);
        r[i] = z_[i] * eta_p[i] - theta - log_factorial_[i] - log1m_exp_neg(theta);
      }
      break;
    case Family::hurdle_lognormal: {
      const double c = -kLogSqrt2Pi - 0.5 * std::log(variance);
      for (Index i : positives_) {
        const double d = log_z_[i] - eta_p[i];
        r[i] = c - log_z_[i] - 0.5 * d * d / variance;
      }
      break;
    }
    case Family::mixture_poisson:
      for (Index i : positives_) r[i] = z_[i] * eta_p[i] - std::exp(eta_p[i]) - log_factorial_[i];
      for (Index i : zeros_) r[i] = -std::exp(eta_p[i]);
      break;
    case Family::mixture_tobit: {
      const double c = -kLogSqrt2Pi - 0.5 * std::log(variance);
      const double inv_sd = 1.0 / std::sqrt(variance);
      for (Index i : positives_) {
        const double d = z_[i] - eta_p[i];
        r[i] = c - 0.5 * d * d / variance;
      }
      for (Index i : zeros_) r[i] = log_normal_cdf((family_.tobit_threshold - eta_p[i]) * inv_sd);
      break;
    }
  }
}

double SiteLikelihood::combine(const Eigen::VectorXd& log_pi, const Eigen::VectorXd& log_q,
                               const Eigen::VectorXd& r) const {
  double sum = 0.0;
  for (Index i : positives_) sum += log_pi[i] + r[i];
  if (family_.is_hurdle()) {
    for (Index i : zeros_) sum += log_q[i];
  } else {
    for (Index i : zeros_) sum += log_add_exp(log_q[i], log_pi[i] + r[i]);
  }
  return sum;
}

double SiteLikelihood::site(Index i, double eta_o, double eta_p, double variance) const {
  double log_pi, log_q;
  log_occurrence(eta_o, link_, log_pi, log_q);
  const double z = z_[i];
  switch (family_.tag) {
    case Family::hurdle_count: {
      if (z == 0.0) return log_q;
      const double theta = std::exp(eta_p);
      return log_pi + z * eta_p - theta - log_factorial_[i] - log1m_exp_neg(theta);
    }
    case Family::hurdle_lognormal:
      if (z == 0.0) return log_q;
      return log_pi - log_z_[i] + normal_logpdf(log_z_[i], eta_p, variance);
    case Family::mixture_poisson: {
      const double theta = std::exp(eta_p);
      if (z == 0.0) return log_add_exp(log_q, log_pi - theta);
      return log_pi + z * eta_p - theta - log_factorial_[i];
    }
    case Family::mixture_tobit: {
      if (z == 0.0) {
        const double a = (family_.tobit_threshold - eta_p) / std::sqrt(variance);
        return log_add_exp(log_q, log_pi + log_normal_cdf(a));
      }
      return log_pi + normal_logpdf(z, eta_p, variance);
    }
  }
  return kNegInf;
}

double SiteLikelihood::total(const Eigen::VectorXd& eta_o, const Eigen::VectorXd& eta_p,
                             double variance) const {
  if (separable()) return occurrence_part(eta_o) + prevalence_part(eta_p, variance);
  double sum = 0.0;
  for (Index i = 0; i < z_.size(); ++i) sum += site(i, eta_o[i], eta_p[i], variance);
  return sum;
}

double SiteLikelihood::occurrence_part(const Eigen::VectorXd& eta_o) const {
  double sum = 0.0;
  double log_pi, log_q;
  for (Index i = 0; i < z_.size(); ++i) {
    log_occurrence(eta_o[i], link_, log_pi, log_q);
    sum += z_[i] > 0.0 ? log_pi : log_q;
  }
  return sum;
}

double SiteLikelihood::prevalence_part(const Eigen::VectorXd& eta_p, double variance) const {
  double sum = 0.0;
  if (family_.tag == Family::hurdle_count) {
    for (Index i = 0; i < z_.size(); ++i) {
      if (z_[i] == 0.0) continue;
      const double theta = std::exp(eta_p[i]);
      sum += z_[i] * eta_p[i] - theta - log_factorial_[i] - log1m_exp_neg(theta);
    }
  } else if (family_.tag == Family::hurdle_lognormal) {
    const double half_log_var = 0.5 * std::log(variance);
    for (Index i = 0; i < z_.size(); ++i) {
      if (z_[i] == 0.0) continue;
      const double d = log_z_[i] - eta_p[i];
      sum += -log_z_[i] - kLogSqrt2Pi - half_log_var - 0.5 * d * d / variance;
    }
  } else {
    throw InputError("prevalence_part: family is not separable");
  }
  return sum;
}

}  // namespace picarz
