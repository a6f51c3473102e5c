#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "picarz/geometry.hpp"
#include "picarz/spectral.hpp"

namespace picarz {

// Convention used throughout: pi = P(O = 1), the probability that the site is
// occupied and the prevalence process is observed.

enum class Family { hurdle_count, hurdle_lognormal, mixture_poisson, mixture_tobit };

struct TwoPartFamily {
  Family tag = Family::hurdle_count;
  double tobit_threshold = 0.0;  ///< MixtureTobit only

  bool is_count() const { return tag == Family::hurdle_count || tag == Family::mixture_poisson; }
  bool is_hurdle() const { return tag == Family::hurdle_count || tag == Family::hurdle_lognormal; }
  bool has_nugget() const { return !is_count(); }
};

std::string_view to_string(Family f);
Family parse_family(std::string_view name);

enum class Link { logit, probit };

std::string_view to_string(Link l);
Link parse_link(std::string_view name);

/// Standard normal CDF and its log, accurate far into the lower tail.
double normal_cdf(double x);
double log_normal_cdf(double x);

/// eta = X beta + A (M delta), evaluated as two products.
Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                                 const SparseRowMatrix& projector, const MoranBasis& basis,
                                 const Eigen::VectorXd& delta);

/// Inverse link, clamped into [1e-15, 1 - 1e-15].
double occurrence_prob(double eta, Link link);
Eigen::VectorXd occurrence_prob(const Eigen::VectorXd& eta, Link link);

/// log P(O = 1) and log P(O = 0) computed without forming pi.
void log_occurrence(double eta, Link link, double& log_pi, double& log_one_minus_pi);

/// Per-site log-likelihood. `location` is theta (count families, > 0) or mu
/// (semi-continuous families); `variance` is the prevalence nugget.
double loglik(const TwoPartFamily& family, double z, double pi, double location, double variance);

/// Sum of per-site log-likelihoods.
double total_loglik(const TwoPartFamily& family, const Eigen::VectorXd& z, const Eigen::VectorXd& pi,
                    const Eigen::VectorXd& location, double variance);

/// E[Z] under the two-part generative process.
double predictive_mean(const TwoPartFamily& family, double pi, double location, double variance);

/// P(Z > 0) under the two-part generative process.
double prob_positive(const TwoPartFamily& family, double pi, double location, double variance);

/// Throws InputError("observation inconsistent with family") for z outside
/// the family's support.
void check_observation(const TwoPartFamily& family, double z);

/// Vectorised likelihood on the linear-predictor scale, used by the samplers.
/// Observations are validated once at construction; per-site constants are cached.
class SiteLikelihood {
 public:
  SiteLikelihood(TwoPartFamily family, Link link, Eigen::VectorXd z);

  const TwoPartFamily& family() const { return family_; }
  Link link() const { return link_; }
  Index size() const { return z_.size(); }
  const Eigen::VectorXd& observations() const { return z_; }

  /// Full log-likelihood given eta_o, eta_p (eta_p = log theta or mu).
  double total(const Eigen::VectorXd& eta_o, const Eigen::VectorXd& eta_p, double variance) const;
  /// Hurdle families factorise into an occurrence part and a prevalence part.
  double occurrence_part(const Eigen::VectorXd& eta_o) const;
  double prevalence_part(const Eigen::VectorXd& eta_p, double variance) const;
  bool separable() const { return family_.is_hurdle(); }

  /// Cached-term evaluation used by the samplers. occurrence_terms fills
  /// log pi and log(1 - pi); prevalence_terms fills r, the prevalence log
  /// density at positive sites and log P(prevalence = 0) at zero sites
  /// (mixtures only). combine returns the total log-likelihood.
  void occurrence_terms(const Eigen::VectorXd& eta_o, Eigen::VectorXd& log_pi, Eigen::VectorXd& log_q) const;
  void prevalence_terms(const Eigen::VectorXd& eta_p, double variance, Eigen::VectorXd& r) const;
  double combine(const Eigen::VectorXd& log_pi, const Eigen::VectorXd& log_q, const Eigen::VectorXd& r) const;

 private:
  double site(Index i, double eta_o, double eta_p, double variance) const;

  TwoPartFamily family_;
  Link link_;
  Eigen::VectorXd z_;
  Eigen::VectorXd log_z_;        // log z for positive z (lognormal)
  Eigen::VectorXd log_factorial_;
  std::vector<Index> zeros_, positives_;
};

}  // namespace picarz
