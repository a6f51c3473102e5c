#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "picarz/geometry.hpp"
#include "picarz/likelihoods.hpp"
#include "picarz/metropolis.hpp"
#include "picarz/spectral.hpp"

namespace picarz {

/// Priors. Precision priors are Gamma(shape, rate) on tau, i.e. inverse
/// gamma on the variance 1 / tau.
struct PriorSpec {
  double beta_mean = 0.0;
  double beta_variance = 100.0;
  double tau_shape = 0.002;
  double tau_rate = 0.002;
  double nugget_shape = 0.002;  ///< inverse gamma on sigma^2
  double nugget_rate = 0.002;
  double rho_lower = -1.0;
  double rho_upper = 1.0;
  double phi_upper = 1.4142135623730951;  ///< phi ~ U(0, sqrt 2)

  void validate() const;
};

struct SamplerConfig {
  long iterations = 150000;
  long burn_in = 50000;
  long thinning = 10;
  std::uint64_t seed = 1;
  Index adaptation_window = 200;
  double initial_vector_scale = 0.05;
  double initial_scalar_scale = 0.1;
  double vector_target = 0.234;
  double scalar_target = 0.44;
  Index diagonal_above = 200;
  /// Prior-only mode when false.
  bool use_likelihood = true;

  void validate() const;
  long retained() const { return (iterations - burn_in) / thinning; }
};

enum class LatentKind { picar, picar_correlated, frk_bisquare, gold_standard };

std::string_view to_string(LatentKind k);
LatentKind parse_latent_kind(std::string_view name);

/// Latent field at sites = projector * basis * coefficients, or basis *
/// coefficients when the projector is empty.
struct SiteDesign {
  SparseRowMatrix projector;  ///< sites x vertices, or 0 x 0
  Eigen::MatrixXd basis;      ///< vertices x p, or sites x p

  bool projected() const { return projector.cols() > 0; }
  Index sites() const { return projected() ? projector.rows() : basis.rows(); }
  Index rank() const { return basis.cols(); }
  void apply(const Eigen::VectorXd& coef, Eigen::VectorXd& out) const;
  /// sites x draws field for a draws x p coefficient matrix.
  Eigen::MatrixXd apply_draws(const Eigen::MatrixXd& coef_rows) const;
};

struct LatentBlock {
  SiteDesign design;
  ReducedPrecision prior;
  /// chol((P)^-1), used by the correlated prior.
  Eigen::MatrixXd inverse_factor;
};

struct LatentParameterization {
  LatentKind kind = LatentKind::picar;
  LatentBlock occurrence;
  LatentBlock prevalence;
  std::vector<Point2> sites;  ///< gold standard only

  Index sites_count() const;
};

/// PICAR: occurrence and prevalence use the leading p_o and p_p columns of
/// one basis with prior precision M'QM.
LatentParameterization make_picar(const SparseRowMatrix& projector, const MoranBasis& basis,
                                  const SparseMatrix& precision, Index p_o, Index p_p, bool correlated = false);
/// Fixed-rank kriging with a site-level design and identity prior precision.
LatentParameterization make_frk(const Eigen::MatrixXd& phi);
/// Full-rank W = L_phi gamma with an exponential correlation over the sites.
LatentParameterization make_gold_standard(const std::vector<Point2>& sites);

struct ModelParams {
  Eigen::VectorXd beta_o, beta_p;
  Eigen::VectorXd delta_o, delta_p;  ///< gamma_o, gamma_p for the gold standard
  double tau_o = 1.0, tau_p = 1.0;
  double rho = 0.0;
  double nugget = 1.0;
  double phi_o = 0.2, phi_p = 0.2;
};

struct ModelData {
  Eigen::VectorXd z;
  Eigen::MatrixXd x;
  TwoPartFamily family;
  Link link = Link::logit;
};

/// Column layout of a chain.
struct ChainLayout {
  Index k = 0;                    ///< covariates per process
  Index p_o = 0, p_p = 0;
  bool correlated = false;
  bool nugget = false;
  bool gold_standard = false;

  std::vector<std::string> names() const;
  Index width() const;
  Index beta_o() const { return 0; }
  Index beta_p() const { return k; }
  Index delta_o() const { return 2 * k; }
  Index delta_p() const { return 2 * k + p_o; }
  Index rho() const;      ///< -1 when absent
  Index nugget_col() const;
  Index tau_o() const;
  Index tau_p() const { return tau_o() + 1; }
  Index phi_o() const;    ///< -1 when absent
  Index phi_p() const;

  void flatten(const ModelParams& params, Eigen::Ref<Eigen::VectorXd> row) const;
  ModelParams unflatten(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

struct BlockSummary {
  std::string name;
  long proposals = 0;
  long accepts = 0;
  long proposals_after_burn_in = 0;
  long accepts_after_burn_in = 0;
  double log_scale = 0.0;
  bool frozen = false;

  double acceptance_rate() const;
  double acceptance_after_burn_in() const;
};

struct Chain {
  LatentKind kind = LatentKind::picar;
  ChainLayout layout;
  Eigen::MatrixXd draws;  ///< retained draws x layout.width()
  std::vector<BlockSummary> blocks;
  /// log proposal scale of every adaptive block recorded at the end of
  /// burn-in and at the end of the run.
  std::vector<double> scales_at_burn_in, scales_at_end;
  double seconds = 0.0;
  std::uint64_t seed = 0;
  long iterations = 0, burn_in = 0, thinning = 1;

  std::vector<std::string> names() const { return layout.names(); }
  ModelParams draw(Index r) const { return layout.unflatten(draws.row(r)); }
};

/// Independent delta prior: 1/2 p log tau + 1/2 logdet P - 1/2 tau d'Pd - p/2 log 2 pi.
double delta_logprior(const Eigen::VectorXd& delta, double tau, const ReducedPrecision& prior);

/// Joint normal log density of (delta_o, delta_p) with covariance
/// blkdiag(G_o, G_p) [[I, rho J], [rho J', I]] blkdiag(G_o, G_p)' where
/// G = tau^-1/2 chol(P^-1). Returns -inf for |rho| >= 1.
double correlated_delta_logprior(const Eigen::VectorXd& delta_o, const Eigen::VectorXd& delta_p, double tau_o,
                                 double tau_p, double rho, const LatentBlock& occurrence,
                                 const LatentBlock& prevalence);

/// Exponential correlation exp(-h / phi) factor over the sites.
Eigen::MatrixXd exponential_factor(const std::vector<Point2>& sites, double phi);

/// Log-likelihood plus log-priors; -inf outside the support.
double log_posterior(const ModelParams& params, const ModelData& data, const LatentParameterization& latent,
                     const PriorSpec& priors);

/// Starting values: unit-ridge GLM fits of (beta, delta) on [X, design]
/// for each process, tau at its conditional posterior mean given delta,
/// rho = 0, nugget from the prevalence fit's residual variance.
ModelParams initial_params(const ModelData& data, const LatentParameterization& latent, const PriorSpec& priors);

/// Metropolis-within-Gibbs. Blocks per iteration: beta_o, beta_p, delta_o,
/// delta_p, (phi_o, phi_p), (rho), (nugget), tau_o, tau_p.
Chain fit(const ModelData& data, const LatentParameterization& latent, const PriorSpec& priors,
          const SamplerConfig& config, const std::optional<ModelParams>& init = std::nullopt);

struct Prediction {
  Eigen::VectorXd mean;        ///< draw-average of the predictive mean
  Eigen::VectorXd sd;          ///< draw-wise s.d. of the predictive mean
  Eigen::VectorXd pi;          ///< draw-average occurrence probability
  Eigen::VectorXd positive;    ///< draw-average P(Z > 0)
  Eigen::VectorXd eta_p;       ///< draw-average prevalence linear predictor
};

/// Posterior predictive summaries at new sites for PICAR and FRK chains.
Prediction predict(const Chain& chain, const TwoPartFamily& family, Link link, const Eigen::MatrixXd& x_new,
                   const SiteDesign& occurrence, const SiteDesign& prevalence);

/// Gold standard: kriging mean R_new,train L^-T gamma per retained draw.
Prediction predict_gold_standard(const Chain& chain, const TwoPartFamily& family, Link link,
                                 const Eigen::MatrixXd& x_new, const std::vector<Point2>& train_sites,
                                 const std::vector<Point2>& new_sites);

}  // namespace picarz
