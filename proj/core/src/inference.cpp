#include "picarz/inference.hpp"

#include <chrono>
#include <tuple>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>

#include "picarz/error.hpp"
#include "picarz/random.hpp"
#include "picarz/rank_selection.hpp"

namespace picarz {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double inverse_gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

double beta_logprior(const Eigen::VectorXd& beta, const PriorSpec& pr) {
  const auto k = static_cast<double>(beta.size());
  return -0.5 * (beta.array() - pr.beta_mean).square().sum() / pr.beta_variance -
         0.5 * k * (kLog2Pi + std::log(pr.beta_variance));
}

LatentBlock make_block(SiteDesign design, Eigen::MatrixXd precision) {
  LatentBlock b;
  b.design = std::move(design);
  b.prior = make_reduced_precision(std::move(precision));
  const Index p = b.prior.dim();
  if (p > 0) {
    Eigen::MatrixXd cov = b.prior.matrix.llt().solve(Eigen::MatrixXd::Identity(p, p));
    cov = 0.5 * (cov + cov.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("prior covariance not positive definite");
    b.inverse_factor = llt.matrixL();
  }
  return b;
}

// Quadratic form and size of the correlated prior in whitened coordinates.
double whitened(const Eigen::VectorXd& delta, double tau, const LatentBlock& b, Eigen::VectorXd& u) {
  u = b.inverse_factor.triangularView<Eigen::Lower>().solve(delta);
  u *= std::sqrt(tau);
  // -log|G| = p/2 log tau + 1/2 log|P|
  return 0.5 * static_cast<double>(delta.size()) * std::log(tau) + 0.5 * b.prior.log_det;
}

Eigen::MatrixXd exponential_cross(const std::vector<Point2>& rows, const std::vector<Point2>& cols, double phi) {
  Eigen::MatrixXd r(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      r(static_cast<Index>(i), static_cast<Index>(j)) =
          std::exp(-std::hypot(rows[i].x - cols[j].x, rows[i].y - cols[j].y) / phi);
    }
  }
  return r;
}

}  // namespace

void PriorSpec::validate() const {
  if (!(beta_variance > 0.0)) throw InputError("beta prior variance must be positive");
  if (!(tau_shape > 0.0 && tau_rate > 0.0)) throw InputError("precision prior shape and rate must be positive");
  if (!(nugget_shape > 0.0 && nugget_rate > 0.0)) throw InputError("nugget prior shape and rate must be positive");
  if (!(rho_lower >= -1.0 && rho_upper <= 1.0 && rho_lower < rho_upper)) throw InputError("invalid rho prior bounds");
  if (!(phi_upper > 0.0)) throw InputError("phi prior upper bound must be positive");
}

void SamplerConfig::validate() const {
  if (iterations < 1) throw InputError("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw InputError("burn-in must be in [0, iterations)");
  if (thinning < 1) throw InputError("thinning must be positive");
  if (adaptation_window < 1) throw InputError("adaptation window must be positive");
  if (!(initial_vector_scale > 0.0 && initial_scalar_scale > 0.0)) throw InputError("proposal scales must be positive");
  if (!(vector_target > 0.0 && vector_target < 1.0 && scalar_target > 0.0 && scalar_target < 1.0)) {
    throw InputError("target acceptance rates must lie in (0, 1)");
  }
}

std::string_view to_string(LatentKind k) {
  switch (k) {
    case LatentKind::picar: return "picar";
    case LatentKind::picar_correlated: return "picar-correlated";
    case LatentKind::frk_bisquare: return "frk-bisquare";
    case LatentKind::gold_standard: return "gold-standard";
  }
  return "unknown";
}

LatentKind parse_latent_kind(std::string_view name) {
  for (LatentKind k : {LatentKind::picar, LatentKind::picar_correlated, LatentKind::frk_bisquare,
                       LatentKind::gold_standard}) {
    if (name == to_string(k)) return k;
  }
  throw InputError("unknown parameterization '" + std::string(name) + "'");
}

void SiteDesign::apply(const Eigen::VectorXd& coef, Eigen::VectorXd& out) const {
  if (projected()) {
    const Eigen::VectorXd vertex = basis * coef;
    out = projector * vertex;
  } else {
    out.noalias() = basis * coef;
  }
}

Eigen::MatrixXd SiteDesign::apply_draws(const Eigen::MatrixXd& coef_rows) const {
  if (coef_rows.cols() != rank()) throw InputError("coefficient count does not match design rank");
  if (projected()) {
    const Eigen::MatrixXd vertex = basis * coef_rows.transpose();
    return projector * vertex;
  }
  return basis * coef_rows.transpose();
}

Index LatentParameterization::sites_count() const {
  if (kind == LatentKind::gold_standard) return static_cast<Index>(sites.size());
  return occurrence.design.sites();
}

LatentParameterization make_picar(const SparseRowMatrix& projector, const MoranBasis& basis,
                                  const SparseMatrix& precision, Index p_o, Index p_p, bool correlated) {
  if (projector.cols() != basis.vertex_count()) throw InputError("projector does not match basis");
  if (p_o < 0 || p_p < 0 || p_o > basis.rank() || p_p > basis.rank()) throw InputError("rank exceeds basis");
  LatentParameterization lat;
  lat.kind = correlated ? LatentKind::picar_correlated : LatentKind::picar;
  const Eigen::MatrixXd qm = precision * basis.vectors.leftCols(std::max(p_o, p_p));
  const Eigen::MatrixXd full = basis.vectors.leftCols(std::max(p_o, p_p)).transpose() * qm;
  lat.occurrence = make_block({projector, basis.vectors.leftCols(p_o)}, full.topLeftCorner(p_o, p_o));
  lat.prevalence = make_block({projector, basis.vectors.leftCols(p_p)}, full.topLeftCorner(p_p, p_p));
  return lat;
}

LatentParameterization make_frk(const Eigen::MatrixXd& phi) {
  LatentParameterization lat;
  lat.kind = LatentKind::frk_bisquare;
  const Index p = phi.cols();
  lat.occurrence = make_block({SparseRowMatrix(), phi}, Eigen::MatrixXd::Identity(p, p));
  lat.prevalence = lat.occurrence;
  return lat;
}

LatentParameterization make_gold_standard(const std::vector<Point2>& sites) {
  LatentParameterization lat;
  lat.kind = LatentKind::gold_standard;
  lat.sites = sites;
  const auto n = static_cast<Index>(sites.size());
  // gamma ~ N(0, tau^-1 I); the design is rebuilt from phi while sampling.
  LatentBlock b;
  b.prior.matrix = Eigen::MatrixXd::Identity(n, n);
  b.prior.cholesky_lower = Eigen::MatrixXd::Identity(n, n);
  b.prior.log_det = 0.0;
  lat.occurrence = b;
  lat.prevalence = b;
  return lat;
}

std::vector<std::string> ChainLayout::names() const {
  std::vector<std::string> out;
  for (Index j = 0; j < k; ++j) out.push_back("beta_o_" + std::to_string(j + 1));
  for (Index j = 0; j < k; ++j) out.push_back("beta_p_" + std::to_string(j + 1));
  const std::string coef = gold_standard ? "gamma" : "delta";
  for (Index j = 0; j < p_o; ++j) out.push_back(coef + "_o_" + std::to_string(j + 1));
  for (Index j = 0; j < p_p; ++j) out.push_back(coef + "_p_" + std::to_string(j + 1));
  if (correlated) out.push_back("rho");
  if (nugget) out.push_back("sigma2");
  out.push_back("tau_o");
  out.push_back("tau_p");
  if (gold_standard) {
    out.push_back("phi_o");
    out.push_back("phi_p");
  }
  return out;
}

Index ChainLayout::width() const {
  return 2 * k + p_o + p_p + (correlated ? 1 : 0) + (nugget ? 1 : 0) + 2 + (gold_standard ? 2 : 0);
}

Index ChainLayout::rho() const { return correlated ? 2 * k + p_o + p_p : -1; }
Index ChainLayout::nugget_col() const { return nugget ? 2 * k + p_o + p_p + (correlated ? 1 : 0) : -1; }
Index ChainLayout::tau_o() const { return 2 * k + p_o + p_p + (correlated ? 1 : 0) + (nugget ? 1 : 0); }
Index ChainLayout::phi_o() const { return gold_standard ? tau_p() + 1 : -1; }
Index ChainLayout::phi_p() const { return gold_standard ? tau_p() + 2 : -1; }

void ChainLayout::flatten(const ModelParams& m, Eigen::Ref<Eigen::VectorXd> row) const {
  row.segment(beta_o(), k) = m.beta_o;
  row.segment(beta_p(), k) = m.beta_p;
  row.segment(delta_o(), p_o) = m.delta_o;
  row.segment(delta_p(), p_p) = m.delta_p;
  if (correlated) row[rho()] = m.rho;
  if (nugget) row[nugget_col()] = m.nugget;
  row[tau_o()] = m.tau_o;
  row[tau_p()] = m.tau_p;
  if (gold_standard) {
    row[phi_o()] = m.phi_o;
    row[phi_p()] = m.phi_p;
  }
}

ModelParams ChainLayout::unflatten(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  if (row.size() != width()) throw InputError("chain row width does not match layout");
  ModelParams m;
  m.beta_o = row.segment(beta_o(), k).transpose();
  m.beta_p = row.segment(beta_p(), k).transpose();
  m.delta_o = row.segment(delta_o(), p_o).transpose();
  m.delta_p = row.segment(delta_p(), p_p).transpose();
  if (correlated) m.rho = row[rho()];
  if (nugget) m.nugget = row[nugget_col()];
  m.tau_o = row[tau_o()];
  m.tau_p = row[tau_p()];
  if (gold_standard) {
    m.phi_o = row[phi_o()];
    m.phi_p = row[phi_p()];
  }
  return m;
}

double BlockSummary::acceptance_rate() const {
  return proposals == 0 ? 0.0 : static_cast<double>(accepts) / static_cast<double>(proposals);
}

double BlockSummary::acceptance_after_burn_in() const {
  return proposals_after_burn_in == 0
             ? 0.0
             : static_cast<double>(accepts_after_burn_in) / static_cast<double>(proposals_after_burn_in);
}

double delta_logprior(const Eigen::VectorXd& delta, double tau, const ReducedPrecision& prior) {
  if (delta.size() != prior.dim()) throw InputError("delta length does not match prior");
  if (!(tau > 0.0)) return kNegInf;
  const auto p = static_cast<double>(delta.size());
  if (delta.size() == 0) return 0.0;
  return 0.5 * p * std::log(tau) + 0.5 * prior.log_det - 0.5 * tau * prior.quadratic(delta) - 0.5 * p * kLog2Pi;
}

double correlated_delta_logprior(const Eigen::VectorXd& delta_o, const Eigen::VectorXd& delta_p, double tau_o,
                                 double tau_p, double rho, const LatentBlock& occurrence,
                                 const LatentBlock& prevalence) {
  if (!(std::abs(rho) < 1.0)) return kNegInf;
  if (!(tau_o > 0.0 && tau_p > 0.0)) return kNegInf;
  if (delta_o.size() != occurrence.prior.dim() || delta_p.size() != prevalence.prior.dim()) {
    throw InputError("delta length does not match prior");
  }
  Eigen::VectorXd u_o, u_p;
  double out = whitened(delta_o, tau_o, occurrence, u_o) + whitened(delta_p, tau_p, prevalence, u_p);
  const Index q = std::min(u_o.size(), u_p.size());
  const double one_minus = 1.0 - rho * rho;
  double quad = 0.0;
  for (Index i = 0; i < q; ++i) {
    quad += (u_o[i] * u_o[i] - 2.0 * rho * u_o[i] * u_p[i] + u_p[i] * u_p[i]) / one_minus;
  }
  quad += u_o.tail(u_o.size() - q).squaredNorm() + u_p.tail(u_p.size() - q).squaredNorm();
  const auto dim = static_cast<double>(u_o.size() + u_p.size());
  out += -0.5 * dim * kLog2Pi - 0.5 * static_cast<double>(q) * std::log(one_minus) - 0.5 * quad;
  return out;
}

Eigen::MatrixXd exponential_factor(const std::vector<Point2>& sites, double phi) {
  if (!(phi > 0.0)) throw InputError("exponential range must be positive");
  Eigen::MatrixXd r = exponential_cross(sites, sites, phi);
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) {
    r.diagonal().array() += 1e-8;
    llt.compute(r);
    if (llt.info() != Eigen::Success) throw NumericalError("exponential correlation not positive definite");
  }
  return llt.matrixL();
}

namespace {

// Latent fields at the training sites for a parameter state.
void latent_fields(const ModelParams& m, const LatentParameterization& lat, Eigen::VectorXd& w_o,
                   Eigen::VectorXd& w_p) {
  if (lat.kind == LatentKind::gold_standard) {
    w_o = exponential_factor(lat.sites, m.phi_o).triangularView<Eigen::Lower>() * m.delta_o;
    w_p = exponential_factor(lat.sites, m.phi_p).triangularView<Eigen::Lower>() * m.delta_p;
  } else {
    lat.occurrence.design.apply(m.delta_o, w_o);
    lat.prevalence.design.apply(m.delta_p, w_p);
  }
}

void check_shapes(const ModelParams& m, const ModelData& data, const LatentParameterization& lat) {
  const Index n = data.z.size();
  if (data.x.rows() != n) throw InputError("covariate rows do not match observations");
  if (lat.sites_count() != n) throw InputError("latent design does not conform to the data");
  if (m.beta_o.size() != data.x.cols() || m.beta_p.size() != data.x.cols()) {
    throw InputError("beta length does not match covariates");
  }
  const Index p_o = lat.kind == LatentKind::gold_standard ? n : lat.occurrence.design.rank();
  const Index p_p = lat.kind == LatentKind::gold_standard ? n : lat.prevalence.design.rank();
  if (m.delta_o.size() != p_o || m.delta_p.size() != p_p) throw InputError("delta length does not match design");
}

}  // namespace

double log_posterior(const ModelParams& m, const ModelData& data, const LatentParameterization& lat,
                     const PriorSpec& pr) {
  check_shapes(m, data, lat);
  const bool gold = lat.kind == LatentKind::gold_standard;
  if (gold && !(m.phi_o > 0.0 && m.phi_o < pr.phi_upper && m.phi_p > 0.0 && m.phi_p < pr.phi_upper)) return kNegInf;
  if (data.family.has_nugget() && !(m.nugget > 0.0)) return kNegInf;
  if (!(m.tau_o > 0.0 && m.tau_p > 0.0)) return kNegInf;

  double lp = beta_logprior(m.beta_o, pr) + beta_logprior(m.beta_p, pr);
  lp += gamma_logpdf(m.tau_o, pr.tau_shape, pr.tau_rate) + gamma_logpdf(m.tau_p, pr.tau_shape, pr.tau_rate);
  if (data.family.has_nugget()) lp += inverse_gamma_logpdf(m.nugget, pr.nugget_shape, pr.nugget_rate);
  if (lat.kind == LatentKind::picar_correlated) {
    if (!(m.rho > pr.rho_lower && m.rho < pr.rho_upper)) return kNegInf;
    lp += -std::log(pr.rho_upper - pr.rho_lower);
    lp += correlated_delta_logprior(m.delta_o, m.delta_p, m.tau_o, m.tau_p, m.rho, lat.occurrence, lat.prevalence);
  } else {
    lp += delta_logprior(m.delta_o, m.tau_o, lat.occurrence.prior);
    lp += delta_logprior(m.delta_p, m.tau_p, lat.prevalence.prior);
  }
  if (gold) lp += -2.0 * std::log(pr.phi_upper);

  Eigen::VectorXd w_o, w_p;
  latent_fields(m, lat, w_o, w_p);
  const SiteLikelihood lik(data.family, data.link, data.z);
  const double var = data.family.has_nugget() ? m.nugget : 1.0;
  const double ll = lik.total(data.x * m.beta_o + w_o, data.x * m.beta_p + w_p, var);
  return std::isnan(ll) ? kNegInf : lp + ll;
}

namespace {

Eigen::MatrixXd dense_design(const LatentParameterization& lat, const LatentBlock& b, double phi) {
  if (lat.kind == LatentKind::gold_standard) return exponential_factor(lat.sites, phi);
  if (!b.design.projected()) return b.design.basis;
  return b.design.projector * b.design.basis;
}

// Penalized fit on [X, D] with unit ridge: the mode under tau = 1, up to the
// shape of P. Starting the fields at zero lets the conjugate tau update jump
// to tau ~ p / (2 b) and pins delta near zero for most of the burn-in.
std::pair<Eigen::VectorXd, Eigen::VectorXd> joint_start(GlmKind kind, const Eigen::MatrixXd& x, const Eigen::MatrixXd& d,
                                                        const Eigen::VectorXd& y, double* residual_variance) {
  Eigen::MatrixXd xd(x.rows(), x.cols() + d.cols());
  xd << x, d;
  GlmOptions opt;
  opt.ridge = 1.0;
  opt.max_iterations = 200;
  const GlmFit f = fit_glm(kind, xd, y, opt);
  if (residual_variance) *residual_variance = f.residual_variance;
  return {f.coefficients.head(x.cols()), f.coefficients.tail(d.cols())};
}

double conjugate_mean(const Eigen::VectorXd& delta, const ReducedPrecision& prior, const PriorSpec& pr) {
  const double shape = pr.tau_shape + 0.5 * static_cast<double>(delta.size());
  return shape / (pr.tau_rate + 0.5 * prior.quadratic(delta));
}

}  // namespace

ModelParams initial_params(const ModelData& data, const LatentParameterization& lat, const PriorSpec& pr) {
  ModelParams m;
  const Eigen::VectorXd zo = binarize_occurrence(data.z);
  const PositiveSubset pos = positive_subset(data.z, data.x);

  const Eigen::MatrixXd d_o = dense_design(lat, lat.occurrence, m.phi_o);
  std::tie(m.beta_o, m.delta_o) = joint_start(GlmKind::logistic, data.x, d_o, zo, nullptr);
  if (data.link == Link::probit) {  // logit-to-probit scale
    m.beta_o /= 1.6;
    m.delta_o /= 1.6;
  }

  const Eigen::MatrixXd d_p = dense_design(lat, lat.prevalence, m.phi_p)(pos.rows, Eigen::all);
  double s2 = 0.0;
  std::tie(m.beta_p, m.delta_p) = joint_start(prevalence_glm(data.family), pos.x, d_p, pos.z, &s2);
  m.nugget = data.family.has_nugget() ? std::max(s2, 1e-3) : 1.0;

  m.tau_o = conjugate_mean(m.delta_o, lat.occurrence.prior, pr);
  m.tau_p = conjugate_mean(m.delta_p, lat.prevalence.prior, pr);
  return m;
}

namespace {

class Sampler {
 public:
  Sampler(const ModelData& data, const LatentParameterization& lat, const PriorSpec& pr, const SamplerConfig& cfg)
      : data_(data), lat_(lat), pr_(pr), cfg_(cfg), lik_(data.family, data.link, data.z), rng_(cfg.seed) {
    gold_ = lat.kind == LatentKind::gold_standard;
    correlated_ = lat.kind == LatentKind::picar_correlated;
    nugget_ = data.family.has_nugget();
  }

  Chain run(ModelParams init);

 private:
  AdaptationSettings settings(double target, double scale) const {
    AdaptationSettings s;
    s.target_acceptance = target;
    s.window = cfg_.adaptation_window;
    s.initial_scale = scale;
    s.diagonal_above = cfg_.diagonal_above;
    return s;
  }
  AdaptiveProposal vector_block(const std::string& name, Index dim) const {
    if (dim == 1) return AdaptiveProposal(name, 1, settings(cfg_.scalar_target, cfg_.initial_scalar_scale));
    return AdaptiveProposal(name, dim, settings(cfg_.vector_target, cfg_.initial_vector_scale));
  }
  AdaptiveProposal scalar_block(const std::string& name) const {
    return AdaptiveProposal(name, 1, settings(cfg_.scalar_target, cfg_.initial_scalar_scale));
  }

  double loglik_occ(const Eigen::VectorXd& eta_o, Eigen::VectorXd& lp, Eigen::VectorXd& lq) const {
    if (!cfg_.use_likelihood) return 0.0;
    lik_.occurrence_terms(eta_o, lp, lq);
    return lik_.combine(lp, lq, r_);
  }
  double loglik_prev(const Eigen::VectorXd& eta_p, double var, Eigen::VectorXd& r) const {
    if (!cfg_.use_likelihood) return 0.0;
    lik_.prevalence_terms(eta_p, var, r);
    return lik_.combine(log_pi_, log_q_, r);
  }
  double variance() const { return nugget_ ? cur_.nugget : 1.0; }

  double delta_prior_o(const Eigen::VectorXd& d) const {
    return correlated_ ? correlated_delta_logprior(d, cur_.delta_p, cur_.tau_o, cur_.tau_p, cur_.rho, lat_.occurrence,
                                                   lat_.prevalence)
                       : delta_logprior(d, cur_.tau_o, lat_.occurrence.prior);
  }
  double delta_prior_p(const Eigen::VectorXd& d) const {
    return correlated_ ? correlated_delta_logprior(cur_.delta_o, d, cur_.tau_o, cur_.tau_p, cur_.rho, lat_.occurrence,
                                                   lat_.prevalence)
                       : delta_logprior(d, cur_.tau_p, lat_.prevalence.prior);
  }

  void field(bool occurrence, const Eigen::VectorXd& coef, Eigen::VectorXd& out) const {
    if (gold_) {
      out.noalias() = (occurrence ? l_o_ : l_p_).triangularView<Eigen::Lower>() * coef;
    } else {
      (occurrence ? lat_.occurrence : lat_.prevalence).design.apply(coef, out);
    }
  }

  void update_beta_o();
  void update_beta_p();
  void update_delta_o();
  void update_delta_p();
  void update_phi(bool occurrence);
  void update_rho();
  void update_nugget();
  void update_tau_conjugate(bool occurrence);
  void update_tau_walk(bool occurrence);

  const ModelData& data_;
  const LatentParameterization& lat_;
  const PriorSpec& pr_;
  const SamplerConfig& cfg_;
  SiteLikelihood lik_;
  Rng rng_;
  bool gold_ = false, correlated_ = false, nugget_ = false;

  ModelParams cur_;
  Eigen::VectorXd xb_o_, xb_p_, w_o_, w_p_, eta_o_, eta_p_;
  Eigen::VectorXd log_pi_, log_q_, r_;
  double ll_ = 0.0;
  Eigen::MatrixXd l_o_, l_p_;  // gold standard factors

  AdaptiveProposal beta_o_, beta_p_, delta_o_, delta_p_, phi_o_, phi_p_, rho_, nugget_block_, tau_o_, tau_p_;
  std::vector<AdaptiveProposal*> blocks_;

  // Scratch.
  Eigen::VectorXd vec_, xb_, w_, eta_, t1_, t2_, t3_;
};

void Sampler::update_beta_o() {
  beta_o_.propose(rng_, cur_.beta_o, vec_);
  xb_.noalias() = data_.x * vec_;
  eta_ = xb_ + w_o_;
  const double ll = loglik_occ(eta_, t1_, t2_);
  const double ratio = ll - ll_ + beta_logprior(vec_, pr_) - beta_logprior(cur_.beta_o, pr_);
  const bool ok = AdaptiveProposal::accept(rng_, ratio);
  if (ok) {
    cur_.beta_o.swap(vec_);
    xb_o_.swap(xb_);
    eta_o_.swap(eta_);
    log_pi_.swap(t1_);
    log_q_.swap(t2_);
    ll_ = ll;
  }
  beta_o_.record(cur_.beta_o, ok);
}

void Sampler::update_beta_p() {
  beta_p_.propose(rng_, cur_.beta_p, vec_);
  xb_.noalias() = data_.x * vec_;
  eta_ = xb_ + w_p_;
  const double ll = loglik_prev(eta_, variance(), t3_);
  const double ratio = ll - ll_ + beta_logprior(vec_, pr_) - beta_logprior(cur_.beta_p, pr_);
  const bool ok = AdaptiveProposal::accept(rng_, ratio);
  if (ok) {
    cur_.beta_p.swap(vec_);
    xb_p_.swap(xb_);
    eta_p_.swap(eta_);
    r_.swap(t3_);
    ll_ = ll;
  }
  beta_p_.record(cur_.beta_p, ok);
}

void Sampler::update_delta_o() {
  if (cur_.delta_o.size() == 0) return;
  delta_o_.propose(rng_, cur_.delta_o, vec_);
  field(true, vec_, w_);
  eta_ = xb_o_ + w_;
  const double ll = loglik_occ(eta_, t1_, t2_);
  const double ratio = ll - ll_ + delta_prior_o(vec_) - delta_prior_o(cur_.delta_o);
  const bool ok = AdaptiveProposal::accept(rng_, ratio);
  if (ok) {
    cur_.delta_o.swap(vec_);
    w_o_.swap(w_);
    eta_o_.swap(eta_);
    log_pi_.swap(t1_);
    log_q_.swap(t2_);
    ll_ = ll;
  }
  delta_o_.record(cur_.delta_o, ok);
}

void Sampler::update_delta_p() {
  if (cur_.delta_p.size() == 0) return;
  delta_p_.propose(rng_, cur_.delta_p, vec_);
  field(false, vec_, w_);
  eta_ = xb_p_ + w_;
  const double ll = loglik_prev(eta_, variance(), t3_);
  const double ratio = ll - ll_ + delta_prior_p(vec_) - delta_prior_p(cur_.delta_p);
  const bool ok = AdaptiveProposal::accept(rng_, ratio);
  if (ok) {
    cur_.delta_p.swap(vec_);
    w_p_.swap(w_);
    eta_p_.swap(eta_);
    r_.swap(t3_);
    ll_ = ll;
  }
  delta_p_.record(cur_.delta_p, ok);
}

void Sampler::update_phi(bool occurrence) {
  AdaptiveProposal& block = occurrence ? phi_o_ : phi_p_;
  double& phi = occurrence ? cur_.phi_o : cur_.phi_p;
  const double proposal = block.propose(rng_, phi);
  bool ok = false;
  if (proposal > 0.0 && proposal < pr_.phi_upper) {
    Eigen::MatrixXd factor = exponential_factor(lat_.sites, proposal);
    const Eigen::VectorXd& coef = occurrence ? cur_.delta_o : cur_.delta_p;
    w_.noalias() = factor.triangularView<Eigen::Lower>() * coef;
    double ll;
    if (occurrence) {
      eta_ = xb_o_ + w_;
      ll = loglik_occ(eta_, t1_, t2_);
    } else {
      eta_ = xb_p_ + w_;
      ll = loglik_prev(eta_, variance(), t3_);
    }
    ok = AdaptiveProposal::accept(rng_, ll - ll_);  // uniform prior
    if (ok) {
      phi = proposal;
      ll_ = ll;
      if (occurrence) {
        l_o_.swap(factor);
        w_o_.swap(w_);
        eta_o_.swap(eta_);
        log_pi_.swap(t1_);
        log_q_.swap(t2_);
      } else {
        l_p_.swap(factor);
        w_p_.swap(w_);
        eta_p_.swap(eta_);
        r_.swap(t3_);
      }
    }
  }
  block.record(phi, ok);
}

void Sampler::update_rho() {
  const double proposal = rho_.propose(rng_, cur_.rho);
  bool ok = false;
  if (proposal > pr_.rho_lower && proposal < pr_.rho_upper) {
    const double ratio =
        correlated_delta_logprior(cur_.delta_o, cur_.delta_p, cur_.tau_o, cur_.tau_p, proposal, lat_.occurrence,
                                  lat_.prevalence) -
        correlated_delta_logprior(cur_.delta_o, cur_.delta_p, cur_.tau_o, cur_.tau_p, cur_.rho, lat_.occurrence,
                                  lat_.prevalence);
    ok = AdaptiveProposal::accept(rng_, ratio);
    if (ok) cur_.rho = proposal;
  }
  rho_.record(cur_.rho, ok);
}

void Sampler::update_nugget() {
  // Random walk on log sigma^2; the Jacobian adds log sigma^2.
  const double log_cur = std::log(cur_.nugget);
  const double log_new = nugget_block_.propose(rng_, log_cur);
  const double proposal = std::exp(log_new);
  const double ll = loglik_prev(eta_p_, proposal, t3_);
  const double ratio = ll - ll_ + inverse_gamma_logpdf(proposal, pr_.nugget_shape, pr_.nugget_rate) + log_new -
                       inverse_gamma_logpdf(cur_.nugget, pr_.nugget_shape, pr_.nugget_rate) - log_cur;
  const bool ok = proposal > 0.0 && std::isfinite(proposal) && AdaptiveProposal::accept(rng_, ratio);
  if (ok) {
    cur_.nugget = proposal;
    r_.swap(t3_);
    ll_ = ll;
  }
  nugget_block_.record(std::log(cur_.nugget), ok);
}

void Sampler::update_tau_conjugate(bool occurrence) {
  const Eigen::VectorXd& d = occurrence ? cur_.delta_o : cur_.delta_p;
  if (d.size() == 0) return;
  const ReducedPrecision& prior = (occurrence ? lat_.occurrence : lat_.prevalence).prior;
  const double quad = gold_ ? d.squaredNorm() : prior.quadratic(d);
  const double shape = pr_.tau_shape + 0.5 * static_cast<double>(d.size());
  const double rate = pr_.tau_rate + 0.5 * quad;
  const double draw = rng_.gamma(shape, rate);
  if (draw > 0.0 && std::isfinite(draw)) (occurrence ? cur_.tau_o : cur_.tau_p) = draw;
}

void Sampler::update_tau_walk(bool occurrence) {
  AdaptiveProposal& block = occurrence ? tau_o_ : tau_p_;
  double& tau = occurrence ? cur_.tau_o : cur_.tau_p;
  const double log_cur = std::log(tau);
  const double log_new = block.propose(rng_, log_cur);
  const double proposal = std::exp(log_new);
  auto target = [&](double t) {
    const double to = occurrence ? t : cur_.tau_o;
    const double tp = occurrence ? cur_.tau_p : t;
    return correlated_delta_logprior(cur_.delta_o, cur_.delta_p, to, tp, cur_.rho, lat_.occurrence,
                                     lat_.prevalence) +
           gamma_logpdf(t, pr_.tau_shape, pr_.tau_rate) + std::log(t);
  };
  const bool ok = proposal > 0.0 && std::isfinite(proposal) &&
                  AdaptiveProposal::accept(rng_, target(proposal) - target(tau));
  if (ok) tau = proposal;
  block.record(std::log(tau), ok);
}

Chain Sampler::run(ModelParams init) {
  const auto start = std::chrono::steady_clock::now();
  cur_ = std::move(init);
  const Index k = data_.x.cols();
  if (gold_) {
    l_o_ = exponential_factor(lat_.sites, cur_.phi_o);
    l_p_ = exponential_factor(lat_.sites, cur_.phi_p);
  }

  const double lp0 = log_posterior(cur_, data_, lat_, pr_);
  if (!std::isfinite(lp0)) throw NumericalError("invalid initialization");

  xb_o_ = data_.x * cur_.beta_o;
  xb_p_ = data_.x * cur_.beta_p;
  field(true, cur_.delta_o, w_o_);
  field(false, cur_.delta_p, w_p_);
  eta_o_ = xb_o_ + w_o_;
  eta_p_ = xb_p_ + w_p_;
  lik_.occurrence_terms(eta_o_, log_pi_, log_q_);
  lik_.prevalence_terms(eta_p_, variance(), r_);
  ll_ = cfg_.use_likelihood ? lik_.combine(log_pi_, log_q_, r_) : 0.0;

  beta_o_ = vector_block("beta_o", k);
  beta_p_ = vector_block("beta_p", k);
  blocks_ = {&beta_o_, &beta_p_};
  if (cur_.delta_o.size() > 0) {
    delta_o_ = vector_block(gold_ ? "gamma_o" : "delta_o", cur_.delta_o.size());
    blocks_.push_back(&delta_o_);
  }
  if (cur_.delta_p.size() > 0) {
    delta_p_ = vector_block(gold_ ? "gamma_p" : "delta_p", cur_.delta_p.size());
    blocks_.push_back(&delta_p_);
  }
  if (gold_) {
    phi_o_ = scalar_block("phi_o");
    phi_p_ = scalar_block("phi_p");
    blocks_.push_back(&phi_o_);
    blocks_.push_back(&phi_p_);
  }
  if (correlated_) {
    rho_ = scalar_block("rho");
    blocks_.push_back(&rho_);
  }
  if (nugget_) {
    nugget_block_ = scalar_block("sigma2");
    blocks_.push_back(&nugget_block_);
  }
  if (correlated_) {
    tau_o_ = scalar_block("tau_o");
    tau_p_ = scalar_block("tau_p");
    blocks_.push_back(&tau_o_);
    blocks_.push_back(&tau_p_);
  }

  Chain chain;
  chain.kind = lat_.kind;
  chain.layout.k = k;
  chain.layout.p_o = cur_.delta_o.size();
  chain.layout.p_p = cur_.delta_p.size();
  chain.layout.correlated = correlated_;
  chain.layout.nugget = nugget_;
  chain.layout.gold_standard = gold_;
  chain.seed = cfg_.seed;
  chain.iterations = cfg_.iterations;
  chain.burn_in = cfg_.burn_in;
  chain.thinning = cfg_.thinning;
  chain.draws.resize(cfg_.retained(), chain.layout.width());
  Eigen::VectorXd row(chain.layout.width());

  auto snapshot = [&] {
    std::vector<double> s;
    for (const AdaptiveProposal* b : blocks_) s.push_back(b->log_scale());
    return s;
  };
  if (cfg_.burn_in == 0) {
    for (AdaptiveProposal* b : blocks_) b->freeze();
    chain.scales_at_burn_in = snapshot();
  }

  Index stored = 0;
  for (long t = 1; t <= cfg_.iterations; ++t) {
    update_beta_o();
    update_beta_p();
    update_delta_o();
    update_delta_p();
    if (gold_) {
      update_phi(true);
      update_phi(false);
    }
    if (correlated_) update_rho();
    if (nugget_) update_nugget();
    if (correlated_) {
      update_tau_walk(true);
      update_tau_walk(false);
    } else {
      update_tau_conjugate(true);
      update_tau_conjugate(false);
    }

    if (t == cfg_.burn_in) {
      for (AdaptiveProposal* b : blocks_) b->freeze();
      chain.scales_at_burn_in = snapshot();
    }
    if (t > cfg_.burn_in && (t - cfg_.burn_in) % cfg_.thinning == 0) {
      chain.layout.flatten(cur_, row);
      chain.draws.row(stored++) = row.transpose();
    }
    // Guard against slow drift between the incremental and full likelihood.
    if (cfg_.use_likelihood && t % 5000 == 0) {
      ll_ = lik_.combine(log_pi_, log_q_, r_);
      if (!std::isfinite(ll_)) throw NumericalError("log-likelihood became non-finite during sampling");
    }
  }
  chain.scales_at_end = snapshot();
  for (const AdaptiveProposal* b : blocks_) {
    BlockSummary s;
    s.name = b->name();
    s.proposals = b->proposals();
    s.accepts = b->accepts();
    s.proposals_after_burn_in = b->frozen_proposals();
    s.accepts_after_burn_in = b->frozen_accepts();
    s.log_scale = b->log_scale();
    s.frozen = b->frozen();
    chain.blocks.push_back(s);
  }
  chain.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return chain;
}

}  // namespace

Chain fit(const ModelData& data, const LatentParameterization& latent, const PriorSpec& priors,
          const SamplerConfig& config, const std::optional<ModelParams>& init) {
  priors.validate();
  config.validate();
  ModelParams start = init ? *init : initial_params(data, latent, priors);
  check_shapes(start, data, latent);
  Sampler sampler(data, latent, priors, config);
  return sampler.run(std::move(start));
}

namespace {

Prediction summarize(const TwoPartFamily& family, Link link, const Eigen::MatrixXd& eta_o,
                     const Eigen::MatrixXd& eta_p, const Eigen::VectorXd& variance) {
  const Index n = eta_o.rows(), draws = eta_o.cols();
  Prediction out;
  out.mean = Eigen::VectorXd::Zero(n);
  out.sd = Eigen::VectorXd::Zero(n);
  out.pi = Eigen::VectorXd::Zero(n);
  out.positive = Eigen::VectorXd::Zero(n);
  out.eta_p = eta_p.rowwise().mean();
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(n);
  for (Index d = 0; d < draws; ++d) {
    for (Index i = 0; i < n; ++i) {
      const double pi = occurrence_prob(eta_o(i, d), link);
      const double location = family.is_count() ? std::exp(eta_p(i, d)) : eta_p(i, d);
      const double mean = predictive_mean(family, pi, location, variance[d]);
      out.mean[i] += mean;
      sq[i] += mean * mean;
      out.pi[i] += pi;
      out.positive[i] += prob_positive(family, pi, location, variance[d]);
    }
  }
  const auto m = static_cast<double>(draws);
  out.mean /= m;
  out.pi /= m;
  out.positive /= m;
  for (Index i = 0; i < n; ++i) {
    out.sd[i] = draws > 1 ? std::sqrt(std::max(0.0, (sq[i] - m * out.mean[i] * out.mean[i]) / (m - 1.0))) : 0.0;
  }
  return out;
}

Eigen::VectorXd draw_variances(const Chain& chain) {
  const Index r = chain.draws.rows();
  if (chain.layout.nugget) return chain.draws.col(chain.layout.nugget_col());
  return Eigen::VectorXd::Ones(r);
}

}  // namespace

Prediction predict(const Chain& chain, const TwoPartFamily& family, Link link, const Eigen::MatrixXd& x_new,
                   const SiteDesign& occurrence, const SiteDesign& prevalence) {
  if (chain.kind == LatentKind::gold_standard) throw InputError("use predict_gold_standard for gold-standard chains");
  if (chain.draws.rows() == 0) throw InputError("chain has no retained draws");
  const ChainLayout& L = chain.layout;
  if (x_new.cols() != L.k) throw InputError("covariate count does not match chain");
  for (const SiteDesign* d : {&occurrence, &prevalence}) {
    if (d->projected() && d->projector.cols() != d->basis.rows()) throw InputError("mesh mismatch");
    if (d->sites() != x_new.rows()) throw InputError("design rows do not match covariates");
  }
  if (occurrence.rank() != L.p_o || prevalence.rank() != L.p_p) throw InputError("mesh mismatch");
  const Eigen::MatrixXd& D = chain.draws;
  Eigen::MatrixXd eta_o = x_new * D.middleCols(L.beta_o(), L.k).transpose();
  Eigen::MatrixXd eta_p = x_new * D.middleCols(L.beta_p(), L.k).transpose();
  if (L.p_o > 0) eta_o += occurrence.apply_draws(D.middleCols(L.delta_o(), L.p_o));
  if (L.p_p > 0) eta_p += prevalence.apply_draws(D.middleCols(L.delta_p(), L.p_p));
  return summarize(family, link, eta_o, eta_p, draw_variances(chain));
}

Prediction predict_gold_standard(const Chain& chain, const TwoPartFamily& family, Link link,
                                 const Eigen::MatrixXd& x_new, const std::vector<Point2>& train_sites,
                                 const std::vector<Point2>& new_sites) {
  if (chain.kind != LatentKind::gold_standard) throw InputError("chain is not a gold-standard chain");
  if (chain.draws.rows() == 0) throw InputError("chain has no retained draws");
  const ChainLayout& L = chain.layout;
  if (static_cast<Index>(train_sites.size()) != L.p_o) throw InputError("training sites do not match chain");
  if (static_cast<Index>(new_sites.size()) != x_new.rows()) throw InputError("new sites do not match covariates");
  if (x_new.cols() != L.k) throw InputError("covariate count does not match chain");
  const Index draws = chain.draws.rows();
  Eigen::MatrixXd eta_o = x_new * chain.draws.middleCols(L.beta_o(), L.k).transpose();
  Eigen::MatrixXd eta_p = x_new * chain.draws.middleCols(L.beta_p(), L.k).transpose();

  struct Cache {
    double phi = -1.0;
    Eigen::MatrixXd factor, cross;
  } cache[2];
  for (Index d = 0; d < draws; ++d) {
    for (int proc = 0; proc < 2; ++proc) {
      const double phi = chain.draws(d, proc == 0 ? L.phi_o() : L.phi_p());
      Cache& c = cache[proc];
      if (phi != c.phi) {
        c.phi = phi;
        c.factor = exponential_factor(train_sites, phi);
        c.cross = exponential_cross(new_sites, train_sites, phi);
      }
      const Eigen::VectorXd gamma =
          chain.draws.row(d).segment(proc == 0 ? L.delta_o() : L.delta_p(), proc == 0 ? L.p_o : L.p_p).transpose();
      const Eigen::VectorXd v = c.factor.transpose().triangularView<Eigen::Upper>().solve(gamma);
      (proc == 0 ? eta_o : eta_p).col(d) += c.cross * v;
    }
  }
  return summarize(family, link, eta_o, eta_p, draw_variances(chain));
}

}  // namespace picarz
