#include "picarz/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "picarz/error.hpp"
#include "picarz/random.hpp"

namespace picarz {
namespace {

void center_columns(Eigen::MatrixXd& x) {
  x.rowwise() -= x.colwise().mean();
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& x) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  return qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
}

// Flip each column so its first entry of non-negligible magnitude is positive.
void fix_signs(Eigen::MatrixXd& v) {
  for (Index j = 0; j < v.cols(); ++j) {
    const double cutoff = 1e-8 * v.col(j).cwiseAbs().maxCoeff();
    for (Index i = 0; i < v.rows(); ++i) {
      if (std::abs(v(i, j)) > cutoff) {
        if (v(i, j) < 0.0) v.col(j) *= -1.0;
        break;
      }
    }
  }
}

MoranBasis dense_leading(const Eigen::MatrixXd& op, Index p, const EigenOptions& options) {
  const Index m = op.rows();
  Eigen::MatrixXd work = 0.5 * (op + op.transpose());
  if (options.deflate_constant) {
    // Push the constant direction to the bottom of the spectrum.
    const double shift = 2.0 * std::max(1.0, work.cwiseAbs().rowwise().sum().maxCoeff());
    work.array() -= shift / static_cast<double>(m);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(work);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigendecomposition failed");
  MoranBasis out;
  out.vectors.resize(m, p);
  out.eigenvalues.resize(p);
  for (Index j = 0; j < p; ++j) {
    out.vectors.col(j) = es.eigenvectors().col(m - 1 - j);
    out.eigenvalues[j] = es.eigenvalues()[m - 1 - j];
  }
  if (options.deflate_constant) center_columns(out.vectors);
  fix_signs(out.vectors);
  return out;
}

// Chebyshev-filtered orthogonal iteration with Rayleigh-Ritz extraction.
MoranBasis subspace_leading(const SymmetricOperator& op, Index p, const EigenOptions& options) {
  const Index m = op.size;
  const Index available = options.deflate_constant ? m - 1 : m;
  const Index block = std::min(available, std::max(p + 8, p + p / 4 + 4));
  const double bound = std::max(op.norm_bound, 1e-300);
  const double lower = -bound;

  Rng rng(options.seed);
  Eigen::MatrixXd x(m, block);
  for (Index j = 0; j < block; ++j) x.col(j) = rng.normal_vector(m);
  if (options.deflate_constant) center_columns(x);
  x = orthonormalize(x);

  Eigen::MatrixXd ax(m, block), y0, y1, y2, tmp(m, block);
  Eigen::VectorXd ritz;
  auto rayleigh_ritz = [&]() {
    op.apply(x, ax);
    Eigen::MatrixXd h = x.transpose() * ax;
    h = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz eigensolve failed");
    const Eigen::MatrixXd v = es.eigenvectors().rowwise().reverse();
    ritz = es.eigenvalues().reverse();
    x = x * v;
    ax = ax * v;
  };
  rayleigh_ritz();

  const int degree = std::max(1, options.filter_degree);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    double worst = 0.0;
    for (Index j = 0; j < p; ++j) {
      worst = std::max(worst, (ax.col(j) - ritz[j] * x.col(j)).norm());
    }
    if (worst <= options.tolerance * bound) {
      MoranBasis out;
      out.vectors = x.leftCols(p);
      out.eigenvalues = ritz.head(p);
      if (options.deflate_constant) center_columns(out.vectors);
      fix_signs(out.vectors);
      return out;
    }
    // Damp [lower, cut], amplify (cut, bound]; iterates are scaled by T_k at the upper bound.
    double cut = ritz[block - 1];
    cut = std::max(cut, lower + 1e-3 * (bound - lower));
    const double e = 0.5 * (cut - lower);
    const double c = 0.5 * (cut + lower);
    const double x_up = (bound - c) / e;
    double t0 = 1.0, t1 = x_up;
    y0 = x;
    op.apply(y0, tmp);
    y1 = (tmp - c * y0) / (e * t1);
    for (int k = 2; k <= degree; ++k) {
      const double t2 = 2.0 * x_up * t1 - t0;
      op.apply(y1, tmp);
      y2 = (2.0 * t1 / (e * t2)) * (tmp - c * y1) - (t0 / t2) * y0;
      y0.swap(y1);
      y1.swap(y2);
      t0 = t1;
      t1 = t2;
    }
    if (options.deflate_constant) center_columns(y1);
    x = orthonormalize(y1);
    rayleigh_ritz();
  }
  throw NumericalError("eigensolver did not converge");
}

}  // namespace

MoranBasis MoranBasis::leading(Index p) const {
  if (p > rank()) throw InputError("requested rank exceeds basis size");
  return {vectors.leftCols(p), eigenvalues.head(p)};
}

Eigen::MatrixXd moran_operator(const AdjacencyMatrix& adjacency) {
  const Index m = adjacency.size();
  const Eigen::MatrixXd n = Eigen::MatrixXd(adjacency.weights);
  const Eigen::VectorXd r = adjacency.degree;
  const double s = r.sum();
  const double md = static_cast<double>(m);
  Eigen::MatrixXd out(m, m);
  // Entry-wise form of C N C; (r_i + r_j) keeps the result exactly symmetric.
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < m; ++i) {
      out(i, j) = n(i, j) - (r[i] + r[j]) / md + s / (md * md);
    }
  }
  return out;
}

void MoranOperator::apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const {
  Eigen::MatrixXd centered = in.rowwise() - in.colwise().mean();
  out = (*weights_) * centered;
  center_columns(out);
}

double MoranOperator::norm_bound() const {
  // ||CNC|| <= ||N|| <= max row sum.
  double best = 0.0;
  for (Index k = 0; k < weights_->outerSize(); ++k) {
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(*weights_, k); it; ++it) sum += std::abs(it.value());
    best = std::max(best, sum);
  }
  return best;
}

MoranBasis leading_eigenvectors(const Eigen::MatrixXd& op, Index p, const EigenOptions& options) {
  const Index m = op.rows();
  if (op.cols() != m) throw InputError("leading_eigenvectors: operator must be square");
  if (p < 1 || p >= m) throw InputError("leading_eigenvectors: need 1 <= p < m");
  const bool dense = options.method == EigenMethod::dense ||
                     (options.method == EigenMethod::automatic && m <= options.dense_threshold);
  if (dense) return dense_leading(op, p, options);
  SymmetricOperator sym;
  sym.size = m;
  sym.norm_bound = op.cwiseAbs().rowwise().sum().maxCoeff();
  sym.apply = [&op](const Eigen::MatrixXd& in, Eigen::MatrixXd& out) { out.noalias() = op * in; };
  return subspace_leading(sym, p, options);
}

MoranBasis leading_eigenvectors(const SymmetricOperator& op, Index p, const EigenOptions& options) {
  if (p < 1 || p >= op.size) throw InputError("leading_eigenvectors: need 1 <= p < m");
  if (options.deflate_constant && p >= op.size - 1) {
    throw InputError("leading_eigenvectors: need p < m - 1 with constant deflation");
  }
  return subspace_leading(op, p, options);
}

MoranBasis moran_basis(const AdjacencyMatrix& adjacency, Index p, const EigenOptions& options) {
  EigenOptions opts = options;
  opts.deflate_constant = true;
  const Index m = adjacency.size();
  if (p < 1 || p >= m) throw InputError("moran_basis: need 1 <= p < m");
  const bool dense = opts.method == EigenMethod::dense ||
                     (opts.method == EigenMethod::automatic && m <= opts.dense_threshold);
  if (dense) return dense_leading(moran_operator(adjacency), p, opts);
  MoranOperator moran(adjacency);
  SymmetricOperator sym;
  sym.size = m;
  sym.norm_bound = moran.norm_bound();
  sym.apply = [&moran](const Eigen::MatrixXd& in, Eigen::MatrixXd& out) { moran.apply(in, out); };
  return leading_eigenvectors(sym, p, opts);
}

double morans_i(const AdjacencyMatrix& adjacency, const Eigen::VectorXd& z) {
  const Index m = adjacency.size();
  if (z.size() != m) throw InputError("morans_i: length mismatch");
  const double total_weight = adjacency.degree.sum();
  if (!(total_weight > 0.0)) throw InputError("morans_i: graph has no edges");
  const Eigen::VectorXd zc = z.array() - z.mean();
  const double denom = zc.squaredNorm();
  if (!(denom > 1e-300) || denom <= 1e-28 * z.squaredNorm()) throw InputError("zero variance");
  const double numer = zc.dot(adjacency.weights * zc);
  return static_cast<double>(m) / total_weight * numer / denom;
}

SparseMatrix build_precision(const AdjacencyMatrix& adjacency, const PrecisionSpec& spec) {
  const Index m = adjacency.size();
  SparseMatrix q(m, m);
  if (spec.kind == PrecisionKind::identity) {
    q.setIdentity();
    return q;
  }
  double rho = 1.0;
  if (spec.kind == PrecisionKind::car) {
    if (!(spec.car_rho > 0.0 && spec.car_rho < 1.0)) throw InputError("CAR rho must lie in (0, 1)");
    rho = spec.car_rho;
  }
  SparseMatrix d(m, m);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) trips.emplace_back(i, i, adjacency.degree[i]);
  d.setFromTriplets(trips.begin(), trips.end());
  q = d - rho * adjacency.weights;
  q.makeCompressed();
  return q;
}

double ReducedPrecision::quadratic(const Eigen::VectorXd& delta) const {
  return (cholesky_lower.transpose() * delta).squaredNorm();
}

ReducedPrecision make_reduced_precision(Eigen::MatrixXd matrix) {
  ReducedPrecision out;
  out.matrix = 0.5 * (matrix + matrix.transpose());
  if (out.matrix.rows() == 0) return out;
  Eigen::LLT<Eigen::MatrixXd> llt(out.matrix);
  if (llt.info() != Eigen::Success) throw NumericalError("reduced precision not positive definite");
  out.cholesky_lower = llt.matrixL();
  const Eigen::VectorXd diag = out.cholesky_lower.diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) {
    throw NumericalError("reduced precision not positive definite");
  }
  out.log_det = 2.0 * diag.array().log().sum();
  return out;
}

ReducedPrecision reduced_precision(const MoranBasis& basis, const SparseMatrix& precision) {
  if (precision.rows() != basis.vertex_count() || precision.cols() != basis.vertex_count()) {
    throw InputError("reduced_precision: dimension mismatch");
  }
  const Eigen::MatrixXd qm = precision * basis.vectors;
  return make_reduced_precision(basis.vectors.transpose() * qm);
}

void write_basis(std::ostream& out, const MoranBasis& basis) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << basis.vertex_count() << ' ' << basis.rank() << '\n';
  for (Index j = 0; j < basis.rank(); ++j) out << (j ? " " : "") << basis.eigenvalues[j];
  out << '\n';
  for (Index i = 0; i < basis.vertex_count(); ++i) {
    for (Index j = 0; j < basis.rank(); ++j) out << (j ? " " : "") << basis.vectors(i, j);
    out << '\n';
  }
  out.precision(old);
  if (!out) throw IoError("failed to write basis");
}

MoranBasis read_basis(std::istream& in) {
  Index m = 0, p = 0;
  if (!(in >> m >> p) || m < 1 || p < 0) throw InputError("basis file: bad header");
  MoranBasis b;
  b.eigenvalues.resize(p);
  b.vectors.resize(m, p);
  for (Index j = 0; j < p; ++j) {
    if (!(in >> b.eigenvalues[j])) throw InputError("basis file: truncated eigenvalues");
  }
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < p; ++j) {
      if (!(in >> b.vectors(i, j))) throw InputError("basis file: truncated coefficients");
    }
  }
  return b;
}

}  // namespace picarz
