#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "picarz/geometry.hpp"

namespace picarz {

/// Leading eigenvectors of the Moran operator, as columns, with their
/// eigenvalues in descending order.
struct MoranBasis {
  Eigen::MatrixXd vectors;       ///< m x p, orthonormal, columns orthogonal to 1
  Eigen::VectorXd eigenvalues;   ///< length p, descending

  Index vertex_count() const { return vectors.rows(); }
  Index rank() const { return vectors.cols(); }
  /// Basis restricted to its first p columns.
  MoranBasis leading(Index p) const;
};

/// Dense (I - 11'/m) N (I - 11'/m).
Eigen::MatrixXd moran_operator(const AdjacencyMatrix& adjacency);

/// Matrix-free Moran operator: centers, applies the sparse adjacency, centers.
class MoranOperator {
 public:
  explicit MoranOperator(const AdjacencyMatrix& adjacency) : weights_(&adjacency.weights) {}

  Index size() const { return weights_->rows(); }
  void apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const;
  /// Gershgorin-type bound on the spectral radius.
  double norm_bound() const;

 private:
  const SparseMatrix* weights_;
};

enum class EigenMethod {
  automatic,          ///< dense below dense_threshold, subspace iteration above
  dense,              ///< full self-adjoint decomposition
  subspace_iteration  ///< Chebyshev-filtered orthogonal iteration + Rayleigh-Ritz
};

struct EigenOptions {
  EigenMethod method = EigenMethod::automatic;
  Index dense_threshold = 600;
  double tolerance = 1e-10;     ///< max residual ||Av - lv|| relative to the spectral bound
  int filter_degree = 16;
  int max_iterations = 2000;
  std::uint64_t seed = 20240601;
  /// Keep iterates orthogonal to the constant vector (Moran operators only).
  bool deflate_constant = false;
};

/// Symmetric linear operator passed to the iterative eigensolver.
struct SymmetricOperator {
  Index size = 0;
  double norm_bound = 0.0;
  std::function<void(const Eigen::MatrixXd&, Eigen::MatrixXd&)> apply;
};

/// Top-p eigenpairs of a dense symmetric matrix.
MoranBasis leading_eigenvectors(const Eigen::MatrixXd& op, Index p, const EigenOptions& options = {});
/// Top-p eigenpairs of a matrix-free symmetric operator (subspace iteration only).
MoranBasis leading_eigenvectors(const SymmetricOperator& op, Index p, const EigenOptions& options = {});
/// Moran basis of a mesh graph; uses the matrix-free operator for large meshes.
MoranBasis moran_basis(const AdjacencyMatrix& adjacency, Index p, const EigenOptions& options = {});

/// Moran's I statistic of z on the graph.
double morans_i(const AdjacencyMatrix& adjacency, const Eigen::VectorXd& z);

enum class PrecisionKind { icar, car, identity };

struct PrecisionSpec {
  PrecisionKind kind = PrecisionKind::icar;
  double car_rho = 0.0;  ///< in (0, 1) for CAR
};

/// ICAR: diag(N1) - N; CAR: diag(N1) - rho N; identity: I.
SparseMatrix build_precision(const AdjacencyMatrix& adjacency, const PrecisionSpec& spec);

/// P = M'QM with its Cholesky factor and log-determinant.
struct ReducedPrecision {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd cholesky_lower;
  double log_det = 0.0;

  Index dim() const { return matrix.rows(); }
  /// delta' P delta
  double quadratic(const Eigen::VectorXd& delta) const;
};

ReducedPrecision reduced_precision(const MoranBasis& basis, const SparseMatrix& precision);
/// Factor an arbitrary symmetric positive definite prior precision.
ReducedPrecision make_reduced_precision(Eigen::MatrixXd matrix);

/// Text format: "m p", one line of p eigenvalues, m rows of p coefficients.
void write_basis(std::ostream& out, const MoranBasis& basis);
MoranBasis read_basis(std::istream& in);

}  // namespace picarz
