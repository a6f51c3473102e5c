#pragma once

// Independent reference computations. None of these call into the library
// code they are used to check.

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "picarz/geometry.hpp"

namespace oracle {

/// Cyclic Jacobi rotations; eigenvalues in descending order.
Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a, double tol = 1e-13, int max_sweeps = 100);
/// Eigenvalues (descending) and matching eigenvector columns.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a, double tol = 1e-13, int max_sweeps = 100);

/// Cosines of the principal angles between the column spaces of two
/// orthonormal bases (singular values of A'B), ascending.
Eigen::VectorXd principal_cosines(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Largest number of mesh vertices strictly inside any triangle's circumcircle
/// (0 for a Delaunay triangulation), with a relative tolerance on the radius.
int circumcircle_violations(const picarz::TriangleMesh& mesh, double rel_tol = 1e-9);

/// Brute-force barycentric weights of p in triangle (a, b, c) by Cramer's rule.
std::array<double, 3> barycentric(const picarz::Point2& a, const picarz::Point2& b, const picarz::Point2& c,
                                  const picarz::Point2& p);

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

/// Exhaustive-pair AUC: (concordant + ties / 2) / (n0 n1).
double pair_auc(const Eigen::VectorXd& labels, const Eigen::VectorXd& scores);

/// Dense multivariate normal log density by explicit inverse and determinant.
double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

/// Stationary AR(1) draws with unit innovation variance, from a fixed seed.
Eigen::VectorXd ar1(double phi, Eigen::Index length, std::uint64_t seed);

/// Hand-written log-likelihoods for the GLM grid-search oracles.
double logistic_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);
double ztp_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);

/// Maximizer of f over a 2-d grid refined `levels` times around the best point.
Eigen::Vector2d grid_search_2d(const std::function<double(const Eigen::Vector2d&)>& f, Eigen::Vector2d center,
                               double half_width, int points = 41, int levels = 6);

}  // namespace oracle
