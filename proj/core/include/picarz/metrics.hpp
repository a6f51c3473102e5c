#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "picarz/geometry.hpp"

namespace picarz {

/// sqrt(mean((truth - predicted)^2)).
double rmspe(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted);

/// Mann-Whitney AUC: (concordant pairs + ties / 2) / (n0 * n1). Labels are
/// 1 for a nonzero observation and 0 otherwise.
double auc(const Eigen::VectorXd& labels, const Eigen::VectorXd& scores);

struct BatchMeans {
  double standard_error = 0.0;
  double ess = 0.0;                  ///< NaN for a constant chain
  double asymptotic_variance = 0.0;
  Index batches = 0;
};

/// floor(sqrt(T)) batches of equal length; the remainder is dropped.
BatchMeans ess_batch_means(const Eigen::Ref<const Eigen::VectorXd>& draws);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double prob);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double x) const { return x >= lower && x <= upper; }
};

/// Central credible interval holding `level` of the draws.
Interval credible_interval(const Eigen::Ref<const Eigen::VectorXd>& draws, double level);

/// Fraction of intervals containing their truth.
double coverage(const std::vector<Interval>& intervals, const std::vector<double>& truths);

/// Per-column coverage over replicates; draws[r] is draws x parameters.
Eigen::VectorXd coverage(const std::vector<Eigen::MatrixXd>& draws,
                         const std::vector<Eigen::VectorXd>& truths, double level);

struct ValidationReport {
  double rmspe_total = 0.0;
  double rmspe_positive = 0.0;  ///< NaN when no validation value is positive
  double auc = 0.0;
  Index n_cv = 0;
  Index n_positive = 0;
};

/// AUC scores are predicted presence probabilities P(Z > 0).
ValidationReport validate(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted_mean,
                          const Eigen::VectorXd& presence_score);

struct ParameterDiagnostics {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double standard_error = 0.0;
  double ess = 0.0;
  double ess_per_second = 0.0;
};

struct ChainDiagnostics {
  std::vector<ParameterDiagnostics> parameters;
  double seconds = 0.0;
};

ChainDiagnostics diagnose(const Eigen::MatrixXd& draws, const std::vector<std::string>& names,
                          double seconds);

double median(std::vector<double> values);

struct ReportRow {
  std::string family;
  std::string method;
  double rmspe_total = 0.0;
  double rmspe_positive = 0.0;
  double auc = 0.0;
  double minutes = 0.0;
};

/// Columns: family,method,rmspe_total,rmspe_positive,auc,minutes.
void write_report(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report(std::istream& in);

/// Medians per (family, method), in order of first appearance.
std::vector<ReportRow> aggregate_medians(const std::vector<ReportRow>& rows);

}  // namespace picarz
