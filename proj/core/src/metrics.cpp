#include "picarz/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "picarz/error.hpp"
#include "picarz/csv.hpp"

namespace picarz {

double rmspe(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted) {
  if (truth.size() != predicted.size()) throw InputError("rmspe: length mismatch");
  if (truth.size() == 0) throw InputError("rmspe: empty input");
  return std::sqrt((truth - predicted).squaredNorm() / static_cast<double>(truth.size()));
}

double auc(const Eigen::VectorXd& labels, const Eigen::VectorXd& scores) {
  if (labels.size() != scores.size()) throw InputError("auc: length mismatch");
  const Index n = labels.size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] < scores[b]; });

  // Twice the mid-rank (1-based) keeps the arithmetic in integers.
  long long rank_sum2 = 0;
  long long n1 = 0;
  for (Index i = 0; i < n;) {
    Index j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const long long mid2 = static_cast<long long>(i + 1) + static_cast<long long>(j + 1);
    for (Index k = i; k <= j; ++k) {
      const double label = labels[order[k]];
      if (label != 0.0 && label != 1.0) throw InputError("auc: labels must be 0 or 1");
      if (label == 1.0) {
        rank_sum2 += mid2;
        ++n1;
      }
    }
    i = j + 1;
  }
  const long long n0 = static_cast<long long>(n) - n1;
  if (n0 == 0 || n1 == 0) throw InputError("auc: single-class labels");
  const long long u2 = rank_sum2 - n1 * (n1 + 1);
  return static_cast<double>(u2) / static_cast<double>(2 * n0 * n1);
}

BatchMeans ess_batch_means(const Eigen::Ref<const Eigen::VectorXd>& draws) {
  const Index t = draws.size();
  if (t < 100) throw InputError("ess_batch_means: chain shorter than 100 draws");
  BatchMeans out;
  out.batches = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(t))));
  const Index len = t / out.batches;
  Eigen::VectorXd means(out.batches);
  for (Index b = 0; b < out.batches; ++b) means[b] = draws.segment(b * len, len).mean();
  const double batch_var = (means.array() - means.mean()).square().sum() / static_cast<double>(out.batches - 1);
  const double sample_var = (draws.array() - draws.mean()).square().sum() / static_cast<double>(t - 1);
  out.asymptotic_variance = static_cast<double>(len) * batch_var;
  out.standard_error = std::sqrt(out.asymptotic_variance / static_cast<double>(t));
  out.ess = (sample_var > 0.0 && out.asymptotic_variance > 0.0)
                ? static_cast<double>(t) * sample_var / out.asymptotic_variance
                : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw InputError("quantile probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Interval credible_interval(const Eigen::Ref<const Eigen::VectorXd>& draws, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("credible level must lie in (0, 1)");
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  const double tail = 0.5 * (1.0 - level);
  return {quantile(v, tail), quantile(v, 1.0 - tail)};
}

double coverage(const std::vector<Interval>& intervals, const std::vector<double>& truths) {
  if (intervals.size() != truths.size()) throw InputError("coverage: length mismatch");
  if (intervals.empty()) throw InputError("coverage: no replicates");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < intervals.size(); ++r) hits += intervals[r].contains(truths[r]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(intervals.size());
}

Eigen::VectorXd coverage(const std::vector<Eigen::MatrixXd>& draws,
                         const std::vector<Eigen::VectorXd>& truths, double level) {
  if (draws.size() != truths.size()) throw InputError("coverage: length mismatch");
  if (draws.size() < 2) throw InputError("coverage needs at least two replicates");
  const Index k = truths.front().size();
  Eigen::VectorXd out(k);
  for (Index j = 0; j < k; ++j) {
    std::vector<Interval> intervals;
    std::vector<double> truth;
    for (std::size_t r = 0; r < draws.size(); ++r) {
      if (draws[r].cols() != k || truths[r].size() != k) throw InputError("coverage: parameter count mismatch");
      intervals.push_back(credible_interval(draws[r].col(j), level));
      truth.push_back(truths[r][j]);
    }
    out[j] = coverage(intervals, truth);
  }
  return out;
}

ValidationReport validate(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted_mean,
                          const Eigen::VectorXd& presence_score) {
  ValidationReport r;
  r.n_cv = truth.size();
  r.rmspe_total = rmspe(truth, predicted_mean);
  Eigen::VectorXd labels(truth.size());
  std::vector<Index> positive;
  for (Index i = 0; i < truth.size(); ++i) {
    labels[i] = truth[i] > 0.0 ? 1.0 : 0.0;
    if (truth[i] > 0.0) positive.push_back(i);
  }
  r.n_positive = static_cast<Index>(positive.size());
  if (positive.empty()) {
    r.rmspe_positive = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.rmspe_positive = rmspe(truth(positive), predicted_mean(positive));
  }
  r.auc = auc(labels, presence_score);
  return r;
}

ChainDiagnostics diagnose(const Eigen::MatrixXd& draws, const std::vector<std::string>& names,
                          double seconds) {
  if (static_cast<Index>(names.size()) != draws.cols()) throw InputError("diagnose: name count mismatch");
  ChainDiagnostics out;
  out.seconds = seconds;
  for (Index j = 0; j < draws.cols(); ++j) {
    ParameterDiagnostics d;
    d.name = names[j];
    const auto col = draws.col(j);
    d.mean = col.mean();
    d.sd = draws.rows() > 1
               ? std::sqrt((col.array() - d.mean).square().sum() / static_cast<double>(draws.rows() - 1))
               : 0.0;
    if (draws.rows() >= 100) {
      const BatchMeans bm = ess_batch_means(col);
      d.standard_error = bm.standard_error;
      d.ess = bm.ess;
    } else {
      d.standard_error = d.ess = std::numeric_limits<double>::quiet_NaN();
    }
    d.ess_per_second = seconds > 0.0 ? d.ess / seconds : std::numeric_limits<double>::quiet_NaN();
    out.parameters.push_back(std::move(d));
  }
  return out;
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

void write_report(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "family,method,rmspe_total,rmspe_positive,auc,minutes\n";
  for (const auto& r : rows) {
    out << r.family << ',' << r.method << ',' << format_double(r.rmspe_total) << ','
        << format_double(r.rmspe_positive) << ',' << format_double(r.auc) << ','
        << format_double(r.minutes) << '\n';
  }
}

std::vector<ReportRow> read_report(std::istream& in) {
  const CsvTable table = read_csv(in);
  const Index family = table.column("family"), method = table.column("method");
  const Index total = table.column("rmspe_total"), positive = table.column("rmspe_positive");
  const Index area = table.column("auc"), minutes = table.column("minutes");
  std::vector<ReportRow> rows;
  for (const auto& row : table.rows) {
    ReportRow r;
    r.family = row[family];
    r.method = row[method];
    r.rmspe_total = parse_double(row[total], "rmspe_total");
    r.rmspe_positive = parse_double(row[positive], "rmspe_positive");
    r.auc = parse_double(row[area], "auc");
    r.minutes = parse_double(row[minutes], "minutes");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ReportRow> aggregate_medians(const std::vector<ReportRow>& rows) {
  std::vector<ReportRow> out;
  std::vector<std::vector<const ReportRow*>> groups;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ReportRow& g) {
      return g.family == r.family && g.method == r.method;
    });
    if (it == out.end()) {
      out.push_back({r.family, r.method});
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[static_cast<std::size_t>(it - out.begin())].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    auto med = [&](double ReportRow::*field) {
      std::vector<double> v;
      for (const ReportRow* r : groups[g]) {
        if (!std::isnan(r->*field)) v.push_back(r->*field);
      }
      return v.empty() ? std::numeric_limits<double>::quiet_NaN() : median(std::move(v));
    };
    out[g].rmspe_total = med(&ReportRow::rmspe_total);
    out[g].rmspe_positive = med(&ReportRow::rmspe_positive);
    out[g].auc = med(&ReportRow::auc);
    out[g].minutes = med(&ReportRow::minutes);
  }
  return out;
}

}  // namespace picarz
