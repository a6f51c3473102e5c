#pragma once

#include <optional>
#include <string>
#include <vector>

#include "picarz/geometry.hpp"
#include "picarz/inference.hpp"
#include "picarz/metrics.hpp"
#include "picarz/rank_selection.hpp"
#include "picarz/simulation.hpp"
#include "picarz/spectral.hpp"

namespace picarz {

struct PipelineOptions {
  MeshOptions mesh{MeshMode::regular_lattice, 1024, 0.1};
  PrecisionSpec precision;
  EigenOptions eigen;
  /// Fixed ranks; when unset ranks come from select_ranks over `grid_resolution` candidates.
  std::optional<Index> p_o, p_p;
  Index grid_resolution = 25;
  Index p_max = 0;  ///< 0: min(floor(m / 4), 250)
  RankSelectionOptions rank;
  PriorSpec priors;
  SamplerConfig sampler;
  Link link = Link::logit;
};

/// Mesh, basis and projectors built once per dataset.
struct SpatialBasis {
  TriangleMesh mesh;
  AdjacencyMatrix adjacency;
  MoranBasis basis;
  SparseRowMatrix projector_train, projector_validate;
  double seconds = 0.0;
};

/// Mesh over all sites, basis of rank p_max (default rule when 0).
SpatialBasis build_spatial_basis(const SyntheticDataset& data, const MeshOptions& mesh, Index p_max,
                                 const EigenOptions& eigen = {});
/// Adjacency and projectors for a mesh and basis loaded from files.
SpatialBasis assemble_spatial_basis(const SyntheticDataset& data, TriangleMesh mesh, MoranBasis basis);

struct FittedModel {
  Chain chain;
  Index p_o = 0, p_p = 0;
  std::vector<RankScore> rank_table;  ///< empty when the ranks were fixed
  double seconds = 0.0;               ///< rank selection and sampling
};

/// Fits the training rows. PICAR kinds need `basis`; ranks come from
/// `options` when both are fixed, otherwise from select_ranks.
FittedModel fit_model(const SyntheticDataset& data, const PipelineOptions& options, LatentKind kind,
                      const SpatialBasis* basis = nullptr);

/// Posterior predictive summaries of a fitted chain at arbitrary sites.
/// The latent design is rebuilt from the chain's kind: the Moran basis for
/// PICAR, bisquares over the bounding box of all data sites for FRK, and
/// kriging from the training sites for the gold standard.
Prediction predict_at(const Chain& chain, const SyntheticDataset& data, Link link, const Eigen::MatrixXd& x_new,
                      const std::vector<Point2>& sites_new, const SpatialBasis* basis = nullptr);

struct ReplicateResult {
  std::string method;
  ValidationReport report;
  double seconds = 0.0;  ///< setup, rank selection, fit and prediction
  Index p_o = 0, p_p = 0;
  Chain chain;
  Prediction prediction;
  std::vector<RankScore> rank_table;
};

std::vector<Point2> subset(const std::vector<Point2>& sites, const std::vector<Index>& rows);
ModelData training_data(const SyntheticDataset& data, Link link);

/// PICAR or its cross-correlated variant. Reuses `basis` when given.
ReplicateResult run_picar(const SyntheticDataset& data, const PipelineOptions& options, bool correlated = false,
                          const SpatialBasis* basis = nullptr);
/// Bisquare fixed-rank kriging comparator on the unit-square domain of the sites.
ReplicateResult run_frk(const SyntheticDataset& data, const PipelineOptions& options);
/// Full-rank reparameterized comparator.
ReplicateResult run_gold_standard(const SyntheticDataset& data, const PipelineOptions& options);

}  // namespace picarz
