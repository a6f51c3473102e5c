#include "picarz/pipeline.hpp"

#include <chrono>

#include "picarz/error.hpp"

namespace picarz {
namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ValidationReport score(const SyntheticDataset& data, const Prediction& pred) {
  return validate(data.z(data.validate), pred.mean, pred.positive);
}

}  // namespace

std::vector<Point2> subset(const std::vector<Point2>& sites, const std::vector<Index>& rows) {
  std::vector<Point2> out;
  out.reserve(rows.size());
  for (Index i : rows) out.push_back(sites.at(static_cast<std::size_t>(i)));
  return out;
}

ModelData training_data(const SyntheticDataset& data, Link link) {
  ModelData m;
  m.z = data.z(data.train);
  m.x = data.x(data.train, Eigen::all);
  m.family = data.family;
  m.link = link;
  return m;
}

SpatialBasis build_spatial_basis(const SyntheticDataset& data, const MeshOptions& mesh, Index p_max,
                                 const EigenOptions& eigen) {
  const auto t0 = Clock::now();
  SpatialBasis out{build_mesh(data.sites, mesh), {}, {}, {}, {}, 0.0};
  out.adjacency = adjacency(out.mesh);
  const Index m = out.adjacency.size();
  const Index p = p_max > 0 ? p_max : std::min<Index>(m / 4, 250);
  if (p < 1 || p >= m) throw InputError("basis rank must lie in [1, m)");
  out.basis = moran_basis(out.adjacency, p, eigen);
  out.projector_train = build_projector(out.mesh, subset(data.sites, data.train));
  out.projector_validate = build_projector(out.mesh, subset(data.sites, data.validate));
  out.seconds = since(t0);
  return out;
}

SpatialBasis assemble_spatial_basis(const SyntheticDataset& data, TriangleMesh mesh, MoranBasis basis) {
  const auto t0 = Clock::now();
  if (basis.vertex_count() != mesh.vertex_count()) throw InputError("basis and mesh vertex counts differ");
  SpatialBasis out{std::move(mesh), {}, std::move(basis), {}, {}, 0.0};
  out.adjacency = adjacency(out.mesh);
  out.projector_train = build_projector(out.mesh, subset(data.sites, data.train));
  out.projector_validate = build_projector(out.mesh, subset(data.sites, data.validate));
  out.seconds = since(t0);
  return out;
}

FittedModel fit_model(const SyntheticDataset& data, const PipelineOptions& options, LatentKind kind,
                      const SpatialBasis* basis) {
  const auto t0 = Clock::now();
  FittedModel r;
  const ModelData train = training_data(data, options.link);
  LatentParameterization lat;
  switch (kind) {
    case LatentKind::picar:
    case LatentKind::picar_correlated: {
      if (!basis) throw InputError("PICAR fits need a mesh and basis");
      if (options.p_o && options.p_p) {
        r.p_o = *options.p_o;
        r.p_p = *options.p_p;
      } else {
        const RankGrid grid = RankGrid::equally_spaced(basis->basis.rank(), options.grid_resolution);
        const RankChoice choice = select_ranks(train.z, train.x, basis->projector_train, basis->basis,
                                               data.family, grid, options.rank);
        r.p_o = options.p_o.value_or(choice.p_o);
        r.p_p = options.p_p.value_or(choice.p_p);
        r.rank_table = choice.table;
      }
      const SparseMatrix q = build_precision(basis->adjacency, options.precision);
      lat = make_picar(basis->projector_train, basis->basis, q, r.p_o, r.p_p, kind == LatentKind::picar_correlated);
      break;
    }
    case LatentKind::frk_bisquare: {
      const std::vector<BisquareKnot> knots = bisquare_knots(bounding_box(data.sites));
      lat = make_frk(bisquare_matrix(subset(data.sites, data.train), knots));
      r.p_o = r.p_p = static_cast<Index>(knots.size());
      break;
    }
    case LatentKind::gold_standard:
      lat = make_gold_standard(jitter_duplicates(subset(data.sites, data.train)));
      r.p_o = r.p_p = static_cast<Index>(data.train.size());
      break;
  }
  r.chain = fit(train, lat, options.priors, options.sampler);
  r.seconds = since(t0);
  return r;
}

Prediction predict_at(const Chain& chain, const SyntheticDataset& data, Link link, const Eigen::MatrixXd& x_new,
                      const std::vector<Point2>& sites_new, const SpatialBasis* basis) {
  switch (chain.kind) {
    case LatentKind::picar:
    case LatentKind::picar_correlated: {
      if (!basis) throw InputError("PICAR predictions need a mesh and basis");
      if (chain.layout.p_o > basis->basis.rank() || chain.layout.p_p > basis->basis.rank()) {
        throw InputError("chain rank exceeds the basis rank");
      }
      const SparseRowMatrix a = build_projector(basis->mesh, sites_new);
      const SiteDesign occ{a, basis->basis.vectors.leftCols(chain.layout.p_o)};
      const SiteDesign prev{a, basis->basis.vectors.leftCols(chain.layout.p_p)};
      return predict(chain, data.family, link, x_new, occ, prev);
    }
    case LatentKind::frk_bisquare: {
      const SiteDesign design{SparseRowMatrix(), bisquare_matrix(sites_new, bisquare_knots(bounding_box(data.sites)))};
      return predict(chain, data.family, link, x_new, design, design);
    }
    case LatentKind::gold_standard:
      return predict_gold_standard(chain, data.family, link, x_new,
                                   jitter_duplicates(subset(data.sites, data.train)), sites_new);
  }
  throw InputError("unknown latent kind");
}

namespace {

ReplicateResult finish(const SyntheticDataset& data, const PipelineOptions& options, FittedModel fitted,
                       std::string method, const SpatialBasis* basis, double extra_seconds) {
  const auto t0 = Clock::now();
  ReplicateResult r;
  r.method = std::move(method);
  r.p_o = fitted.p_o;
  r.p_p = fitted.p_p;
  r.rank_table = std::move(fitted.rank_table);
  r.chain = std::move(fitted.chain);
  r.prediction = predict_at(r.chain, data, options.link, data.x(data.validate, Eigen::all),
                            subset(data.sites, data.validate), basis);
  r.report = score(data, r.prediction);
  r.seconds = fitted.seconds + since(t0) + extra_seconds;
  return r;
}

}  // namespace

ReplicateResult run_picar(const SyntheticDataset& data, const PipelineOptions& options, bool correlated,
                          const SpatialBasis* basis) {
  std::optional<SpatialBasis> local;
  if (!basis) {
    local.emplace(build_spatial_basis(data, options.mesh, options.p_max, options.eigen));
    basis = &*local;
  }
  const LatentKind kind = correlated ? LatentKind::picar_correlated : LatentKind::picar;
  // The mesh and basis cost is charged to every fit that uses them.
  return finish(data, options, fit_model(data, options, kind, basis), std::string(to_string(kind)), basis,
                basis->seconds);
}

ReplicateResult run_frk(const SyntheticDataset& data, const PipelineOptions& options) {
  return finish(data, options, fit_model(data, options, LatentKind::frk_bisquare), "frk-bisquare", nullptr, 0.0);
}

ReplicateResult run_gold_standard(const SyntheticDataset& data, const PipelineOptions& options) {
  return finish(data, options, fit_model(data, options, LatentKind::gold_standard), "gold-standard", nullptr, 0.0);
}

}  // namespace picarz
