#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <json.hpp>

#include "picarz/csv.hpp"
#include "picarz/error.hpp"
#include "picarz/random.hpp"
#include "settings.hpp"

namespace picarz::cli {
namespace fs = std::filesystem;

namespace {

bool needs_basis(LatentKind k) { return k == LatentKind::picar || k == LatentKind::picar_correlated; }

std::optional<SpatialBasis> basis_for(LatentKind kind, const Config& c, const SyntheticDataset& data,
                                      const PipelineOptions& options) {
  if (!needs_basis(kind)) return std::nullopt;
  return obtain_basis(c, data, options);
}

const SpatialBasis* ptr(const std::optional<SpatialBasis>& b) { return b ? &*b : nullptr; }

Chain load_chain(const fs::path& path, TwoPartFamily& family, Link& link) {
  std::ifstream csv = open_input(path), summary = open_input(summary_path(path));
  return read_chain(csv, summary, family, link);
}

void write_rank_choice(const fs::path& path, Index p_o, Index p_p) {
  std::ofstream out = open_output(path);
  out << nlohmann::json{{"p_o", p_o}, {"p_p", p_p}}.dump(2) << '\n';
}

void write_predictions(const fs::path& path, const std::vector<Point2>& sites, const Eigen::VectorXd& z,
                       const Prediction& p) {
  std::ofstream out = open_output(path);
  out << "x_coord,y_coord,z,mean,sd,pi,positive\n";
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto k = static_cast<Index>(i);
    out << format_double(sites[i].x) << ',' << format_double(sites[i].y) << ',' << format_double(z[k]) << ','
        << format_double(p.mean[k]) << ',' << format_double(p.sd[k]) << ',' << format_double(p.pi[k]) << ','
        << format_double(p.positive[k]) << '\n';
  }
}

// Regular grid over the bounding box of the data sites, covariates held at
// their training means.
void write_surface(const fs::path& path, const Chain& chain, const SyntheticDataset& data, Link link,
                   const SpatialBasis* basis, Index side) {
  if (side < 2) throw InputError("report.grid must be at least 2");
  const BoundingBox box = bounding_box(data.sites);
  std::vector<Point2> grid;
  grid.reserve(static_cast<std::size_t>(side * side));
  for (Index iy = 0; iy < side; ++iy) {
    for (Index ix = 0; ix < side; ++ix) {
      grid.push_back({box.xmin + box.width() * static_cast<double>(ix) / static_cast<double>(side - 1),
                      box.ymin + box.height() * static_cast<double>(iy) / static_cast<double>(side - 1)});
    }
  }
  const Eigen::RowVectorXd x_mean = data.x(data.train, Eigen::all).colwise().mean();
  const Eigen::MatrixXd x = x_mean.replicate(static_cast<Index>(grid.size()), 1);
  const Prediction p = predict_at(chain, data, link, x, grid, basis);
  std::ofstream out = open_output(path);
  out << "x,y,mean_pi,mean_log_intensity,sd\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto k = static_cast<Index>(i);
    out << format_double(grid[i].x) << ',' << format_double(grid[i].y) << ',' << format_double(p.pi[k]) << ','
        << format_double(p.eta_p[k]) << ',' << format_double(p.sd[k]) << '\n';
  }
}

}  // namespace

void cmd_simulate(const Config& c) {
  const SimulationConfig sim = simulation_config(c);
  const long replicates = c.get_long("simulate.replicates", 1);
  if (replicates < 1) throw InputError("simulate.replicates must be positive");
  const std::uint64_t root = root_seed(c);
  const fs::path target = c.require_string("paths.dataset");
  for (long k = 0; k < replicates; ++k) {
    const fs::path path = replicates == 1 ? target : replicate_path(target, k);
    const SyntheticDataset d = generate_dataset(sim, mix_seed(root, static_cast<std::uint64_t>(k)));
    std::ofstream out = open_output(path);
    write_dataset_csv(out, d);
    std::ofstream meta = open_output(metadata_path(path));
    write_dataset_metadata(meta, d);
  }
  finish_config(c, replicates == 1 ? target : replicate_path(target, 0));
}

void cmd_mesh(const Config& c) {
  const SyntheticDataset data = load_dataset(c);
  const PipelineOptions options = pipeline_options(c);
  const fs::path mesh_path = c.require_string("paths.mesh");
  c.require_string("paths.basis");
  if (fs::exists(mesh_path)) fs::remove(mesh_path);  // always rebuild
  const SpatialBasis b = obtain_basis(c, data, options);
  std::cout << "mesh: " << b.mesh.vertex_count() << " vertices, " << b.mesh.triangle_count() << " triangles; basis rank "
            << b.basis.rank() << '\n';
  finish_config(c, mesh_path);
}

void cmd_select_rank(const Config& c) {
  const SyntheticDataset data = load_dataset(c);
  PipelineOptions options = pipeline_options(c);
  const SpatialBasis b = obtain_basis(c, data, options);
  const ModelData train = training_data(data, options.link);
  const RankGrid grid = RankGrid::equally_spaced(b.basis.rank(), options.grid_resolution);
  const RankChoice choice =
      select_ranks(train.z, train.x, b.projector_train, b.basis, data.family, grid, options.rank);
  const fs::path table = c.require_string("paths.ranks");
  {
    std::ofstream out = open_output(table);
    write_score_table(out, choice.table);
  }
  fs::path choice_path = table;
  write_rank_choice(choice_path.replace_extension(".choice.json"), choice.p_o, choice.p_p);
  std::cout << "p_o = " << choice.p_o << ", p_p = " << choice.p_p << '\n';
  finish_config(c, table);
}

void cmd_fit(const Config& c) {
  const SyntheticDataset data = load_dataset(c);
  const PipelineOptions options = pipeline_options(c);
  const LatentKind kind = method(c);
  const std::optional<SpatialBasis> basis = basis_for(kind, c, data, options);
  const FittedModel fitted = fit_model(data, options, kind, ptr(basis));

  const fs::path chain_path = c.require_string("paths.chain");
  {
    std::ofstream out = open_output(chain_path);
    write_chain_csv(out, fitted.chain);
    std::ofstream summary = open_output(summary_path(chain_path));
    write_chain_summary(summary, fitted.chain, data.family, options.link);
  }
  if (!fitted.rank_table.empty()) {
    fs::path table = chain_path;
    table.replace_extension(".ranks.csv");
    std::ofstream out = open_output(table);
    write_score_table(out, fitted.rank_table);
  }
  std::cout << to_string(kind) << ": p_o = " << fitted.p_o << ", p_p = " << fitted.p_p << ", "
            << fitted.chain.draws.rows() << " draws in " << fitted.seconds << " s\n";
  finish_config(c, chain_path);
}

void cmd_predict(const Config& c) {
  const SyntheticDataset data = load_dataset(c);
  const PipelineOptions options = pipeline_options(c);
  TwoPartFamily family;
  Link link = Link::logit;
  const Chain chain = load_chain(c.require_string("paths.chain"), family, link);
  if (family.tag != data.family.tag) throw InputError("chain family does not match the dataset family");
  if (data.validate.empty()) throw InputError("dataset has no validation rows");
  const std::optional<SpatialBasis> basis = basis_for(chain.kind, c, data, options);

  const std::vector<Point2> sites = subset(data.sites, data.validate);
  const Eigen::VectorXd z = data.z(data.validate);
  const Prediction p = predict_at(chain, data, link, data.x(data.validate, Eigen::all), sites, ptr(basis));
  const ValidationReport report = validate(z, p.mean, p.positive);

  const fs::path predictions = c.require_string("paths.predictions");
  write_predictions(predictions, sites, z, p);
  fs::path validation = c.get_string("paths.validation", "");
  if (validation.empty()) validation = fs::path(predictions).replace_extension(".validation.json");
  {
    std::ofstream out = open_output(validation);
    write_validation_json(out, report, std::string(to_string(family.tag)), std::string(to_string(chain.kind)),
                          chain.seconds / 60.0);
  }
  std::cout << "rmspe = " << report.rmspe_total << ", rmspe(z > 0) = " << report.rmspe_positive
            << ", auc = " << report.auc << '\n';
  finish_config(c, predictions);
}

void cmd_report(const Config& c) {
  const fs::path report_path = c.require_string("paths.report");
  std::vector<ReportRow> rows;
  for (const std::string& path : split_list(c.get_string("report.inputs", ""))) {
    std::ifstream in = open_input(path);
    rows.push_back(read_validation_json(in));
  }
  const std::string surface = c.get_string("paths.surface", "");
  if (rows.empty() && surface.empty()) throw InputError("report needs report.inputs or paths.surface");
  if (!rows.empty()) {
    std::ofstream out = open_output(report_path);
    write_report(out, aggregate_medians(rows));
    const std::string per_replicate = c.get_string("paths.replicates", "");
    if (!per_replicate.empty()) {
      std::ofstream all = open_output(per_replicate);
      write_report(all, rows);
    }
  }
  if (!surface.empty()) {
    const SyntheticDataset data = load_dataset(c);
    const PipelineOptions options = pipeline_options(c);
    TwoPartFamily family;
    Link link = Link::logit;
    const Chain chain = load_chain(c.require_string("paths.chain"), family, link);
    const std::optional<SpatialBasis> basis = basis_for(chain.kind, c, data, options);
    write_surface(surface, chain, data, link, ptr(basis), c.get_long("report.grid", 50));
  }
  finish_config(c, rows.empty() ? fs::path(surface) : report_path);
}

void cmd_benchmark(const Config& c) {
  const SimulationConfig base = simulation_config(c);
  const PipelineOptions options = pipeline_options(c);
  const std::uint64_t root = root_seed(c);
  const long replicates = c.get_long("benchmark.replicates", 20);
  std::vector<Family> families;
  for (const auto& f : split_list(c.get_string("benchmark.families", std::string(to_string(base.family.tag))))) {
    families.push_back(parse_family(f));
  }
  std::vector<LatentKind> methods;
  for (const auto& m : split_list(c.get_string("benchmark.methods", "picar,frk-bisquare"))) {
    methods.push_back(parse_latent_kind(m));
  }
  long threads = c.get_long("benchmark.threads", 1);
  if (replicates < 1 || threads < 1 || families.empty() || methods.empty()) {
    throw InputError("benchmark needs replicates, threads, families and methods");
  }
  const fs::path report_path = c.require_string("paths.report");
  const std::string output_dir = c.get_string("paths.output_dir", "");
  if (!output_dir.empty()) fs::create_directories(output_dir);

  struct Task {
    Family family;
    long replicate;
  };
  std::vector<Task> tasks;
  for (Family f : families) {
    for (long r = 0; r < replicates; ++r) tasks.push_back({f, r});
  }
  std::vector<std::vector<ReportRow>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  std::exception_ptr failure;

  // Replicate r of every family and method shares dataset seed stream r.
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      try {
        SimulationConfig sim = base;
        sim.family.tag = tasks[t].family;
        const auto r = static_cast<std::uint64_t>(tasks[t].replicate);
        const SyntheticDataset data = generate_dataset(sim, mix_seed(root, r));
        PipelineOptions local = options;
        local.sampler.seed = mix_seed(options.sampler.seed, r);
        local.rank.split_seed = mix_seed(options.rank.split_seed, r);
        std::optional<SpatialBasis> basis;
        for (LatentKind kind : methods) {
          if (needs_basis(kind) && !basis) basis.emplace(build_spatial_basis(data, local.mesh, local.p_max));
          ReplicateResult res;
          if (needs_basis(kind)) {
            res = run_picar(data, local, kind == LatentKind::picar_correlated, &*basis);
          } else if (kind == LatentKind::frk_bisquare) {
            res = run_frk(data, local);
          } else {
            res = run_gold_standard(data, local);
          }
          const std::string family_name(to_string(sim.family.tag));
          results[t].push_back({family_name, res.method, res.report.rmspe_total, res.report.rmspe_positive,
                                res.report.auc, res.seconds / 60.0});
          if (!output_dir.empty()) {
            const fs::path stem = fs::path(output_dir) / (family_name + "_" + res.method + "_" + std::to_string(r));
            std::ofstream out = open_output(stem.string() + ".validation.json");
            write_validation_json(out, res.report, family_name, res.method, res.seconds / 60.0);
          }
          std::lock_guard lock(io);
          std::cout << family_name << " " << res.method << " replicate " << r << ": rmspe = " << res.report.rmspe_total
                    << ", auc = " << res.report.auc << '\n';
        }
      } catch (...) {
        std::lock_guard lock(io);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  threads = std::min<long>(threads, static_cast<long>(tasks.size()));
  std::vector<std::thread> pool;
  for (long i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<ReportRow> rows;
  for (const auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  {
    std::ofstream out = open_output(report_path);
    write_report(out, aggregate_medians(rows));
  }
  const std::string per_replicate = c.get_string("paths.replicates", "");
  if (!per_replicate.empty()) {
    std::ofstream all = open_output(per_replicate);
    write_report(all, rows);
  }
  finish_config(c, report_path);
}

}  // namespace picarz::cli
