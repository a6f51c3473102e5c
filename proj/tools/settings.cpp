#include "settings.hpp"

#include <iostream>
#include <set>

#include "picarz/csv.hpp"
#include "picarz/error.hpp"
#include "picarz/random.hpp"

namespace picarz::cli {
namespace fs = std::filesystem;

namespace {

// Stream ids under the root seed; replicate k of `simulate` uses stream k.
constexpr std::uint64_t kSamplerStream = 1u << 20;
constexpr std::uint64_t kRankStream = (1u << 20) + 1;

// One settings file is shared by every subcommand, so only keys no
// subcommand knows are reported.
const std::set<std::string> kKnownKeys = {
    "basis.car_rho", "basis.p_max", "basis.precision", "benchmark.families", "benchmark.methods",
    "benchmark.replicates", "benchmark.threads", "mesh.mode", "mesh.padding", "mesh.vertices", "model.family",
    "model.link", "model.method", "model.tobit_threshold", "paths.basis", "paths.chain", "paths.dataset",
    "paths.echo", "paths.mesh", "paths.output_dir", "paths.predictions", "paths.ranks", "paths.replicates",
    "paths.report", "paths.surface", "paths.validation", "priors.beta_mean", "priors.beta_variance",
    "priors.nugget_rate", "priors.nugget_shape", "priors.phi_upper", "priors.tau_rate", "priors.tau_shape",
    "rank.grid", "rank.holdout", "rank.p_o", "rank.p_p", "rank.split_seed", "rank.tie_tolerance",
    "report.grid", "report.inputs", "run.seed", "sampler.burn_in", "sampler.iterations",
    "sampler.scalar_scale", "sampler.scalar_target", "sampler.seed", "sampler.thinning",
    "sampler.vector_scale", "sampler.vector_target", "sampler.window", "simulate.beta_o", "simulate.beta_p",
    "simulate.covariates", "simulate.family", "simulate.link", "simulate.n", "simulate.n_cv", "simulate.nu",
    "simulate.nugget", "simulate.range", "simulate.replicates", "simulate.rho", "simulate.sill",
    "simulate.tobit_threshold",
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

MeshMode parse_mesh_mode(const std::string& s) {
  if (s == "lattice") return MeshMode::regular_lattice;
  if (s == "delaunay") return MeshMode::delaunay;
  throw InputError("mesh.mode must be lattice or delaunay, found '" + s + "'");
}

PrecisionKind parse_precision(const std::string& s) {
  if (s == "icar") return PrecisionKind::icar;
  if (s == "car") return PrecisionKind::car;
  if (s == "identity") return PrecisionKind::identity;
  throw InputError("basis.precision must be icar, car or identity, found '" + s + "'");
}

std::string join(const Eigen::VectorXd& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

Eigen::VectorXd parse_vector(const std::string& text, const std::string& key) {
  const std::vector<std::string> items = split_list(text);
  if (items.empty()) throw InputError(key + " is empty");
  Eigen::VectorXd v(static_cast<Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) v[static_cast<Index>(i)] = parse_double(items[i], key);
  return v;
}

std::uint64_t root_seed(const Config& c) { return c.get_seed("run.seed", 1); }

SimulationConfig simulation_config(const Config& c) {
  SimulationConfig s;
  s.family.tag = parse_family(c.get_string("simulate.family", "hurdle-count"));
  s.family.tobit_threshold = c.get_double("simulate.tobit_threshold", 0.0);
  s.link = parse_link(c.get_string("simulate.link", "logit"));
  s.n = c.get_long("simulate.n", 1000);
  s.n_cv = c.get_long("simulate.n_cv", 400);
  if (s.n < 1 || s.n_cv < 0) throw InputError("simulate.n must be positive and simulate.n_cv non-negative");
  s.beta_o = parse_vector(c.get_string("simulate.beta_o", join(s.beta_o)), "simulate.beta_o");
  s.beta_p = parse_vector(c.get_string("simulate.beta_p", join(s.beta_p)), "simulate.beta_p");
  MaternParams field;
  field.nu = c.get_double("simulate.nu", field.nu);
  field.range = c.get_double("simulate.range", field.range);
  field.sill = c.get_double("simulate.sill", field.sill);
  s.fields.occurrence = field;
  s.fields.prevalence = field;
  s.fields.rho = c.get_double("simulate.rho", s.fields.rho);
  s.nugget = c.get_double("simulate.nugget", s.nugget);
  s.covariates = parse_covariates(c.get_string("simulate.covariates", std::string(to_string(s.covariates))));
  return s;
}

PipelineOptions pipeline_options(const Config& c) {
  PipelineOptions o;
  const std::uint64_t root = root_seed(c);

  o.mesh.mode = parse_mesh_mode(c.get_string("mesh.mode", "lattice"));
  o.mesh.target_vertices = c.get_long("mesh.vertices", o.mesh.target_vertices);
  o.mesh.padding = c.get_double("mesh.padding", o.mesh.padding);
  o.p_max = c.get_long("basis.p_max", 0);
  o.precision.kind = parse_precision(c.get_string("basis.precision", "icar"));
  o.precision.car_rho = c.get_double("basis.car_rho", 0.0);

  const long p_o = c.get_long("rank.p_o", 0), p_p = c.get_long("rank.p_p", 0);
  if (p_o > 0) o.p_o = p_o;
  if (p_p > 0) o.p_p = p_p;
  o.grid_resolution = c.get_long("rank.grid", o.grid_resolution);
  o.rank.holdout_fraction = c.get_double("rank.holdout", o.rank.holdout_fraction);
  o.rank.split_seed = c.get_seed("rank.split_seed", mix_seed(root, kRankStream));
  o.rank.tie_tolerance = c.get_double("rank.tie_tolerance", o.rank.tie_tolerance);

  o.link = parse_link(c.get_string("model.link", "logit"));

  PriorSpec& pr = o.priors;
  pr.beta_mean = c.get_double("priors.beta_mean", pr.beta_mean);
  pr.beta_variance = c.get_double("priors.beta_variance", pr.beta_variance);
  pr.tau_shape = c.get_double("priors.tau_shape", pr.tau_shape);
  pr.tau_rate = c.get_double("priors.tau_rate", pr.tau_rate);
  pr.nugget_shape = c.get_double("priors.nugget_shape", pr.nugget_shape);
  pr.nugget_rate = c.get_double("priors.nugget_rate", pr.nugget_rate);
  pr.phi_upper = c.get_double("priors.phi_upper", pr.phi_upper);
  pr.validate();

  SamplerConfig& s = o.sampler;
  s.iterations = c.get_long("sampler.iterations", s.iterations);
  s.burn_in = c.get_long("sampler.burn_in", s.burn_in);
  s.thinning = c.get_long("sampler.thinning", s.thinning);
  s.seed = c.get_seed("sampler.seed", mix_seed(root, kSamplerStream));
  s.adaptation_window = c.get_long("sampler.window", s.adaptation_window);
  s.initial_vector_scale = c.get_double("sampler.vector_scale", s.initial_vector_scale);
  s.initial_scalar_scale = c.get_double("sampler.scalar_scale", s.initial_scalar_scale);
  s.vector_target = c.get_double("sampler.vector_target", s.vector_target);
  s.scalar_target = c.get_double("sampler.scalar_target", s.scalar_target);
  s.validate();
  return o;
}

LatentKind method(const Config& c) { return parse_latent_kind(c.get_string("model.method", "picar")); }

SyntheticDataset load_dataset(const Config& c) {
  const fs::path path = c.require_string("paths.dataset");
  std::ifstream in = open_input(path);
  SyntheticDataset d = read_dataset_csv(in);
  const std::string family = c.get_string("model.family", "");
  if (!family.empty()) {
    d.family.tag = parse_family(family);
    d.family.tobit_threshold = c.get_double("model.tobit_threshold", 0.0);
  } else if (fs::exists(metadata_path(path))) {
    std::ifstream meta = open_input(metadata_path(path));
    d.family = read_dataset_family(meta);
  } else {
    throw InputError("no metadata sidecar for " + path.string() + "; set model.family");
  }
  for (Index i = 0; i < d.z.size(); ++i) check_observation(d.family, d.z[i]);
  d.config.family = d.family;
  return d;
}

SpatialBasis obtain_basis(const Config& c, const SyntheticDataset& data, const PipelineOptions& options) {
  const std::string mesh_path = c.get_string("paths.mesh", "");
  const std::string basis_path = c.get_string("paths.basis", "");
  if (!mesh_path.empty() && !basis_path.empty() && fs::exists(mesh_path) && fs::exists(basis_path)) {
    std::ifstream mesh_in = open_input(mesh_path), basis_in = open_input(basis_path);
    return assemble_spatial_basis(data, read_mesh(mesh_in), read_basis(basis_in));
  }
  SpatialBasis b = build_spatial_basis(data, options.mesh, options.p_max, options.eigen);
  if (!mesh_path.empty()) {
    std::ofstream out = open_output(mesh_path);
    write_mesh(out, b.mesh);
  }
  if (!basis_path.empty()) {
    std::ofstream out = open_output(basis_path);
    write_basis(out, b.basis);
  }
  return b;
}

void finish_config(const Config& c, const fs::path& primary) {
  fs::path echo = c.get_string("paths.echo", "");
  if (echo.empty()) {
    echo = primary;
    echo.replace_extension(".config.txt");
  }
  for (const std::string& key : c.unused_keys()) {
    if (!kKnownKeys.count(key)) std::cerr << "warning: unknown setting " << key << '\n';
  }
  std::ofstream out = open_output(echo);
  c.write_echo(out);
}

fs::path replicate_path(const fs::path& path, long k) {
  std::string s = path.string();
  if (const auto at = s.find("{replicate}"); at != std::string::npos) {
    return s.replace(at, 11, std::to_string(k));
  }
  fs::path out = path;
  out.replace_filename(path.stem().string() + "_" + std::to_string(k) + path.extension().string());
  return out;
}

}  // namespace picarz::cli
