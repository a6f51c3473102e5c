#include "picarz/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "picarz/csv.hpp"
#include "picarz/error.hpp"

namespace picarz {
namespace {

using nlohmann::json;

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// JSON cannot hold NaN; store it as null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
double number(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

json params_json(const MaternParams& p) { return {{"nu", p.nu}, {"range", p.range}, {"sill", p.sill}}; }

}  // namespace

Config Config::parse(std::istream& in) {
  Config c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key.find('.') == std::string::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": keys have the form section.key");
    }
    c.values_[key] = value;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse(in);
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  const std::string v = it == values_.end() ? fallback : it->second;
  effective_[key] = v;
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  const double v = it == values_.end() ? fallback : parse_double(it->second, key);
  effective_[key] = format_double(v);
  return v;
}

long Config::get_long(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  const long v = it == values_.end() ? fallback : parse_long(it->second, key);
  effective_[key] = std::to_string(v);
  return v;
}

std::uint64_t Config::get_seed(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  std::uint64_t v = fallback;
  if (it != values_.end()) {
    try {
      std::size_t used = 0;
      v = std::stoull(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw InputError("invalid seed '" + it->second + "' for " + key);
    }
  }
  effective_[key] = std::to_string(v);
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  bool v = fallback;
  if (it != values_.end()) {
    std::string s = it->second;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (s == "true" || s == "1" || s == "yes") {
      v = true;
    } else if (s == "false" || s == "0" || s == "no") {
      v = false;
    } else {
      throw InputError("invalid boolean '" + it->second + "' for " + key);
    }
  }
  effective_[key] = v ? "true" : "false";
  return v;
}

std::string Config::require_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw InputError("missing required setting " + key);
  effective_[key] = it->second;
  return it->second;
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!effective_.count(k)) out.push_back(k);
  }
  return out;
}

void Config::write_echo(std::ostream& out) const {
  for (const auto& [k, v] : effective_) out << k << " = " << v << '\n';
}

void write_dataset_csv(std::ostream& out, const SyntheticDataset& d) {
  const Index n = d.size();
  std::vector<char> is_validate(static_cast<std::size_t>(n), 0);
  for (Index i : d.validate) is_validate[static_cast<std::size_t>(i)] = 1;
  out << "x_coord,y_coord,z";
  for (Index j = 0; j < d.x.cols(); ++j) out << ",x" << (j + 1);
  out << ",split\n";
  for (Index i = 0; i < n; ++i) {
    const Point2& s = d.sites[static_cast<std::size_t>(i)];
    out << format_double(s.x) << ',' << format_double(s.y) << ',' << format_double(d.z[i]);
    for (Index j = 0; j < d.x.cols(); ++j) out << ',' << format_double(d.x(i, j));
    out << ',' << (is_validate[static_cast<std::size_t>(i)] ? "validate" : "train") << '\n';
  }
}

SyntheticDataset read_dataset_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const Index cx = t.column("x_coord"), cy = t.column("y_coord"), cz = t.column("z"), cs = t.column("split");
  std::vector<Index> cov;
  for (Index j = 1;; ++j) {
    const std::string name = "x" + std::to_string(j);
    if (!t.has_column(name)) break;
    cov.push_back(t.column(name));
  }
  if (cov.empty()) throw InputError("dataset has no covariate columns x1..xk");
  SyntheticDataset d;
  const auto n = static_cast<Index>(t.rows.size());
  d.sites.resize(static_cast<std::size_t>(n));
  d.z.resize(n);
  d.x.resize(n, static_cast<Index>(cov.size()));
  for (Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    d.sites[static_cast<std::size_t>(i)] = {parse_double(row[cx], "x_coord"), parse_double(row[cy], "y_coord")};
    d.z[i] = parse_double(row[cz], "z");
    for (std::size_t j = 0; j < cov.size(); ++j) d.x(i, static_cast<Index>(j)) = parse_double(row[cov[j]], "covariate");
    if (row[cs] == "train") {
      d.train.push_back(i);
    } else if (row[cs] == "validate") {
      d.validate.push_back(i);
    } else {
      throw InputError("split must be train or validate, found '" + row[cs] + "'");
    }
  }
  if (d.train.empty()) throw InputError("dataset has no training rows");
  return d;
}

void write_dataset_metadata(std::ostream& out, const SyntheticDataset& d) {
  const SimulationConfig& c = d.config;
  json j;
  j["family"] = std::string(to_string(d.family.tag));
  j["tobit_threshold"] = d.family.tobit_threshold;
  j["link"] = std::string(to_string(c.link));
  j["seed"] = d.seed;
  j["n"] = c.n;
  j["n_cv"] = c.n_cv;
  j["beta_o"] = std::vector<double>(c.beta_o.data(), c.beta_o.data() + c.beta_o.size());
  j["beta_p"] = std::vector<double>(c.beta_p.data(), c.beta_p.data() + c.beta_p.size());
  j["nugget"] = c.family.has_nugget() ? number(c.nugget) : json(nullptr);
  j["covariates"] = std::string(to_string(c.covariates));
  j["sites"] = "uniform on the unit square";
  j["field_occurrence"] = params_json(c.fields.occurrence);
  j["field_prevalence"] = params_json(c.fields.prevalence);
  j["rho"] = c.fields.rho;
  Index zeros = 0;
  for (Index i = 0; i < d.z.size(); ++i) zeros += d.z[i] == 0.0 ? 1 : 0;
  j["zero_fraction"] = d.z.size() ? static_cast<double>(zeros) / static_cast<double>(d.z.size()) : 0.0;
  out << j.dump(2) << '\n';
}

TwoPartFamily read_dataset_family(std::istream& in) {
  try {
    const json j = json::parse(in);
    TwoPartFamily f;
    f.tag = parse_family(j.at("family").get<std::string>());
    if (j.contains("tobit_threshold")) f.tobit_threshold = j["tobit_threshold"].get<double>();
    return f;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed dataset metadata: ") + e.what());
  }
}

std::filesystem::path metadata_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".meta.json");
  return p;
}

std::filesystem::path summary_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".summary.json");
  return p;
}

void write_chain_csv(std::ostream& out, const Chain& chain) {
  write_matrix_csv(out, chain.names(), chain.draws);
}

void write_chain_summary(std::ostream& out, const Chain& chain, const TwoPartFamily& family, Link link) {
  json j;
  j["parameterization"] = std::string(to_string(chain.kind));
  j["family"] = std::string(to_string(family.tag));
  j["tobit_threshold"] = family.tobit_threshold;
  j["link"] = std::string(to_string(link));
  j["seed"] = chain.seed;
  j["iterations"] = chain.iterations;
  j["burn_in"] = chain.burn_in;
  j["thinning"] = chain.thinning;
  j["retained"] = chain.draws.rows();
  j["seconds"] = chain.seconds;
  j["layout"] = {{"k", chain.layout.k},
                 {"p_o", chain.layout.p_o},
                 {"p_p", chain.layout.p_p},
                 {"correlated", chain.layout.correlated},
                 {"nugget", chain.layout.nugget},
                 {"gold_standard", chain.layout.gold_standard}};
  json blocks = json::array();
  for (const BlockSummary& b : chain.blocks) {
    blocks.push_back({{"name", b.name},
                      {"acceptance", number(b.acceptance_rate())},
                      {"acceptance_after_burn_in", number(b.acceptance_after_burn_in())},
                      {"log_scale", b.log_scale},
                      {"frozen", b.frozen}});
  }
  j["blocks"] = blocks;
  json params = json::array();
  if (chain.draws.rows() > 0) {
    const ChainDiagnostics diag = diagnose(chain.draws, chain.names(), chain.seconds);
    for (const ParameterDiagnostics& p : diag.parameters) {
      params.push_back({{"name", p.name},
                        {"mean", number(p.mean)},
                        {"sd", number(p.sd)},
                        {"batch_se", number(p.standard_error)},
                        {"ess", number(p.ess)},
                        {"ess_per_second", number(p.ess_per_second)}});
    }
  }
  j["parameters"] = params;
  out << j.dump(2) << '\n';
}

Chain read_chain(std::istream& csv, std::istream& summary, TwoPartFamily& family, Link& link) {
  Chain chain;
  try {
    const json j = json::parse(summary);
    chain.kind = parse_latent_kind(j.at("parameterization").get<std::string>());
    family.tag = parse_family(j.at("family").get<std::string>());
    family.tobit_threshold = j.value("tobit_threshold", 0.0);
    link = parse_link(j.at("link").get<std::string>());
    chain.seed = j.at("seed").get<std::uint64_t>();
    chain.iterations = j.at("iterations").get<long>();
    chain.burn_in = j.at("burn_in").get<long>();
    chain.thinning = j.at("thinning").get<long>();
    chain.seconds = j.at("seconds").get<double>();
    const json& l = j.at("layout");
    chain.layout.k = l.at("k").get<Index>();
    chain.layout.p_o = l.at("p_o").get<Index>();
    chain.layout.p_p = l.at("p_p").get<Index>();
    chain.layout.correlated = l.at("correlated").get<bool>();
    chain.layout.nugget = l.at("nugget").get<bool>();
    chain.layout.gold_standard = l.at("gold_standard").get<bool>();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed chain summary: ") + e.what());
  }
  std::vector<std::string> header;
  chain.draws = read_matrix_csv(csv, header);
  if (header != chain.names()) throw InputError("chain columns do not match the summary layout");
  return chain;
}

void write_validation_json(std::ostream& out, const ValidationReport& r, const std::string& family,
                           const std::string& method, double minutes) {
  json j = {{"family", family},
            {"method", method},
            {"rmspe_total", number(r.rmspe_total)},
            {"rmspe_positive", number(r.rmspe_positive)},
            {"auc", number(r.auc)},
            {"n_cv", r.n_cv},
            {"n_positive", r.n_positive},
            {"minutes", number(minutes)}};
  out << j.dump(2) << '\n';
}

ReportRow read_validation_json(std::istream& in) {
  try {
    const json j = json::parse(in);
    ReportRow r;
    r.family = j.at("family").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.rmspe_total = number(j.at("rmspe_total"));
    r.rmspe_positive = number(j.at("rmspe_positive"));
    r.auc = number(j.at("auc"));
    r.minutes = number(j.at("minutes"));
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed validation summary: ") + e.what());
  }
}

}  // namespace picarz
