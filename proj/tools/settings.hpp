#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "picarz/io.hpp"
#include "picarz/pipeline.hpp"

namespace picarz::cli {

/// Comma-separated list, blanks trimmed, empty items dropped.
std::vector<std::string> split_list(const std::string& text);
Eigen::VectorXd parse_vector(const std::string& text, const std::string& key);

std::uint64_t root_seed(const Config& c);
SimulationConfig simulation_config(const Config& c);
PipelineOptions pipeline_options(const Config& c);
LatentKind method(const Config& c);

/// Dataset plus family: model.family overrides the metadata sidecar.
SyntheticDataset load_dataset(const Config& c);

/// Mesh and basis from paths.mesh / paths.basis when both files exist,
/// otherwise built from the mesh.* and basis.* settings (and written to
/// those paths when they are set).
SpatialBasis obtain_basis(const Config& c, const SyntheticDataset& data, const PipelineOptions& options);

/// Writes the config echo next to `primary` unless paths.echo is set, and
/// reports unread keys on stderr.
void finish_config(const Config& c, const std::filesystem::path& primary);

/// Inserts "_<k>" before the extension, or replaces "{replicate}".
std::filesystem::path replicate_path(const std::filesystem::path& path, long k);

}  // namespace picarz::cli
