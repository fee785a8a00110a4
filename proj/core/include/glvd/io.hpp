#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "glvd/data.hpp"
#include "glvd/dynamics.hpp"
#include "glvd/inference.hpp"
#include "glvd/model_gen.hpp"
#include "glvd/validation.hpp"

namespace glvd {

/// Ordered key/value pairs written as `# key: value` lines at the top of CSV files.
using Metadata = std::vector<std::pair<std::string, std::string>>;

std::string library_version();

/// 64-bit FNV-1a digest as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

// JSON documents. Species and scenario indices are 1-based in files.

std::string to_json(const DetailedModel& model);
std::string to_json(const ReducedModel& model);
std::string to_json(const DiscrepancyParams& params);
std::string to_json(const ObservationSet& observations);
std::string to_json(std::span<const Scenario> scenarios);

DetailedModel detailed_from_json(std::string_view text);
ReducedModel reduced_from_json(std::string_view text);
DiscrepancyParams params_from_json(std::string_view text);
ObservationSet observations_from_json(std::string_view text);
std::vector<Scenario> scenarios_from_json(std::string_view text);

/// Chain diagnostics sidecar: acceptance rates, burn-in, thinning, seed and the sampler config.
std::string chain_diagnostics_json(const PosteriorChain& chain, const DramConfig& config);

std::string read_text(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: parent directories are created.
void write_text(const std::filesystem::path& path, std::string_view text);

// CSV exports. Every file starts with the metadata header.

std::string trajectory_csv(const Trajectory& trajectory, const Metadata& meta);
std::string observations_csv(const ObservationSet& observations, const Metadata& meta);
std::string chain_csv(const PosteriorChain& chain, const Metadata& meta);
std::string gamma_csv(std::span<const GammaReport> reports, const Metadata& meta);
std::string fgamma_csv(std::span<const FGammaRow> rows, const Metadata& meta);

struct ComplexityRow {
    int detailed_size = 0;
    int reduced_size = 0;
    double value = 0.0;
};
std::vector<ComplexityRow> complexity_table(std::span<const int> sizes);
std::string complexity_csv(std::span<const ComplexityRow> rows, const Metadata& meta);

/// Reads a chain CSV back (samples and log-posterior only).
PosteriorChain chain_from_csv(std::string_view text);

}  // namespace glvd
