#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "glvd/data.hpp"
#include "glvd/dynamics.hpp"
#include "glvd/error.hpp"
#include "glvd/inference.hpp"
#include "glvd/io.hpp"
#include "glvd/model_gen.hpp"
#include "glvd/validation.hpp"

namespace glvd {

/// Where synthetic observations come from.
enum class TruthKind {
    detailed,  ///< the S-species detailed model (the normal experiment)
    enriched,  ///< the enriched reduced model at a random theta* (model-is-truth harness)
};

struct ExperimentConfig {
    GenerationConfig generation;  ///< seed is replaced per realization
    std::vector<int> reductions{4};

    int n_calibration = 3;
    int n_validation = 3;
    IcRange ic_range;

    SolverConfig solver;
    int observation_count = 10;  ///< T
    double sigma2_eps = 0.001;

    DramConfig dram;  ///< seed and initial covariance are replaced per run
    double initial_proposal_sd = 0.1;
    double prior_lower = -100.0;
    double prior_upper = 0.0;
    double init_low = -1.0;
    double init_high = 0.0;
    EnrichedMode mode = EnrichedMode::explicit_surrogate;

    std::vector<double> thresholds{0.05, 0.01};
    std::size_t ensemble_size = 2000;

    int realizations = 20;  ///< n_M
    std::uint64_t master_seed = 1;
    std::vector<int> complexity_sizes{10, 20, 50, 100};

    TruthKind truth = TruthKind::detailed;
    double truth_delta0_low = -1.0, truth_delta0_high = -0.1;
    double truth_delta1_low = -0.5, truth_delta1_high = -0.05;

    std::filesystem::path output_directory = "glvd-out";
    bool write_svg = false;
    int plot_points = 101;
    std::size_t plot_draws = 500;
    std::size_t workers = 1;

    void validate() const;
};

/// Parses a config document; every absent key keeps its default.
ExperimentConfig experiment_config_from_json(std::string_view text);
std::string to_json(const ExperimentConfig& config);
/// Digest of the canonical JSON form, written into every artifact header.
std::string config_hash(const ExperimentConfig& config);

/// Seeds used by one (realization, s) run; all derived from the master seed.
struct RunSeeds {
    std::uint64_t model, scenarios, noise, truth, chain, init, predictive;
};
RunSeeds run_seeds(std::uint64_t master, int realization, int s);

struct RunSummary {
    int detailed_size = 0;
    int reduced_size = 0;
    int realization = 0;
    std::filesystem::path directory;
    GammaReport gamma;
    AcceptanceStats acceptance;
    bool stalled = false;
    Eigen::VectorXd theta_mean;
    std::optional<Eigen::VectorXd> theta_true;
    /// Fraction of observations inside the 95% posterior predictive band.
    double coverage95_calibration = 0.0;
    double coverage95_validation = 0.0;
    /// Mean squared residual over all observations.
    double mse_enriched = 0.0;
    double mse_reduced = 0.0;
};

/// A failure in one stage of a run. Artifacts written before the failure are
/// kept and a failure manifest is added to the run directory.
class RunError : public Error {
public:
    RunError(std::string stage, const std::string& message, bool numerical)
        : Error(stage + ": " + message), stage_(std::move(stage)), numerical_(numerical) {}
    const std::string& stage() const noexcept { return stage_; }
    bool numerical() const noexcept { return numerical_; }

private:
    std::string stage_;
    bool numerical_;
};

/// Detailed model -> reduced model -> observations -> calibration ->
/// predictive bands -> gamma-values, for one realization and one s. Writes
/// all artifacts under `directory`.
RunSummary run_single(const ExperimentConfig& config, int s, int realization, const std::filesystem::path& directory);

struct SweepResult {
    std::vector<FGammaRow> fgamma;
    std::vector<ComplexityRow> complexity;
    std::vector<RunSummary> runs;  ///< successful runs in (s, realization) order
    std::size_t attempted = 0;
    std::vector<std::string> failures;
};

/// Raised when more than 10% of a sweep's realizations fail. Outputs for the
/// successful ones are still written.
class SweepError : public Error {
public:
    SweepError(const std::string& message, SweepResult partial) : Error(message), partial_(std::move(partial)) {}
    const SweepResult& partial() const noexcept { return partial_; }

private:
    SweepResult partial_;
};

using ProgressCallback = std::function<void(const std::string&)>;

/// Every s in config.reductions x every realization, aggregated into f_gamma
/// rows per (s, partition in {c, v, all}, tau), plus the complexity table.
SweepResult run_sweep(const ExperimentConfig& config, const ProgressCallback& progress = {});

/// Aggregation step of run_sweep, exposed separately.
std::vector<FGammaRow> aggregate_fgamma(std::span<const GammaReport> reports, std::span<const double> thresholds);

}  // namespace glvd
