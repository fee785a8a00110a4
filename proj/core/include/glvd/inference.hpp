#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <list>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glvd/data.hpp"
#include "glvd/dynamics.hpp"
#include "glvd/model_gen.hpp"

namespace glvd {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Independent uniform priors on each component of theta = (delta0, delta1).
/// The support is the open box (lower, upper).
struct PriorSpec {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    static PriorSpec uniform(int dimension, double lower = -100.0, double upper = 0.0);

    int dimension() const noexcept { return static_cast<int>(lower.size()); }
    bool contains(const Eigen::VectorXd& theta) const;
    void validate() const;
};

/// -sum log(upper - lower) inside the open box, kNegInf outside.
double log_prior(const Eigen::VectorXd& theta, const PriorSpec& prior);

using LogDensity = std::function<double(const Eigen::VectorXd&)>;

/// Posterior over the discrepancy parameters given calibration observations.
/// Evaluations are memoized per theta; the object is safe to share between threads.
class CalibrationProblem {
public:
    CalibrationProblem(ReducedModel reduced, ObservationSet observations, SolverConfig solver,
                       EnrichedMode mode = EnrichedMode::explicit_surrogate, std::size_t cache_capacity = 32);

    int dimension() const noexcept { return 2 * reduced_.size(); }
    const ReducedModel& reduced() const noexcept { return reduced_; }
    const ObservationSet& observations() const noexcept { return observations_; }
    EnrichedMode mode() const noexcept { return mode_; }

    /// Gaussian log-likelihood sum over all observations; kNegInf if theta has
    /// a positive entry or any scenario fails to integrate.
    double log_likelihood(const Eigen::VectorXd& theta) const;

    /// Per-scenario enriched trajectories at the observation times. Throws on failure.
    std::vector<Trajectory> simulate(const Eigen::VectorXd& theta) const;

    std::size_t cache_hits() const;
    std::size_t evaluations() const;

private:
    double compute(const Eigen::VectorXd& theta) const;

    ReducedModel reduced_;
    ObservationSet observations_;
    SolverConfig solver_;
    EnrichedMode mode_;
    std::size_t cache_capacity_;

    mutable std::mutex mutex_;
    mutable std::map<std::vector<double>, double> cache_;
    mutable std::list<std::vector<double>> cache_order_;
    mutable std::size_t hits_ = 0;
    mutable std::size_t evaluations_ = 0;
};

/// Convenience wrapper: the calibration-partition log-likelihood.
double log_likelihood(const Eigen::VectorXd& theta, const ReducedModel& reduced, const ObservationSet& calibration,
                      const SolverConfig& solver, EnrichedMode mode = EnrichedMode::explicit_surrogate);

/// log_prior + log_likelihood; short-circuits outside the prior support.
LogDensity make_log_posterior(const CalibrationProblem& problem, const PriorSpec& prior);

struct DramConfig {
    std::size_t iterations = 50000;
    std::size_t burn_in = 10000;
    std::size_t thin = 1;
    /// Initial Gaussian proposal covariance; empty means 0.01 * I.
    Eigen::MatrixXd initial_covariance;
    bool delayed_rejection = true;
    /// Second-stage proposal standard deviation relative to the first stage.
    double dr_scale = 0.2;
    bool adapt = true;
    std::size_t adapt_start = 1000;
    std::size_t adapt_interval = 100;
    /// Covariance scale s_d; <= 0 means 2.4^2 / d.
    double adapt_scale = 0.0;
    double regularization = 1e-8;
    std::size_t stall_window = 5000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AcceptanceStats {
    std::size_t iterations = 0;
    std::size_t stage1_proposals = 0;
    std::size_t stage1_accepted = 0;
    std::size_t stage2_proposals = 0;
    std::size_t stage2_accepted = 0;

    double stage1_rate() const noexcept;
    double stage2_rate() const noexcept;
    double overall_rate() const noexcept;
};

struct PosteriorChain {
    Eigen::MatrixXd samples;  ///< retained draws, one per row
    std::vector<double> log_posterior;
    AcceptanceStats acceptance;
    std::size_t burn_in = 0;
    std::size_t thin = 1;
    std::uint64_t seed = 0;
    Eigen::MatrixXd final_covariance;
    bool stalled = false;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return static_cast<std::size_t>(samples.rows()); }
    int dimension() const noexcept { return static_cast<int>(samples.cols()); }
    Eigen::VectorXd mean() const;
    Eigen::MatrixXd covariance() const;
    /// Linear-interpolated quantile of one parameter's marginal.
    double quantile(int parameter, double q) const;
};

/// Delayed-rejection adaptive Metropolis. Draw order per iteration: d normals
/// then one uniform for stage 1; the same again for stage 2 when it runs.
PosteriorChain run_dram(const LogDensity& target, const Eigen::VectorXd& initial, const DramConfig& config);

/// Uniform draw in [low, high)^dimension, used to start chains near zero discrepancy.
Eigen::VectorXd sample_initial_theta(int dimension, double low, double high, std::uint64_t seed);

/// Posterior predictive ensemble over scenarios x times x species. Coordinate
/// c = (scenario_pos * T + time_index) * s + species, matching ObservationSet order.
struct PredictiveEnsemble {
    int species = 0;
    std::vector<double> times;
    std::vector<int> scenario_ids;
    std::vector<Partition> partitions;
    std::vector<Eigen::Index> draw_indices;  ///< chain rows used, after dropping failures
    Eigen::MatrixXd outputs;                 ///< enriched model output y_E, draws x coordinates
    Eigen::MatrixXd replicates;              ///< y_E + noise
    std::size_t dropped = 0;

    Eigen::Index coordinate(int species_index, int time_index, int scenario_pos) const;
    Eigen::Index coordinates() const noexcept { return outputs.cols(); }
    std::size_t draws() const noexcept { return static_cast<std::size_t>(outputs.rows()); }
};

PredictiveEnsemble posterior_predictive(const PosteriorChain& chain, const ReducedModel& reduced,
                                        std::span<const Scenario> scenarios, std::span<const double> times,
                                        std::size_t n_draws, double sigma2, const SolverConfig& solver,
                                        EnrichedMode mode, std::uint64_t seed, std::size_t workers = 1);

/// Per-column quantiles of `ensemble` (rows are draws); result is columns x probs.
Eigen::MatrixXd quantile_bands(const Eigen::MatrixXd& ensemble, std::span<const double> probs);

/// Type-7 (linear interpolation) sample quantile of unsorted values.
double sample_quantile(std::vector<double> values, double q);

}  // namespace glvd
