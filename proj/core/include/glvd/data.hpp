#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "glvd/dynamics.hpp"
#include "glvd/model_gen.hpp"

namespace glvd {

enum class Partition { calibration, validation };

std::string_view to_string(Partition p);
/// Accepts "calibration"/"c" and "validation"/"v".
Partition partition_from_string(std::string_view name);

/// One initial condition phi_k. `initial` covers the s observed species;
/// `hidden_initial` the remaining S - s species of the detailed model.
struct Scenario {
    int id = 0;
    Eigen::VectorXd initial;
    Eigen::VectorXd hidden_initial;
    Partition partition = Partition::calibration;

    Eigen::VectorXd full_initial() const;
};

struct IcRange {
    double low = 0.5;
    double high = 2.0;
};

/// n_phi scenarios with i.i.d. U[low, high] initial concentrations for all S
/// species, drawn from a per-scenario stream derived from `seed`. The first
/// n_calibration are tagged calibration, the rest validation.
std::vector<Scenario> sample_scenarios(int n_phi, int n_calibration, int s, int S, IcRange range,
                                       std::uint64_t seed);

/// y_ijk: observation of species i at time index j under scenario k (all 0-based).
struct Observation {
    int species = 0;
    int time_index = 0;
    int scenario = 0;
    double time = 0.0;
    double value = 0.0;
    double truth = 0.0;
    Partition partition = Partition::calibration;
};

/// The data-generating process for synthetic observations.
using TruthModel = std::variant<DetailedModel, EnrichedModel>;

class ObservationSet {
public:
    ObservationSet() = default;
    ObservationSet(int species, std::vector<double> times, double sigma2, std::vector<Scenario> scenarios,
                   std::vector<Observation> entries);

    int species() const noexcept { return species_; }
    const std::vector<double>& times() const noexcept { return times_; }
    double sigma2() const noexcept { return sigma2_; }
    const std::vector<Scenario>& scenarios() const noexcept { return scenarios_; }
    const std::vector<Observation>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    int n_calibration() const noexcept;
    int n_validation() const noexcept;

    /// Entries ordered by (scenario, time index, species); throws when absent.
    const Observation& at(int species, int time_index, int scenario) const;

    /// Scenarios and entries restricted to one partition.
    ObservationSet restrict(Partition p) const;

    bool operator==(const ObservationSet& other) const;

private:
    std::size_t index_of(int species, int time_index, int scenario_pos) const;

    int species_ = 0;
    std::vector<double> times_;
    double sigma2_ = 0.0;
    std::vector<Scenario> scenarios_;
    std::vector<Observation> entries_;
};

/// Integrates the truth model for every scenario, records the first s
/// species at `times` and adds N(0, sigma2) noise. Noise for scenario k comes
/// from a stream derived from (seed, k), so the result does not depend on
/// evaluation order.
ObservationSet synthesize_observations(const TruthModel& truth, int s, std::span<const Scenario> scenarios,
                                       std::span<const double> times, double sigma2, const SolverConfig& solver,
                                       std::uint64_t seed);

}  // namespace glvd
