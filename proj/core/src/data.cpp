#include "glvd/data.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <type_traits>

#include <fmt/format.h>

#include "glvd/error.hpp"
#include "glvd/rng.hpp"

namespace glvd {

std::string_view to_string(Partition p) { return p == Partition::calibration ? "calibration" : "validation"; }

Partition partition_from_string(std::string_view name) {
    if (name == "calibration" || name == "c") return Partition::calibration;
    if (name == "validation" || name == "v") return Partition::validation;
    throw ArgumentError(fmt::format("unknown partition '{}'", name));
}

Eigen::VectorXd Scenario::full_initial() const {
    Eigen::VectorXd out(initial.size() + hidden_initial.size());
    out << initial, hidden_initial;
    return out;
}

std::vector<Scenario> sample_scenarios(int n_phi, int n_calibration, int s, int S, IcRange range,
                                       std::uint64_t seed) {
    if (n_phi < 2) throw ArgumentError(fmt::format("need at least 2 scenarios, got {}", n_phi));
    if (n_calibration < 1 || n_calibration >= n_phi) {
        throw ArgumentError(fmt::format("calibration count must be in [1, {}], got {}", n_phi - 1, n_calibration));
    }
    if (s < 1 || S < s) throw ArgumentError(fmt::format("invalid sizes s = {}, S = {}", s, S));
    if (!(range.low > 0.0) || !(range.high > range.low) || !std::isfinite(range.high)) {
        throw ArgumentError(fmt::format("initial-condition range must satisfy 0 < low < high, got [{}, {}]",
                                        range.low, range.high));
    }

    // Each scenario draws all S concentrations from its own stream; the first s
    // are observed, so a scenario's observed species do not depend on s.
    std::uniform_real_distribution<double> uni(range.low, range.high);
    std::vector<Scenario> out(static_cast<std::size_t>(n_phi));
    for (int k = 0; k < n_phi; ++k) {
        Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
        Scenario& sc = out[static_cast<std::size_t>(k)];
        sc.id = k;
        sc.partition = k < n_calibration ? Partition::calibration : Partition::validation;
        sc.initial.resize(s);
        sc.hidden_initial.resize(S - s);
        for (int i = 0; i < S; ++i) {
            const double v = uni(rng);
            if (i < s) {
                sc.initial(i) = v;
            } else {
                sc.hidden_initial(i - s) = v;
            }
        }
    }
    return out;
}

ObservationSet::ObservationSet(int species, std::vector<double> times, double sigma2,
                               std::vector<Scenario> scenarios, std::vector<Observation> entries)
    : species_(species),
      times_(std::move(times)),
      sigma2_(sigma2),
      scenarios_(std::move(scenarios)),
      entries_(std::move(entries)) {
    if (!(sigma2_ > 0.0)) throw ArgumentError("noise variance must be positive");
    const std::size_t expected =
        static_cast<std::size_t>(species_) * times_.size() * scenarios_.size();
    if (entries_.size() != expected) {
        throw ArgumentError(fmt::format("expected {} observations, got {}", expected, entries_.size()));
    }
    for (std::size_t pos = 0; pos < scenarios_.size(); ++pos) {
        for (std::size_t j = 0; j < times_.size(); ++j) {
            for (int i = 0; i < species_; ++i) {
                const Observation& o = entries_[index_of(i, static_cast<int>(j), static_cast<int>(pos))];
                if (o.species != i || o.time_index != static_cast<int>(j) || o.scenario != scenarios_[pos].id ||
                    o.partition != scenarios_[pos].partition) {
                    throw ArgumentError("observation entries are not in (scenario, time, species) order");
                }
            }
        }
    }
}

std::size_t ObservationSet::index_of(int species, int time_index, int scenario_pos) const {
    return (static_cast<std::size_t>(scenario_pos) * times_.size() + static_cast<std::size_t>(time_index)) *
               static_cast<std::size_t>(species_) +
           static_cast<std::size_t>(species);
}

int ObservationSet::n_calibration() const noexcept {
    return static_cast<int>(std::count_if(scenarios_.begin(), scenarios_.end(),
                                          [](const Scenario& s) { return s.partition == Partition::calibration; }));
}

int ObservationSet::n_validation() const noexcept {
    return static_cast<int>(scenarios_.size()) - n_calibration();
}

const Observation& ObservationSet::at(int species, int time_index, int scenario) const {
    auto it = std::find_if(scenarios_.begin(), scenarios_.end(), [&](const Scenario& s) { return s.id == scenario; });
    if (it == scenarios_.end() || species < 0 || species >= species_ || time_index < 0 ||
        time_index >= static_cast<int>(times_.size())) {
        throw ArgumentError(fmt::format("no observation ({}, {}, {})", species, time_index, scenario));
    }
    return entries_[index_of(species, time_index, static_cast<int>(it - scenarios_.begin()))];
}

ObservationSet ObservationSet::restrict(Partition p) const {
    std::vector<Scenario> scenarios;
    std::vector<Observation> entries;
    for (std::size_t pos = 0; pos < scenarios_.size(); ++pos) {
        if (scenarios_[pos].partition != p) continue;
        scenarios.push_back(scenarios_[pos]);
        const std::size_t begin = index_of(0, 0, static_cast<int>(pos));
        const std::size_t block = times_.size() * static_cast<std::size_t>(species_);
        entries.insert(entries.end(), entries_.begin() + static_cast<std::ptrdiff_t>(begin),
                       entries_.begin() + static_cast<std::ptrdiff_t>(begin + block));
    }
    return ObservationSet(species_, times_, sigma2_, std::move(scenarios), std::move(entries));
}

bool ObservationSet::operator==(const ObservationSet& other) const {
    if (species_ != other.species_ || times_ != other.times_ || sigma2_ != other.sigma2_ ||
        scenarios_.size() != other.scenarios_.size() || entries_.size() != other.entries_.size()) {
        return false;
    }
    for (std::size_t k = 0; k < scenarios_.size(); ++k) {
        const Scenario& a = scenarios_[k];
        const Scenario& b = other.scenarios_[k];
        if (a.id != b.id || a.partition != b.partition || a.initial != b.initial ||
            a.hidden_initial != b.hidden_initial) {
            return false;
        }
    }
    for (std::size_t n = 0; n < entries_.size(); ++n) {
        const Observation& a = entries_[n];
        const Observation& b = other.entries_[n];
        if (a.species != b.species || a.time_index != b.time_index || a.scenario != b.scenario ||
            a.time != b.time || a.value != b.value || a.truth != b.truth || a.partition != b.partition) {
            return false;
        }
    }
    return true;
}

ObservationSet synthesize_observations(const TruthModel& truth, int s, std::span<const Scenario> scenarios,
                                       std::span<const double> times, double sigma2, const SolverConfig& solver,
                                       std::uint64_t seed) {
    if (scenarios.empty()) throw ArgumentError("no scenarios to observe");
    if (!(sigma2 > 0.0)) throw ArgumentError("noise variance must be positive");
    const double sd = std::sqrt(sigma2);

    std::vector<Observation> entries;
    entries.reserve(scenarios.size() * times.size() * static_cast<std::size_t>(s));
    for (const Scenario& sc : scenarios) {
        if (sc.initial.size() != s) {
            throw ArgumentError(fmt::format("scenario {} has {} observed species, expected {}", sc.id,
                                            sc.initial.size(), s));
        }
        Trajectory traj;
        try {
            traj = std::visit(
                [&](const auto& model) -> Trajectory {
                    using M = std::decay_t<decltype(model)>;
                    if constexpr (std::is_same_v<M, DetailedModel>) {
                        if (sc.initial.size() + sc.hidden_initial.size() != model.size()) {
                            throw ArgumentError(fmt::format("scenario {} does not cover all {} species", sc.id,
                                                            model.size()));
                        }
                        return integrate(model, sc.full_initial(), solver, times);
                    } else {
                        return integrate(model, sc.initial, solver, times);
                    }
                },
                truth);
        } catch (const NumericalError& e) {
            throw NumericalError(fmt::format("scenario {}: {}", sc.id, e.what()));
        }

        Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(sc.id)}));
        std::normal_distribution<double> noise(0.0, sd);
        for (std::size_t j = 0; j < times.size(); ++j) {
            for (int i = 0; i < s; ++i) {
                Observation o;
                o.species = i;
                o.time_index = static_cast<int>(j);
                o.scenario = sc.id;
                o.time = times[j];
                o.truth = traj.states(static_cast<Eigen::Index>(j), i);
                o.value = o.truth + noise(rng);
                o.partition = sc.partition;
                entries.push_back(o);
            }
        }
    }
    return ObservationSet(s, std::vector<double>(times.begin(), times.end()), sigma2,
                          std::vector<Scenario>(scenarios.begin(), scenarios.end()), std::move(entries));
}

}  // namespace glvd
