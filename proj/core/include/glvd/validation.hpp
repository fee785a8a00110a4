#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glvd/data.hpp"
#include "glvd/inference.hpp"

namespace glvd {

/// Silverman's rule of thumb 1.06 * sd * N^(-1/5), sd the sample standard deviation.
double silverman_bandwidth(std::span<const double> sample);

/// Gaussian KDE of `sample` with bandwidth h, evaluated at x.
double kde_density(std::span<const double> sorted_sample, double h, double x);

/// gamma-value of an observation against a predictive ensemble: the fraction
/// of ensemble members whose estimated density is <= the estimated density
/// at y_star. The density is a Gaussian KDE with Silverman bandwidth.
/// Requires at least 100 members. A zero-variance ensemble yields 1 when
/// y_star equals the atom and 0 otherwise.
double gamma_value(double y_star, std::span<const double> ensemble);

/// True when the ensemble has zero spread (the degenerate gamma-value case).
bool is_degenerate(std::span<const double> ensemble);

struct GammaEntry {
    int species = 0;
    int time_index = 0;
    int scenario = 0;
    Partition partition = Partition::calibration;
    double observed = 0.0;
    double gamma = 0.0;
};

struct GammaReport {
    int detailed_size = 0;  ///< S
    int reduced_size = 0;   ///< s
    int realization = 0;
    std::string bandwidth_rule = "silverman-1.06";
    std::size_t degenerate = 0;
    std::vector<GammaEntry> entries;
};

/// gamma-values for every observation covered by the ensemble. The
/// ensemble's scenarios must be a subset of the observation set's.
GammaReport compute_gamma_report(const ObservationSet& observations, const PredictiveEnsemble& ensemble,
                                 int detailed_size, int realization, std::size_t workers = 1);

struct FGammaRow {
    int detailed_size = 0;
    int reduced_size = 0;
    std::optional<Partition> partition;  ///< nullopt pools both partitions
    std::size_t realizations = 0;        ///< n_M
    double tau = 0.0;
    std::size_t below = 0;               ///< |Q|
    std::size_t total = 0;               ///< |Gamma|

    double fraction() const noexcept {
        return total ? static_cast<double>(below) / static_cast<double>(total) : 0.0;
    }
    double alpha() const noexcept {
        return detailed_size ? static_cast<double>(reduced_size) / detailed_size : 0.0;
    }
};

/// f_gamma = |{gamma < tau}| / |Gamma| over the reports' entries of one
/// partition (or all, when `partition` is empty). Requires tau in (0, 1) and
/// at least one matching gamma-value.
FGammaRow f_gamma(std::span<const GammaReport> reports, double tau, std::optional<Partition> partition);

/// Terms added by enrichment (2s) over terms dropped by reduction
/// (S^2 - s^2 interaction terms plus S - s growth rates).
double relative_complexity(int S, int s);

}  // namespace glvd
