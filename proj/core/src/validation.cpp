#include "glvd/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "glvd/error.hpp"
#include "glvd/parallel.hpp"

namespace glvd {

namespace {

// Kernel contributions beyond this many bandwidths are below exp(-32).
constexpr double kKernelCutoff = 8.0;

double sample_sd(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0));
}

// Unnormalized kernel sum; the common 1/(N h sqrt(2 pi)) factor does not affect rankings.
double kernel_sum(std::span<const double> sorted, double h, double x) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - kKernelCutoff * h);
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), x + kKernelCutoff * h);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) {
        const double u = (x - *it) / h;
        acc += std::exp(-0.5 * u * u);
    }
    return acc;
}

}  // namespace

double silverman_bandwidth(std::span<const double> sample) {
    if (sample.size() < 2) throw ArgumentError("bandwidth needs at least two points");
    return 1.06 * sample_sd(sample) * std::pow(static_cast<double>(sample.size()), -0.2);
}

double kde_density(std::span<const double> sorted_sample, double h, double x) {
    if (sorted_sample.empty() || !(h > 0.0)) throw ArgumentError("KDE needs a sample and a positive bandwidth");
    return kernel_sum(sorted_sample, h, x) /
           (static_cast<double>(sorted_sample.size()) * h * std::sqrt(2.0 * std::numbers::pi));
}

bool is_degenerate(std::span<const double> ensemble) {
    if (ensemble.empty()) return true;
    const auto [mn, mx] = std::minmax_element(ensemble.begin(), ensemble.end());
    return *mn == *mx;
}

double gamma_value(double y_star, std::span<const double> ensemble) {
    if (ensemble.size() < 100) {
        throw ArgumentError(fmt::format("gamma-value needs at least 100 ensemble members, got {}", ensemble.size()));
    }
    if (is_degenerate(ensemble)) return y_star == ensemble.front() ? 1.0 : 0.0;

    std::vector<double> sorted(ensemble.begin(), ensemble.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = silverman_bandwidth(sorted);
    if (!(h > 0.0)) return y_star == sorted.front() ? 1.0 : 0.0;

    const double reference = kernel_sum(sorted, h, y_star);
    std::size_t count = 0;
    // Sweep with a sliding window; each member's kernel sum covers [x - 8h, x + 8h].
    std::size_t lo = 0, hi = 0;
    const std::size_t n = sorted.size();
    for (std::size_t m = 0; m < n; ++m) {
        const double x = sorted[m];
        while (sorted[lo] < x - kKernelCutoff * h) ++lo;
        while (hi < n && sorted[hi] <= x + kKernelCutoff * h) ++hi;
        double acc = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const double u = (x - sorted[k]) / h;
            acc += std::exp(-0.5 * u * u);
        }
        if (acc <= reference) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(n);
}

GammaReport compute_gamma_report(const ObservationSet& observations, const PredictiveEnsemble& ensemble,
                                 int detailed_size, int realization, std::size_t workers) {
    if (ensemble.species != observations.species() || ensemble.times != observations.times()) {
        throw ArgumentError("predictive ensemble does not match the observation layout");
    }
    GammaReport report;
    report.detailed_size = detailed_size;
    report.reduced_size = ensemble.species;
    report.realization = realization;

    const int s = ensemble.species;
    const int T = static_cast<int>(ensemble.times.size());
    const std::size_t per_scenario = static_cast<std::size_t>(s) * static_cast<std::size_t>(T);
    report.entries.resize(ensemble.scenario_ids.size() * per_scenario);
    std::vector<char> degenerate(report.entries.size(), 0);

    parallel_for(ensemble.scenario_ids.size(), workers, [&](std::size_t pos) {
        std::vector<double> column(ensemble.draws());
        for (int j = 0; j < T; ++j) {
            for (int i = 0; i < s; ++i) {
                const Observation& o = observations.at(i, j, ensemble.scenario_ids[pos]);
                const Eigen::Index c = ensemble.coordinate(i, j, static_cast<int>(pos));
                for (std::size_t m = 0; m < column.size(); ++m) {
                    column[m] = ensemble.replicates(static_cast<Eigen::Index>(m), c);
                }
                const std::size_t idx = static_cast<std::size_t>(c);
                GammaEntry& e = report.entries[idx];
                e.species = i;
                e.time_index = j;
                e.scenario = o.scenario;
                e.partition = o.partition;
                e.observed = o.value;
                e.gamma = gamma_value(o.value, column);
                degenerate[idx] = is_degenerate(column) ? 1 : 0;
            }
        }
    });
    report.degenerate = static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
    return report;
}

FGammaRow f_gamma(std::span<const GammaReport> reports, double tau, std::optional<Partition> partition) {
    if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError(fmt::format("threshold must be in (0, 1), got {}", tau));
    if (reports.empty()) throw ArgumentError("no gamma reports to aggregate");

    FGammaRow row;
    row.detailed_size = reports.front().detailed_size;
    row.reduced_size = reports.front().reduced_size;
    row.partition = partition;
    row.tau = tau;
    std::set<int> realizations;
    for (const GammaReport& r : reports) {
        if (r.detailed_size != row.detailed_size || r.reduced_size != row.reduced_size) {
            throw ArgumentError("f_gamma aggregates reports for a single (S, s) pair");
        }
        realizations.insert(r.realization);
        for (const GammaEntry& e : r.entries) {
            if (partition && e.partition != *partition) continue;
            ++row.total;
            if (e.gamma < tau) ++row.below;
        }
    }
    if (row.total == 0) throw ArgumentError("no gamma-values in the requested partition");
    row.realizations = realizations.size();
    return row;
}

double relative_complexity(int S, int s) {
    if (s < 1 || s >= S) throw ArgumentError(fmt::format("relative complexity needs 1 <= s < S, got S = {}, s = {}", S, s));
    const double added = 2.0 * s;
    const double omitted = static_cast<double>(S) * S - static_cast<double>(s) * s + (S - s);
    return added / omitted;
}

}  // namespace glvd
