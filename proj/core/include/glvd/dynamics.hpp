#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "glvd/model_gen.hpp"

namespace glvd {

/// Coefficients of the linear embedded discrepancy
///   dx/dt = R(x) + diag(x) delta0 + diag(|dx/dt|) delta1,
/// with every entry <= 0.
struct DiscrepancyParams {
    Eigen::VectorXd delta0;
    Eigen::VectorXd delta1;

    int size() const noexcept { return static_cast<int>(delta0.size()); }

    static DiscrepancyParams zero(int s);
    /// Unpacks the calibration vector theta = (delta0, delta1), length 2s.
    static DiscrepancyParams from_theta(const Eigen::VectorXd& theta);
    Eigen::VectorXd theta() const;

    /// Throws ArgumentError on mismatched lengths or a positive entry.
    void validate() const;
};

/// Which |dx/dt| enters the discrepancy term.
enum class EnrichedMode {
    explicit_surrogate,  ///< |R(x)|, the reduced model's rate
    implicit,            ///< the self-consistent rate, solved component-wise
};

std::string_view to_string(EnrichedMode mode);
EnrichedMode enriched_mode_from_string(std::string_view name);

/// A plain GLV system dx/dt = diag(x)(r + A x) of any size >= 1.
struct GlvSystem {
    Eigen::VectorXd growth;
    Eigen::MatrixXd interactions;

    int size() const noexcept { return static_cast<int>(growth.size()); }

    static GlvSystem of(const DetailedModel& model);
    static GlvSystem of(const ReducedModel& model);
};

struct EnrichedModel {
    ReducedModel reduced;
    DiscrepancyParams params;
    EnrichedMode mode = EnrichedMode::explicit_surrogate;

    int size() const noexcept { return reduced.size(); }
};

enum class ModelTag { detailed, reduced, enriched };

std::string_view to_string(ModelTag tag);
ModelTag model_tag_from_string(std::string_view name);

struct SolverConfig {
    double rel_tol = 1e-6;
    double abs_tol = 1e-8;
    double max_step = std::numeric_limits<double>::infinity();
    double t_final = 10.0;
    double negativity_floor = 1e-12;
    std::size_t max_steps = 200000;

    void validate() const;
};

struct SolverStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;
};

/// States sampled on an output grid. Row r of `states` is the state at times[r].
struct Trajectory {
    ModelTag tag = ModelTag::reduced;
    std::vector<double> times;
    Eigen::MatrixXd states;
    SolverStats stats;
};

Eigen::VectorXd rhs_glv(const GlvSystem& system, const Eigen::VectorXd& x);
Eigen::VectorXd rhs_glv(const DetailedModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd rhs_glv(const ReducedModel& model, const Eigen::VectorXd& x);

/// Unique v with v = c + delta1 * |v|. Requires delta1 <= 0; throws
/// NoSolutionError when delta1 <= -1 and c < 0.
double solve_implicit_rate(double c, double delta1);

Eigen::VectorXd rhs_enriched(const ReducedModel& reduced, const DiscrepancyParams& params,
                             const Eigen::VectorXd& x, EnrichedMode mode);
Eigen::VectorXd rhs_enriched(const EnrichedModel& model, const Eigen::VectorXd& x);

/// t_j = j * t_final / count for j = 1..count.
std::vector<double> uniform_observation_times(double t_final, int count);

/// Adaptive Dormand-Prince 5(4) integration from t = 0 to solver.t_final with
/// dense output at `output_times` (each in [0, t_final], strictly increasing).
Trajectory integrate(const GlvSystem& system, const Eigen::VectorXd& initial, const SolverConfig& solver,
                     std::span<const double> output_times);
Trajectory integrate(const DetailedModel& model, const Eigen::VectorXd& initial, const SolverConfig& solver,
                     std::span<const double> output_times);
Trajectory integrate(const ReducedModel& model, const Eigen::VectorXd& initial, const SolverConfig& solver,
                     std::span<const double> output_times);
Trajectory integrate(const EnrichedModel& model, const Eigen::VectorXd& initial, const SolverConfig& solver,
                     std::span<const double> output_times);

}  // namespace glvd
