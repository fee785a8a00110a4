#include "glvd/dynamics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dopri45.hpp"
#include "glvd/error.hpp"

namespace glvd {

DiscrepancyParams DiscrepancyParams::zero(int s) {
    return {Eigen::VectorXd::Zero(s), Eigen::VectorXd::Zero(s)};
}

DiscrepancyParams DiscrepancyParams::from_theta(const Eigen::VectorXd& theta) {
    if (theta.size() % 2 != 0 || theta.size() == 0) {
        throw ArgumentError(fmt::format("theta must have even positive length, got {}", theta.size()));
    }
    const Eigen::Index s = theta.size() / 2;
    return {theta.head(s), theta.tail(s)};
}

Eigen::VectorXd DiscrepancyParams::theta() const {
    Eigen::VectorXd out(delta0.size() + delta1.size());
    out << delta0, delta1;
    return out;
}

void DiscrepancyParams::validate() const {
    if (delta0.size() != delta1.size()) {
        throw ArgumentError("delta0 and delta1 must have the same length");
    }
    for (Eigen::Index i = 0; i < delta0.size(); ++i) {
        if (!(delta0(i) <= 0.0) || !(delta1(i) <= 0.0)) {
            throw ArgumentError(fmt::format("discrepancy coefficients must be <= 0 (species {})", i + 1));
        }
    }
}

std::string_view to_string(EnrichedMode mode) {
    return mode == EnrichedMode::implicit ? "implicit" : "explicit";
}

EnrichedMode enriched_mode_from_string(std::string_view name) {
    if (name == "explicit" || name == "explicit-surrogate") return EnrichedMode::explicit_surrogate;
    if (name == "implicit") return EnrichedMode::implicit;
    throw ConfigError(fmt::format("unknown enriched mode '{}'", name));
}

std::string_view to_string(ModelTag tag) {
    switch (tag) {
        case ModelTag::detailed: return "detailed";
        case ModelTag::reduced: return "reduced";
        case ModelTag::enriched: return "enriched";
    }
    return "unknown";
}

ModelTag model_tag_from_string(std::string_view name) {
    if (name == "detailed") return ModelTag::detailed;
    if (name == "reduced") return ModelTag::reduced;
    if (name == "enriched") return ModelTag::enriched;
    throw ArgumentError(fmt::format("unknown model tag '{}'", name));
}

GlvSystem GlvSystem::of(const DetailedModel& model) {
    return {model.growth.values(), model.interactions.entries()};
}

GlvSystem GlvSystem::of(const ReducedModel& model) {
    return {model.growth.values(), model.interactions.entries()};
}

void SolverConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ConfigError("solver tolerances must be positive");
    if (!(t_final > 0.0) || !std::isfinite(t_final)) throw ConfigError("t_final must be positive and finite");
    if (!(max_step > 0.0)) throw ConfigError("max_step must be positive");
    if (!(negativity_floor >= 0.0)) throw ConfigError("negativity floor must be non-negative");
    if (max_steps == 0) throw ConfigError("max_steps must be positive");
}

namespace {

void check_dimension(Eigen::Index expected, Eigen::Index got) {
    if (expected != got) {
        throw ArgumentError(fmt::format("state has dimension {}, model expects {}", got, expected));
    }
}

// dx = diag(x)(r + A x), written into a caller-owned buffer.
inline void glv_into(const Eigen::VectorXd& r, const Eigen::MatrixXd& a, const Eigen::VectorXd& x,
                     Eigen::VectorXd& dx) {
    dx.noalias() = a * x;
    dx += r;
    dx.array() *= x.array();
}

inline void enriched_into(const Eigen::VectorXd& r, const Eigen::MatrixXd& a, const DiscrepancyParams& p,
                          EnrichedMode mode, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    glv_into(r, a, x, dx);
    if (mode == EnrichedMode::explicit_surrogate) {
        dx.array() += x.array() * p.delta0.array() + dx.array().abs() * p.delta1.array();
    } else {
        for (Eigen::Index i = 0; i < dx.size(); ++i) {
            dx(i) = solve_implicit_rate(dx(i) + p.delta0(i) * x(i), p.delta1(i));
        }
    }
}

void check_params(const ReducedModel& reduced, const DiscrepancyParams& params) {
    if (params.delta0.size() != reduced.size() || params.delta1.size() != reduced.size()) {
        throw ArgumentError(fmt::format("discrepancy has {} species, reduced model has {}",
                                        params.delta0.size(), reduced.size()));
    }
}

}  // namespace

Eigen::VectorXd rhs_glv(const GlvSystem& system, const Eigen::VectorXd& x) {
    check_dimension(system.size(), x.size());
    Eigen::VectorXd dx(x.size());
    glv_into(system.growth, system.interactions, x, dx);
    return dx;
}

Eigen::VectorXd rhs_glv(const DetailedModel& model, const Eigen::VectorXd& x) {
    return rhs_glv(GlvSystem::of(model), x);
}

Eigen::VectorXd rhs_glv(const ReducedModel& model, const Eigen::VectorXd& x) {
    return rhs_glv(GlvSystem::of(model), x);
}

double solve_implicit_rate(double c, double delta1) {
    if (c >= 0.0) {
        // v >= 0 branch: v = c + delta1 v.
        return c / (1.0 - delta1);
    }
    // v < 0 branch: v = c - delta1 v.
    if (delta1 <= -1.0) {
        throw NoSolutionError(
            fmt::format("implicit discrepancy has no solution for c = {}, delta1 = {}", c, delta1));
    }
    return c / (1.0 + delta1);
}

Eigen::VectorXd rhs_enriched(const ReducedModel& reduced, const DiscrepancyParams& params,
                             const Eigen::VectorXd& x, EnrichedMode mode) {
    check_dimension(reduced.size(), x.size());
    check_params(reduced, params);
    Eigen::VectorXd dx(x.size());
    enriched_into(reduced.growth.values(), reduced.interactions.entries(), params, mode, x, dx);
    return dx;
}

Eigen::VectorXd rhs_enriched(const EnrichedModel& model, const Eigen::VectorXd& x) {
    return rhs_enriched(model.reduced, model.params, x, model.mode);
}

std::vector<double> uniform_observation_times(double t_final, int count) {
    if (count < 1) throw ArgumentError("observation count must be positive");
    if (!(t_final > 0.0)) throw ArgumentError("t_final must be positive");
    std::vector<double> times(static_cast<std::size_t>(count));
    for (int j = 1; j <= count; ++j) {
        times[static_cast<std::size_t>(j - 1)] = j == count ? t_final : t_final * j / count;
    }
    return times;
}

Trajectory integrate(const GlvSystem& system, const Eigen::VectorXd& initial, const SolverConfig& solver,
                     std::span<const double> output_times) {
    check_dimension(system.size(), initial.size());
    const Eigen::VectorXd& r = system.growth;
    const Eigen::MatrixXd& a = system.interactions;
    return detail::integrate_dopri45(
        [&](const Eigen::VectorXd& x, Eigen::VectorXd& dx) { glv_into(r, a, x, dx); }, initial, solver,
        output_times, ModelTag::reduced);
}

Trajectory integrate(const DetailedModel& model, const Eigen::VectorXd& initial, const SolverConfig& solver,
                     std::span<const double> output_times) {
    Trajectory traj = integrate(GlvSystem::of(model), initial, solver, output_times);
    traj.tag = ModelTag::detailed;
    return traj;
}

Trajectory integrate(const ReducedModel& model, const Eigen::VectorXd& initial, const SolverConfig& solver,
                     std::span<const double> output_times) {
    return integrate(GlvSystem::of(model), initial, solver, output_times);
}

Trajectory integrate(const EnrichedModel& model, const Eigen::VectorXd& initial, const SolverConfig& solver,
                     std::span<const double> output_times) {
    check_dimension(model.size(), initial.size());
    check_params(model.reduced, model.params);
    const Eigen::VectorXd& r = model.reduced.growth.values();
    const Eigen::MatrixXd& a = model.reduced.interactions.entries();
    return detail::integrate_dopri45(
        [&](const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
            enriched_into(r, a, model.params, model.mode, x, dx);
        },
        initial, solver, output_times, ModelTag::enriched);
}

}  // namespace glvd
