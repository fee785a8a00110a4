#pragma once

// Dormand-Prince 5(4) embedded pair with the standard FSAL error estimator
// and the fourth-order continuous extension (Hairer, Norsett & Wanner).

#include <algorithm>
#include <cmath>
#include <span>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "glvd/dynamics.hpp"
#include "glvd/error.hpp"

namespace glvd::detail {

namespace dp {
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                        a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dp

/// Clamps values in [-floor, 0) to zero; throws below -floor. Returns true if
/// anything was clamped.
inline bool enforce_non_negative(Eigen::Ref<Eigen::VectorXd> x, double floor, double t) {
    bool clamped = false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) < 0.0) {
            if (x(i) < -floor || !std::isfinite(x(i))) {
                throw NegativityError(
                    fmt::format("state component {} reached {} at t = {}", i + 1, x(i), t));
            }
            x(i) = 0.0;
            clamped = true;
        }
        if (!std::isfinite(x(i))) {
            throw NegativityError(fmt::format("state component {} is not finite at t = {}", i + 1, t));
        }
    }
    return clamped;
}

/// `rhs(x, dx)` writes dx/dt for the autonomous system at x.
template <class Rhs>
Trajectory integrate_dopri45(Rhs&& rhs, const Eigen::VectorXd& initial, const SolverConfig& cfg,
                             std::span<const double> output_times, ModelTag tag) {
    using namespace dp;
    cfg.validate();
    const Eigen::Index n = initial.size();
    const double tf = cfg.t_final;

    for (std::size_t i = 0; i < output_times.size(); ++i) {
        if (output_times[i] < 0.0 || output_times[i] > tf) {
            throw ArgumentError(fmt::format("output time {} outside [0, {}]", output_times[i], tf));
        }
        if (i > 0 && !(output_times[i] > output_times[i - 1])) {
            throw ArgumentError("output times must be strictly increasing");
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(initial(i) >= 0.0)) {
            throw ArgumentError(fmt::format("initial concentration {} is negative or NaN", i + 1));
        }
    }

    Trajectory traj;
    traj.tag = tag;
    traj.times.assign(output_times.begin(), output_times.end());
    traj.states.resize(static_cast<Eigen::Index>(output_times.size()), n);

    Eigen::VectorXd y = initial, y1(n), ytmp(n), err(n);
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    Eigen::VectorXd r1(n), r2(n), r3(n), r4(n), r5(n);
    Eigen::MatrixXd dense(n, static_cast<Eigen::Index>(output_times.size()));
    SolverStats& stats = traj.stats;

    auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
        rhs(x, dx);
        ++stats.rhs_evaluations;
    };

    std::size_t next_out = 0;
    while (next_out < output_times.size() && output_times[next_out] <= 0.0) {
        traj.states.row(static_cast<Eigen::Index>(next_out++)) = y.transpose();
    }
    if (next_out == output_times.size() && !output_times.empty()) return traj;

    eval(y, k1);

    auto scaled_norm = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& ref) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(ref(i));
            acc += (v(i) / sc) * (v(i) / sc);
        }
        return n > 0 ? std::sqrt(acc / static_cast<double>(n)) : 0.0;
    };

    // Initial step size heuristic.
    double h;
    {
        const double d0 = scaled_norm(y, y);
        const double d1n = scaled_norm(k1, y);
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h0 = std::min(h0, tf);
        ytmp = y + h0 * k1;
        eval(ytmp, k2);
        const double d2 = scaled_norm(k2 - k1, y) / h0;
        const double dmax = std::max(d1n, d2);
        const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
        h = std::min({100.0 * h0, h1, cfg.max_step, tf});
    }

    double t = 0.0;
    bool last_rejected = false;
    std::size_t steps = 0;
    while (t < tf) {
        if (++steps > cfg.max_steps) {
            throw StiffnessError(fmt::format("step budget of {} exhausted at t = {}", cfg.max_steps, t));
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            throw StiffnessError(fmt::format("step size underflow (h = {}) at t = {}", h, t));
        }
        h = std::min(h, cfg.max_step);
        if (t + 1.01 * h >= tf) h = tf - t;

        ytmp = y + h * a21 * k1;
        eval(ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        eval(ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        eval(ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        eval(ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        eval(ytmp, k6);
        y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        eval(y1, k7);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double en = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y(i)), std::abs(y1(i)));
            en += (err(i) / sc) * (err(i) / sc);
        }
        en = n > 0 ? std::sqrt(en / static_cast<double>(n)) : 0.0;
        if (!std::isfinite(en)) en = 1e10;

        // A step landing below the negativity floor is retried with a smaller
        // step; near-extinct species otherwise overshoot once the error
        // control relaxes to the absolute tolerance.
        bool overshoot = en <= 1.0 && y1.minCoeff() < -cfg.negativity_floor;
        std::size_t outputs_in_step = 0;
        if (en <= 1.0 && !overshoot) {
            const double t_new = (h == tf - t) ? tf : t + h;

            r1 = y;
            r2 = y1 - y;
            r3 = h * k1 - r2;
            r4 = r2 - h * k7 - r3;
            r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            for (std::size_t o = next_out; o < output_times.size() && output_times[o] <= t_new; ++o) {
                const double theta = (output_times[o] - t) / h;
                const double theta1 = 1.0 - theta;
                dense.col(static_cast<Eigen::Index>(outputs_in_step++)) =
                    r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
                if (dense.col(static_cast<Eigen::Index>(outputs_in_step - 1)).minCoeff() < -cfg.negativity_floor) {
                    overshoot = true;
                    break;
                }
            }
        }
        if (overshoot) {
            ++stats.rejected;
            if (h * 0.5 < 1e-14 * std::max(1.0, std::abs(t))) {
                Eigen::Index worst;
                y1.minCoeff(&worst);
                throw NegativityError(
                    fmt::format("state component {} reached {} at t = {}", worst + 1, y1(worst), t + h));
            }
            h *= 0.5;
            last_rejected = true;
            continue;
        }

        if (en <= 1.0) {
            const double t_new = (h == tf - t) ? tf : t + h;
            for (std::size_t o = 0; o < outputs_in_step; ++o) {
                ytmp = dense.col(static_cast<Eigen::Index>(o));
                enforce_non_negative(ytmp, cfg.negativity_floor, output_times[next_out]);
                traj.states.row(static_cast<Eigen::Index>(next_out++)) = ytmp.transpose();
            }

            ++stats.accepted;
            t = t_new;
            y.swap(y1);
            if (enforce_non_negative(y, cfg.negativity_floor, t)) {
                eval(y, k1);
            } else {
                k1.swap(k7);
            }
            if (next_out == output_times.size()) break;

            double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.2);
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
            h *= fac;
            last_rejected = false;
        } else {
            ++stats.rejected;
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            last_rejected = true;
        }
    }
    return traj;
}

}  // namespace glvd::detail
