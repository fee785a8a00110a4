#include "glvd/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "glvd/error.hpp"
#include "glvd/parallel.hpp"
#include "glvd/rng.hpp"

namespace glvd {

PriorSpec PriorSpec::uniform(int dimension, double lower, double upper) {
    PriorSpec p{Eigen::VectorXd::Constant(dimension, lower), Eigen::VectorXd::Constant(dimension, upper)};
    p.validate();
    return p;
}

void PriorSpec::validate() const {
    if (lower.size() != upper.size() || lower.size() == 0) {
        throw ConfigError("prior bounds must be non-empty and of equal length");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower(i) < upper(i)) || !(upper(i) <= 0.0) || !std::isfinite(lower(i))) {
            throw ConfigError(fmt::format("prior bounds for parameter {} must satisfy lower < upper <= 0", i + 1));
        }
    }
}

bool PriorSpec::contains(const Eigen::VectorXd& theta) const {
    if (theta.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        if (!(theta(i) > lower(i) && theta(i) < upper(i))) return false;
    }
    return true;
}

double log_prior(const Eigen::VectorXd& theta, const PriorSpec& prior) {
    if (theta.size() != prior.dimension()) {
        throw ArgumentError(fmt::format("theta has length {}, prior has {}", theta.size(), prior.dimension()));
    }
    if (!prior.contains(theta)) return kNegInf;
    return -(prior.upper - prior.lower).array().log().sum();
}

CalibrationProblem::CalibrationProblem(ReducedModel reduced, ObservationSet observations, SolverConfig solver,
                                       EnrichedMode mode, std::size_t cache_capacity)
    : reduced_(std::move(reduced)),
      observations_(std::move(observations)),
      solver_(solver),
      mode_(mode),
      cache_capacity_(cache_capacity) {
    solver_.validate();
    if (observations_.species() != reduced_.size()) {
        throw ArgumentError(fmt::format("observations cover {} species, reduced model has {}",
                                        observations_.species(), reduced_.size()));
    }
    if (observations_.scenarios().empty()) throw ArgumentError("calibration needs at least one scenario");
}

std::vector<Trajectory> CalibrationProblem::simulate(const Eigen::VectorXd& theta) const {
    EnrichedModel model{reduced_, DiscrepancyParams::from_theta(theta), mode_};
    model.params.validate();
    std::vector<Trajectory> out;
    out.reserve(observations_.scenarios().size());
    for (const Scenario& sc : observations_.scenarios()) {
        out.push_back(integrate(model, sc.initial, solver_, observations_.times()));
    }
    return out;
}

double CalibrationProblem::compute(const Eigen::VectorXd& theta) const {
    if (theta.size() != dimension()) {
        throw ArgumentError(fmt::format("theta has length {}, expected {}", theta.size(), dimension()));
    }
    if ((theta.array() > 0.0).any() || !theta.allFinite()) return kNegInf;

    std::vector<Trajectory> trajectories;
    try {
        trajectories = simulate(theta);
    } catch (const NumericalError&) {
        return kNegInf;
    }

    const double sigma2 = observations_.sigma2();
    const double norm = -0.5 * std::log(2.0 * std::numbers::pi * sigma2);
    const int s = observations_.species();
    const std::size_t T = observations_.times().size();
    double ll = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        for (std::size_t j = 0; j < T; ++j) {
            for (int i = 0; i < s; ++i) {
                const double y = observations_.entries()[n++].value;
                const double r = y - trajectories[k].states(static_cast<Eigen::Index>(j), i);
                ll += norm - 0.5 * r * r / sigma2;
            }
        }
    }
    return std::isfinite(ll) ? ll : kNegInf;
}

double CalibrationProblem::log_likelihood(const Eigen::VectorXd& theta) const {
    std::vector<double> key(theta.data(), theta.data() + theta.size());
    {
        std::lock_guard lock(mutex_);
        ++evaluations_;
        if (auto it = cache_.find(key); it != cache_.end()) {
            ++hits_;
            return it->second;
        }
    }
    const double value = compute(theta);
    if (cache_capacity_ > 0) {
        std::lock_guard lock(mutex_);
        if (cache_.emplace(key, value).second) {
            cache_order_.push_back(std::move(key));
            if (cache_order_.size() > cache_capacity_) {
                cache_.erase(cache_order_.front());
                cache_order_.pop_front();
            }
        }
    }
    return value;
}

std::size_t CalibrationProblem::cache_hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::size_t CalibrationProblem::evaluations() const {
    std::lock_guard lock(mutex_);
    return evaluations_;
}

double log_likelihood(const Eigen::VectorXd& theta, const ReducedModel& reduced, const ObservationSet& calibration,
                      const SolverConfig& solver, EnrichedMode mode) {
    return CalibrationProblem(reduced, calibration, solver, mode, 0).log_likelihood(theta);
}

LogDensity make_log_posterior(const CalibrationProblem& problem, const PriorSpec& prior) {
    if (prior.dimension() != problem.dimension()) {
        throw ArgumentError("prior dimension does not match the calibration problem");
    }
    return [&problem, prior](const Eigen::VectorXd& theta) {
        const double lp = log_prior(theta, prior);
        if (!std::isfinite(lp)) return kNegInf;
        return lp + problem.log_likelihood(theta);
    };
}

void DramConfig::validate() const {
    if (iterations == 0) throw ConfigError("chain length must be positive");
    if (burn_in >= iterations) throw ConfigError("burn-in must be shorter than the chain");
    if (thin == 0) throw ConfigError("thinning must be positive");
    if (!(dr_scale > 0.0 && dr_scale < 1.0)) throw ConfigError("delayed-rejection scale must be in (0, 1)");
    if (adapt_interval == 0) throw ConfigError("adaptation interval must be positive");
    if (!(regularization >= 0.0)) throw ConfigError("regularization must be non-negative");
    if (stall_window == 0) throw ConfigError("stall window must be positive");
}

double AcceptanceStats::stage1_rate() const noexcept {
    return stage1_proposals ? static_cast<double>(stage1_accepted) / static_cast<double>(stage1_proposals) : 0.0;
}
double AcceptanceStats::stage2_rate() const noexcept {
    return stage2_proposals ? static_cast<double>(stage2_accepted) / static_cast<double>(stage2_proposals) : 0.0;
}
double AcceptanceStats::overall_rate() const noexcept {
    return iterations ? static_cast<double>(stage1_accepted + stage2_accepted) / static_cast<double>(iterations)
                      : 0.0;
}

Eigen::VectorXd PosteriorChain::mean() const {
    if (samples.rows() == 0) throw ArgumentError("empty chain");
    return samples.colwise().mean().transpose();
}

Eigen::MatrixXd PosteriorChain::covariance() const {
    if (samples.rows() < 2) throw ArgumentError("covariance needs at least two samples");
    const Eigen::MatrixXd centered = samples.rowwise() - samples.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
}

double PosteriorChain::quantile(int parameter, double q) const {
    if (parameter < 0 || parameter >= dimension()) throw ArgumentError("parameter index out of range");
    const Eigen::VectorXd col = samples.col(parameter);
    return sample_quantile(std::vector<double>(col.data(), col.data() + col.size()), q);
}

namespace {

// Running mean and covariance of every chain state (Welford).
class RunningMoments {
public:
    explicit RunningMoments(Eigen::Index d) : mean_(Eigen::VectorXd::Zero(d)), m2_(Eigen::MatrixXd::Zero(d, d)) {}

    void add(const Eigen::VectorXd& x) {
        ++n_;
        const Eigen::VectorXd delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_.noalias() += delta * (x - mean_).transpose();
    }

    std::size_t count() const noexcept { return n_; }
    Eigen::MatrixXd covariance() const { return m2_ / static_cast<double>(n_ > 1 ? n_ - 1 : 1); }

private:
    std::size_t n_ = 0;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd m2_;
};

// log min(1, exp(x)) with x possibly -inf or NaN.
double log_accept(double x) { return std::isnan(x) ? kNegInf : std::min(0.0, x); }

}  // namespace

PosteriorChain run_dram(const LogDensity& target, const Eigen::VectorXd& initial, const DramConfig& config) {
    config.validate();
    const Eigen::Index d = initial.size();
    if (d == 0) throw ArgumentError("empty parameter vector");

    Eigen::MatrixXd cov = config.initial_covariance.size() == 0 ? Eigen::MatrixXd(0.01 * Eigen::MatrixXd::Identity(d, d))
                                                                 : config.initial_covariance;
    if (cov.rows() != d || cov.cols() != d) throw ConfigError("initial proposal covariance has the wrong shape");
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw ConfigError("initial proposal covariance is not positive definite");
    Eigen::MatrixXd chol = llt.matrixL();

    const double sd = config.adapt_scale > 0.0 ? config.adapt_scale : 2.4 * 2.4 / static_cast<double>(d);

    Eigen::VectorXd current = initial;
    double lp_current = target(current);
    if (!std::isfinite(lp_current)) {
        throw InitializationError("target density is not finite at the initial point");
    }

    Rng rng = make_rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    auto draw_normal = [&] {
        Eigen::VectorXd z(d);
        for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
        return z;
    };

    PosteriorChain chain;
    chain.burn_in = config.burn_in;
    chain.thin = config.thin;
    chain.seed = config.seed;
    const std::size_t retained = (config.iterations - config.burn_in) / config.thin;
    chain.samples.resize(static_cast<Eigen::Index>(retained), d);
    chain.log_posterior.reserve(retained);

    RunningMoments moments(d);
    AcceptanceStats& acc = chain.acceptance;
    std::size_t last_accept = 0;
    Eigen::Index row = 0;

    for (std::size_t it = 1; it <= config.iterations; ++it) {
        ++acc.iterations;
        ++acc.stage1_proposals;
        const Eigen::VectorXd z1 = draw_normal();
        const Eigen::VectorXd y1 = current + chol * z1;
        const double lp1 = target(y1);
        const double log_a1 = log_accept(lp1 - lp_current);
        bool accepted = false;

        if (std::log(uniform(rng)) < log_a1) {
            current = y1;
            lp_current = lp1;
            ++acc.stage1_accepted;
            accepted = true;
        } else if (config.delayed_rejection) {
            ++acc.stage2_proposals;
            const Eigen::VectorXd z2 = draw_normal();
            const Eigen::VectorXd y2 = current + config.dr_scale * (chol * z2);
            const double lp2 = target(y2);
            if (std::isfinite(lp2)) {
                // alpha2 = pi(y2) q1(y2, y1) (1 - alpha1(y2, y1)) / [pi(x) q1(x, y1) (1 - alpha1(x, y1))]
                const double log_a1_rev = log_accept(lp1 - lp2);
                const double one_minus_rev = -std::expm1(log_a1_rev);
                const double one_minus_fwd = -std::expm1(log_a1);
                if (one_minus_rev > 0.0 && one_minus_fwd > 0.0) {
                    const Eigen::VectorXd w_rev = llt.matrixL().solve(y1 - y2);
                    const Eigen::VectorXd w_fwd = z1;  // chol^-1 (y1 - x)
                    const double log_q_ratio = -0.5 * (w_rev.squaredNorm() - w_fwd.squaredNorm());
                    const double log_a2 = lp2 - lp_current + log_q_ratio + std::log(one_minus_rev) -
                                          std::log(one_minus_fwd);
                    if (std::log(uniform(rng)) < log_accept(log_a2)) {
                        current = y2;
                        lp_current = lp2;
                        ++acc.stage2_accepted;
                        accepted = true;
                    }
                }
            }
        }

        if (accepted) {
            last_accept = it;
        } else if (!chain.stalled && it - last_accept >= config.stall_window) {
            chain.stalled = true;
            chain.warnings.push_back(
                fmt::format("no accepted proposal in {} iterations (at iteration {})", config.stall_window, it));
        }

        moments.add(current);
        if (config.adapt && it >= config.adapt_start && (it - config.adapt_start) % config.adapt_interval == 0) {
            Eigen::MatrixXd proposal = sd * moments.covariance();
            proposal.diagonal().array() += sd * config.regularization;
            Eigen::LLT<Eigen::MatrixXd> candidate(proposal);
            if (candidate.info() == Eigen::Success) {
                cov = std::move(proposal);
                llt = std::move(candidate);
                chol = llt.matrixL();
            }
        }

        if (it > config.burn_in && (it - config.burn_in) % config.thin == 0 && row < chain.samples.rows()) {
            chain.samples.row(row++) = current.transpose();
            chain.log_posterior.push_back(lp_current);
        }
    }
    chain.final_covariance = cov;
    return chain;
}

Eigen::VectorXd sample_initial_theta(int dimension, double low, double high, std::uint64_t seed) {
    if (!(low < high)) throw ArgumentError("initial-theta range must satisfy low < high");
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> uni(low, high);
    Eigen::VectorXd theta(dimension);
    for (int i = 0; i < dimension; ++i) theta(i) = uni(rng);
    return theta;
}

Eigen::Index PredictiveEnsemble::coordinate(int species_index, int time_index, int scenario_pos) const {
    return (static_cast<Eigen::Index>(scenario_pos) * static_cast<Eigen::Index>(times.size()) + time_index) * species +
           species_index;
}

PredictiveEnsemble posterior_predictive(const PosteriorChain& chain, const ReducedModel& reduced,
                                        std::span<const Scenario> scenarios, std::span<const double> times,
                                        std::size_t n_draws, double sigma2, const SolverConfig& solver,
                                        EnrichedMode mode, std::uint64_t seed, std::size_t workers) {
    if (chain.size() == 0) throw ArgumentError("posterior chain is empty");
    if (n_draws == 0) throw ArgumentError("need at least one predictive draw");
    if (scenarios.empty()) throw ArgumentError("no scenarios to predict");
    if (!(sigma2 > 0.0)) throw ArgumentError("noise variance must be positive");
    if (chain.dimension() != 2 * reduced.size()) throw ArgumentError("chain dimension does not match the model");

    const int s = reduced.size();
    const Eigen::Index T = static_cast<Eigen::Index>(times.size());
    const Eigen::Index coords = static_cast<Eigen::Index>(scenarios.size()) * T * s;
    const double sd = std::sqrt(sigma2);

    // Evenly spaced rows of the chain.
    std::vector<Eigen::Index> rows(n_draws);
    for (std::size_t m = 0; m < n_draws; ++m) {
        rows[m] = static_cast<Eigen::Index>((m * chain.size()) / n_draws);
    }

    Eigen::MatrixXd outputs(static_cast<Eigen::Index>(n_draws), coords);
    Eigen::MatrixXd replicates(static_cast<Eigen::Index>(n_draws), coords);
    std::vector<char> ok(n_draws, 1);

    parallel_for(n_draws, workers, [&](std::size_t m) {
        const Eigen::VectorXd theta = chain.samples.row(rows[m]).transpose();
        EnrichedModel model{reduced, DiscrepancyParams::from_theta(theta), mode};
        Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(m)}));
        std::normal_distribution<double> noise(0.0, sd);
        try {
            for (std::size_t k = 0; k < scenarios.size(); ++k) {
                const Trajectory traj = integrate(model, scenarios[k].initial, solver, times);
                for (Eigen::Index j = 0; j < T; ++j) {
                    for (int i = 0; i < s; ++i) {
                        const Eigen::Index c = (static_cast<Eigen::Index>(k) * T + j) * s + i;
                        const double y = traj.states(j, i);
                        outputs(static_cast<Eigen::Index>(m), c) = y;
                        replicates(static_cast<Eigen::Index>(m), c) = y + noise(rng);
                    }
                }
            }
        } catch (const NumericalError&) {
            ok[m] = 0;
        }
    });

    PredictiveEnsemble ens;
    ens.species = s;
    ens.times.assign(times.begin(), times.end());
    for (const Scenario& sc : scenarios) {
        ens.scenario_ids.push_back(sc.id);
        ens.partitions.push_back(sc.partition);
    }
    const std::size_t kept = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
    ens.dropped = n_draws - kept;
    if (static_cast<double>(ens.dropped) > 0.01 * static_cast<double>(n_draws)) {
        throw NumericalError(
            fmt::format("{} of {} posterior predictive draws failed to integrate", ens.dropped, n_draws));
    }
    ens.outputs.resize(static_cast<Eigen::Index>(kept), coords);
    ens.replicates.resize(static_cast<Eigen::Index>(kept), coords);
    Eigen::Index r = 0;
    for (std::size_t m = 0; m < n_draws; ++m) {
        if (!ok[m]) continue;
        ens.outputs.row(r) = outputs.row(static_cast<Eigen::Index>(m));
        ens.replicates.row(r) = replicates.row(static_cast<Eigen::Index>(m));
        ens.draw_indices.push_back(rows[m]);
        ++r;
    }
    return ens;
}

double sample_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ArgumentError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile level must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Eigen::MatrixXd quantile_bands(const Eigen::MatrixXd& ensemble, std::span<const double> probs) {
    if (ensemble.rows() == 0) throw ArgumentError("quantile bands of an empty ensemble");
    Eigen::MatrixXd out(ensemble.cols(), static_cast<Eigen::Index>(probs.size()));
    for (Eigen::Index c = 0; c < ensemble.cols(); ++c) {
        std::vector<double> col(static_cast<std::size_t>(ensemble.rows()));
        for (Eigen::Index r = 0; r < ensemble.rows(); ++r) col[static_cast<std::size_t>(r)] = ensemble(r, c);
        std::sort(col.begin(), col.end());
        for (std::size_t p = 0; p < probs.size(); ++p) {
            const double h = probs[p] * static_cast<double>(col.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(h));
            const std::size_t hi = std::min(lo + 1, col.size() - 1);
            out(c, static_cast<Eigen::Index>(p)) = col[lo] + (h - static_cast<double>(lo)) * (col[hi] - col[lo]);
        }
    }
    return out;
}

}  // namespace glvd
