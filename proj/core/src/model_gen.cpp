#include "glvd/model_gen.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "glvd/error.hpp"
#include "glvd/rng.hpp"

namespace glvd {

InteractionMatrix::InteractionMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) {
        throw ArgumentError(fmt::format("interaction matrix must be square, got {}x{}",
                                        entries_.rows(), entries_.cols()));
    }
}

void GenerationConfig::validate() const {
    if (species < 2) {
        throw ConfigError(fmt::format("detailed model needs S >= 2, got {}", species));
    }
    if (!(sigma2_b > 0.0) || !std::isfinite(sigma2_b)) {
        throw ConfigError(fmt::format("sigma2_B must be positive, got {}", sigma2_b));
    }
    if (!(sigma2_c > 0.0) || !std::isfinite(sigma2_c)) {
        throw ConfigError(fmt::format("sigma2_C must be positive, got {}", sigma2_c));
    }
}

GenerationDraws sample_generation_draws(const GenerationConfig& config) {
    config.validate();
    const int n = config.species;
    Rng rng = make_rng(config.seed);
    // lognormal_distribution takes the underlying normal's standard deviation.
    std::lognormal_distribution<double> offdiag(0.0, std::sqrt(config.sigma2_b));
    std::lognormal_distribution<double> surplus(0.0, std::sqrt(config.sigma2_c));

    GenerationDraws draws;
    draws.offdiagonal = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            draws.offdiagonal(i, j) = offdiag(rng);
        }
    }
    draws.diag_surplus.resize(n);
    for (int i = 0; i < n; ++i) {
        draws.diag_surplus(i) = surplus(rng);
    }
    return draws;
}

DetailedModel assemble_detailed(const GenerationConfig& config, const GenerationDraws& draws) {
    config.validate();
    const int n = config.species;
    if (draws.offdiagonal.rows() != n || draws.offdiagonal.cols() != n || draws.diag_surplus.size() != n) {
        throw ArgumentError("generation draws do not match the configured species count");
    }

    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            b(i, j) = draws.offdiagonal(i, j);
            b(j, i) = b(i, j);
        }
    }

    // C_ii = surplus_i + sum_{k != i} B_ki, so |a_ii| exceeds the off-diagonal row sum by surplus_i.
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) {
        double column_sum = 0.0;
        for (int k = 0; k < n; ++k) {
            if (k != i) column_sum += b(k, i);
        }
        c(i) = draws.diag_surplus(i) + column_sum;
    }

    Eigen::MatrixXd a = -b;
    a.diagonal() = -c;

    DetailedModel model;
    model.growth = GrowthRates(Eigen::VectorXd::Constant(n, c.maxCoeff()));
    model.interactions = InteractionMatrix(std::move(a));
    model.config = config;
    return model;
}

DetailedModel generate_detailed(const GenerationConfig& config) {
    return assemble_detailed(config, sample_generation_draws(config));
}

ReducedModel subsample_reduced(const DetailedModel& detailed, int s) {
    const int n = detailed.size();
    if (s < 1 || s >= n) {
        throw ArgumentError(fmt::format("reduced size must satisfy 1 <= s < {}, got {}", n, s));
    }
    ReducedModel reduced;
    reduced.parent_size = n;
    reduced.growth = GrowthRates(detailed.growth.values().head(s));
    reduced.interactions = InteractionMatrix(detailed.interactions.entries().topLeftCorner(s, s));
    return reduced;
}

ReducedModel subsample_reduced(const ReducedModel& reduced, int s) {
    const int n = reduced.size();
    if (s < 1 || s >= n) {
        throw ArgumentError(fmt::format("reduced size must satisfy 1 <= s < {}, got {}", n, s));
    }
    ReducedModel out;
    out.parent_size = reduced.parent_size;
    out.growth = GrowthRates(reduced.growth.values().head(s));
    out.interactions = InteractionMatrix(reduced.interactions.entries().topLeftCorner(s, s));
    return out;
}

StabilityReport check_stability(const InteractionMatrix& matrix) {
    const Eigen::MatrixXd& a = matrix.entries();
    const int n = matrix.size();
    StabilityReport report;
    for (int i = 0; i < n; ++i) {
        double off = 0.0;
        for (int k = 0; k < n; ++k) {
            if (a(i, k) != a(k, i) && report.symmetric) {
                report.symmetric = false;
                report.first_asymmetric_row = i;
            }
            if (!(a(i, k) <= 0.0) && report.non_positive) {
                report.non_positive = false;
                report.first_positive_row = i;
            }
            if (k != i) off += std::abs(a(i, k));
        }
        if (!(std::abs(a(i, i)) > off) && report.diagonally_dominant) {
            report.diagonally_dominant = false;
            report.first_non_dominant_row = i;
        }
    }
    return report;
}

StabilityReport check_stability(const DetailedModel& model) { return check_stability(model.interactions); }
StabilityReport check_stability(const ReducedModel& model) { return check_stability(model.interactions); }

std::string StabilityReport::describe() const {
    if (ok()) return "symmetric, non-positive, strictly diagonally dominant";
    std::string out;
    auto append = [&out](const std::string& s) {
        if (!out.empty()) out += "; ";
        out += s;
    };
    if (!symmetric) append(fmt::format("not symmetric (row {})", first_asymmetric_row + 1));
    if (!non_positive) append(fmt::format("positive entry (row {})", first_positive_row + 1));
    if (!diagonally_dominant) append(fmt::format("not strictly diagonally dominant (row {})", first_non_dominant_row + 1));
    return out;
}

}  // namespace glvd
