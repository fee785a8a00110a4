#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace glvd {

/// Intrinsic growth rates r of a GLV system.
class GrowthRates {
public:
    GrowthRates() = default;
    explicit GrowthRates(Eigen::VectorXd values) : values_(std::move(values)) {}

    const Eigen::VectorXd& values() const noexcept { return values_; }
    int size() const noexcept { return static_cast<int>(values_.size()); }
    double operator[](int i) const { return values_(i); }

    bool operator==(const GrowthRates&) const = default;

private:
    Eigen::VectorXd values_;
};

/// Square interaction matrix A of a GLV system. Shape is checked on
/// construction; the sign/dominance structure is reported by check_stability.
class InteractionMatrix {
public:
    InteractionMatrix() = default;
    explicit InteractionMatrix(Eigen::MatrixXd entries);

    const Eigen::MatrixXd& entries() const noexcept { return entries_; }
    int size() const noexcept { return static_cast<int>(entries_.rows()); }
    double operator()(int i, int j) const { return entries_(i, j); }

    bool operator==(const InteractionMatrix& other) const { return entries_ == other.entries_; }

private:
    Eigen::MatrixXd entries_;
};

struct GenerationConfig {
    int species = 10;
    double sigma2_b = 1.0;  ///< variance of the normal underlying the off-diagonal lognormals
    double sigma2_c = 1.0;  ///< variance of the normal underlying the diagonal surplus
    std::uint64_t seed = 0;

    /// Throws ConfigError when S < 2 or a variance is not positive.
    void validate() const;

    bool operator==(const GenerationConfig&) const = default;
};

/// The full S-species model D = {A_hat, r_hat}.
struct DetailedModel {
    GrowthRates growth;
    InteractionMatrix interactions;
    GenerationConfig config;

    int size() const noexcept { return growth.size(); }
};

/// The s-species model R = {A, r}, the leading block of a detailed model.
struct ReducedModel {
    int parent_size = 0;
    GrowthRates growth;
    InteractionMatrix interactions;

    int size() const noexcept { return growth.size(); }
};

/// Raw random draws consumed by the generator. Exposed so the assembly step
/// can be checked against hand-traced values.
struct GenerationDraws {
    Eigen::MatrixXd offdiagonal;   ///< B_ij for i < j; lower triangle and diagonal ignored
    Eigen::VectorXd diag_surplus;  ///< the lognormal part of each C_ii
};

GenerationDraws sample_generation_draws(const GenerationConfig& config);

/// Builds A_hat = -(B + C), r_hat = max_i C_ii * 1 from explicit draws.
DetailedModel assemble_detailed(const GenerationConfig& config, const GenerationDraws& draws);

/// Random detailed model; a pure function of config (including its seed).
DetailedModel generate_detailed(const GenerationConfig& config);

/// Leading s x s block and first s growth rates. Requires 1 <= s < S.
ReducedModel subsample_reduced(const DetailedModel& detailed, int s);

/// Further reduction of a reduced model; identical to subsampling the parent at s.
ReducedModel subsample_reduced(const ReducedModel& reduced, int s);

struct StabilityReport {
    bool symmetric = true;
    bool non_positive = true;
    bool diagonally_dominant = true;
    int first_asymmetric_row = -1;
    int first_positive_row = -1;
    int first_non_dominant_row = -1;

    bool ok() const noexcept { return symmetric && non_positive && diagonally_dominant; }
    std::string describe() const;
};

StabilityReport check_stability(const InteractionMatrix& matrix);
StabilityReport check_stability(const DetailedModel& model);
StabilityReport check_stability(const ReducedModel& model);

}  // namespace glvd
