#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "glvd/error.hpp"
#include "glvd/rng.hpp"
#include "glvd/validation.hpp"

using namespace glvd;

namespace {

std::vector<double> normal_sample(std::size_t n, double mu, double sigma, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> d(mu, sigma);
    std::vector<double> out(n);
    for (double& v : out) v = d(rng);
    return out;
}

GammaReport report_of(std::vector<double> gammas, Partition p, int realization = 0) {
    GammaReport r;
    r.detailed_size = 10;
    r.reduced_size = 4;
    r.realization = realization;
    for (double g : gammas) {
        GammaEntry e;
        e.partition = p;
        e.gamma = g;
        r.entries.push_back(e);
    }
    return r;
}

}  // namespace

TEST_SUITE("validation") {

TEST_CASE("gamma at the mode is near one") {
    const auto e = normal_sample(10000, 2.0, 0.5, 1);
    CHECK(gamma_value(2.0, e) > 0.95);
}

TEST_CASE("gamma at the 1.96 sigma point matches the analytic tail") {
    for (std::uint64_t seed : {2u, 3u, 4u}) {
        const auto e = normal_sample(10000, -1.0, 3.0, seed);
        const double g = gamma_value(-1.0 + 1.96 * 3.0, e);
        CHECK(std::abs(g - 0.05) <= 0.01);
        CHECK(std::abs(gamma_value(-1.0 - 1.96 * 3.0, e) - 0.05) <= 0.01);
    }
}

TEST_CASE("gamma far outside the ensemble is zero") {
    const auto e = normal_sample(2000, 0.0, 1.0, 5);
    CHECK(gamma_value(50.0, e) == 0.0);
    CHECK(gamma_value(-50.0, e) == 0.0);
}

TEST_CASE("gamma is in the unit interval and invariant under affine maps") {
    const auto e = normal_sample(3000, 0.3, 0.2, 6);
    Rng rng = make_rng(7);
    std::uniform_real_distribution<double> u(-0.5, 1.1);
    for (int k = 0; k < 50; ++k) {
        const double y = u(rng);
        const double g = gamma_value(y, e);
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
        for (auto [a, b] : {std::pair{2.5, -7.0}, std::pair{-0.01, 3.0}}) {
            std::vector<double> mapped(e.size());
            for (std::size_t i = 0; i < e.size(); ++i) mapped[i] = a * e[i] + b;
            // ties can flip at rounding level; allow two members
            CHECK(std::abs(gamma_value(a * y + b, mapped) - g) <= 2.0 / 3000.0);
        }
    }
}

TEST_CASE("gamma of a bimodal ensemble sees the trough") {
    auto e = normal_sample(5000, -3.0, 0.5, 8);
    const auto f = normal_sample(5000, 3.0, 0.5, 9);
    e.insert(e.end(), f.begin(), f.end());
    // the midpoint sits between the modes and is much less likely than either
    CHECK(gamma_value(0.0, e) < 0.01);
    CHECK(gamma_value(3.0, e) > 0.9);
}

TEST_CASE("degenerate ensemble") {
    const std::vector<double> atom(200, 1.5);
    CHECK(is_degenerate(atom));
    CHECK(gamma_value(1.5, atom) == 1.0);
    CHECK(gamma_value(1.6, atom) == 0.0);
    CHECK_THROWS_AS(gamma_value(0.0, std::vector<double>(99, 1.0)), ArgumentError);
}

TEST_CASE("KDE and bandwidth") {
    const std::vector<double> x{-1.0, 0.0, 1.0};
    CHECK(silverman_bandwidth(x) == doctest::Approx(1.06 * 1.0 * std::pow(3.0, -0.2)));
    const double h = 0.5;
    const double expected = (std::exp(-0.5 * 4.0) + 1.0 + std::exp(-0.5 * 4.0)) / (3.0 * h * std::sqrt(2.0 * M_PI));
    CHECK(kde_density(x, h, 0.0) == doctest::Approx(expected));
    CHECK_THROWS_AS(kde_density(x, 0.0, 0.0), ArgumentError);
    CHECK_THROWS_AS(silverman_bandwidth(std::vector<double>{1.0}), ArgumentError);
}

TEST_CASE("f_gamma examples") {
    const std::array reports{report_of({0.01, 0.2, 0.5, 0.04}, Partition::calibration)};
    const FGammaRow row = f_gamma(reports, 0.05, std::nullopt);
    CHECK(row.fraction() == 0.5);
    CHECK(row.below == 2);
    CHECK(row.total == 4);
    CHECK(row.alpha() == 0.4);
    const std::array high{report_of({0.3, 0.06, 0.9}, Partition::validation)};
    CHECK(f_gamma(high, 0.05, std::nullopt).fraction() == 0.0);
    CHECK_THROWS_AS(f_gamma(reports, 0.0, std::nullopt), ArgumentError);
    CHECK_THROWS_AS(f_gamma(reports, 1.0, std::nullopt), ArgumentError);
    CHECK_THROWS_AS(f_gamma(reports, 0.05, Partition::validation), ArgumentError);
    CHECK_THROWS_AS(f_gamma(std::span<const GammaReport>{}, 0.05, std::nullopt), ArgumentError);
}

TEST_CASE("f_gamma partitions and counting identity") {
    Rng rng = make_rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<GammaReport> reports;
    for (int r = 0; r < 5; ++r) {
        std::vector<double> gc(40), gv(40);
        for (double& g : gc) g = u(rng);
        for (double& g : gv) g = u(rng) * 0.2;
        GammaReport rep = report_of(gc, Partition::calibration, r);
        const GammaReport v = report_of(gv, Partition::validation, r);
        rep.entries.insert(rep.entries.end(), v.entries.begin(), v.entries.end());
        reports.push_back(rep);
    }
    for (double tau : {0.01, 0.05, 0.5}) {
        const FGammaRow c = f_gamma(reports, tau, Partition::calibration);
        const FGammaRow v = f_gamma(reports, tau, Partition::validation);
        const FGammaRow all = f_gamma(reports, tau, std::nullopt);
        CHECK(c.total == 200);
        CHECK(c.below + v.below == all.below);
        CHECK(c.total + v.total == all.total);
        std::size_t at_or_above = 0;
        for (const auto& rep : reports) {
            for (const auto& e : rep.entries) at_or_above += e.gamma >= tau;
        }
        CHECK(all.below + at_or_above == all.total);
        CHECK(all.realizations == 5);
    }
}

TEST_CASE("relative complexity") {
    CHECK(relative_complexity(10, 4) == 8.0 / 90.0);
    CHECK(relative_complexity(10, 4) < 0.1);
    for (int S : {2, 5, 10, 20}) {
        CHECK(relative_complexity(S, S - 1) == doctest::Approx(2.0 * (S - 1) / (2.0 * S)));
    }
    for (int S : {10, 20, 50, 100}) {
        for (int s = 2; s < S; ++s) CHECK(relative_complexity(S, s) > relative_complexity(S, s - 1));
    }
    CHECK_THROWS_AS(relative_complexity(10, 0), ArgumentError);
    CHECK_THROWS_AS(relative_complexity(10, 10), ArgumentError);
}

}
