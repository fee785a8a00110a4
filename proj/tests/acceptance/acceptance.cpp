// Acceptance checks, one PASS/FAIL line per criterion.
// Usage: glvd_acceptance [--scratch DIR] [--only N[,N...]]

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "glvd/error.hpp"
#include "glvd/experiment.hpp"
#include "glvd/rng.hpp"

using namespace glvd;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::map<std::string, std::string> csv_files(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") {
            out[fs::relative(e.path(), root).generic_string()] = read_text(e.path());
        }
    }
    return out;
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index k) {
    return {m.col(k).data(), m.col(k).data() + m.rows()};
}

// 1. structural properties of generated and reduced models
Outcome structural() {
    const auto t0 = Clock::now();
    std::size_t models = 0, bad = 0, bad_reduced = 0;
    for (int S : {5, 10, 20}) {
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            const DetailedModel d = generate_detailed({.species = S, .seed = derive_seed(seed, {static_cast<std::uint64_t>(S)})});
            ++models;
            const StabilityReport rep = check_stability(d);
            if (!(rep.symmetric && rep.non_positive && rep.diagonally_dominant)) ++bad;
            for (int s = 1; s < S; ++s) {
                const ReducedModel r = subsample_reduced(d, s);
                if (r.interactions.entries() != d.interactions.entries().topLeftCorner(s, s) ||
                    r.growth.values() != d.growth.values().head(s)) {
                    ++bad_reduced;
                }
            }
        }
    }
    const double el = seconds_since(t0);
    return {bad == 0 && bad_reduced == 0 && el < 10.0,
            fmt::format("{} models, {} structural violations, {} reduction mismatches, {:.2f} s", models, bad,
                        bad_reduced, el)};
}

// 2. solver against the logistic closed form, and delta = 0 against the reduced model
Outcome solver_oracle() {
    const SolverConfig cfg;
    const GlvSystem logistic{Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Constant(1, 1, -1.0)};
    const std::vector<double> t_end{10.0};
    const Trajectory tr = integrate(logistic, Eigen::VectorXd::Constant(1, 0.5), cfg, t_end);
    const double exact = 2.0 / (1.0 + (2.0 / 0.5 - 1.0) * std::exp(-20.0));
    const double err = std::abs(tr.states(0, 0) - exact);

    const std::vector<double> times = uniform_observation_times(cfg.t_final, 10);
    double worst = 0.0;
    for (std::uint64_t m = 0; m < 100; ++m) {
        const DetailedModel d = generate_detailed({.species = 10, .seed = derive_seed(77, {m})});
        const ReducedModel r = subsample_reduced(d, 4);
        const auto sc = sample_scenarios(2, 1, 4, 10, {}, derive_seed(78, {m}));
        for (const Scenario& s : sc) {
            const Trajectory a = integrate(r, s.initial, cfg, times);
            for (EnrichedMode mode : {EnrichedMode::explicit_surrogate, EnrichedMode::implicit}) {
                const Trajectory b = integrate(EnrichedModel{r, DiscrepancyParams::zero(4), mode}, s.initial, cfg, times);
                const Eigen::ArrayXXd tol = 10.0 * (cfg.rel_tol * a.states.array().abs() + cfg.abs_tol);
                worst = std::max(worst, ((a.states - b.states).array().abs() / tol).maxCoeff());
            }
        }
    }
    return {err < 1e-6 && worst <= 1.0,
            fmt::format("logistic error at t=10 {:.2e}; delta=0 worst deviation {:.3f} of 10x tolerance", err, worst)};
}

// 3. implicit-mode algebra
Outcome implicit_algebra() {
    Rng rng = make_rng(31);
    std::uniform_real_distribution<double> uc(-10.0, 10.0), ud(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double c = uc(rng);
        const double d1 = -ud(rng);  // (-1, 0]
        const double v = solve_implicit_rate(c, d1);
        worst = std::max(worst, std::abs(v - (c + d1 * std::abs(v))));
    }
    std::uniform_real_distribution<double> neg_c(-10.0, -1e-6), deep(-5.0, -1.0);
    int raised = 0;
    for (int k = 0; k < 1000; ++k) {
        try {
            solve_implicit_rate(neg_c(rng), k == 0 ? -1.0 : deep(rng));
        } catch (const NoSolutionError&) {
            ++raised;
        }
    }
    return {worst < 1e-12 && raised == 1000,
            fmt::format("max residual {:.2e} over 1e4 cases; no-solution raised {}/1000", worst, raised)};
}

// 4. DRAM on an analytic 2-d Gaussian
Outcome mcmc_gaussian() {
    const Eigen::Vector2d mu(1.0, -2.0);
    Eigen::Matrix2d sigma;
    sigma << 1.0, 0.6, 0.6, 2.0;
    const Eigen::Matrix2d prec = sigma.inverse();
    const LogDensity target = [&](const Eigen::VectorXd& x) {
        const Eigen::Vector2d d = x - mu;
        return -0.5 * d.dot(prec * d);
    };
    DramConfig cfg;
    cfg.iterations = 100000;
    cfg.burn_in = 10000;
    cfg.seed = 4;
    cfg.initial_covariance = 0.25 * Eigen::MatrixXd::Identity(2, 2);
    const auto t0 = Clock::now();
    const PosteriorChain ch = run_dram(target, Eigen::Vector2d(0.0, 0.0), cfg);
    const double el = seconds_since(t0);
    const double mean_err = (ch.mean() - mu).cwiseAbs().maxCoeff();
    const double cov_err = ((ch.covariance() - sigma).array().abs() / sigma.array().abs()).maxCoeff();
    return {mean_err < 0.05 && cov_err < 0.10 && el < 60.0,
            fmt::format("mean error {:.4f}, worst relative covariance error {:.3f}, {:.1f} s", mean_err, cov_err, el)};
}

// 5. self-consistency: data from the enriched model at a known theta
Outcome self_consistency() {
    const ExperimentConfig c;
    const int S = 10, s = 4, d = 2 * s, reps = 100;
    const auto times = uniform_observation_times(c.solver.t_final, c.observation_count);
    std::vector<int> covered(d, 0);
    int joint = 0, failed = 0;
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) {
        try {
            const RunSeeds seeds = run_seeds(1000, r, s);
            GenerationConfig g = c.generation;
            g.species = S;
            g.seed = seeds.model;
            const ReducedModel red = subsample_reduced(generate_detailed(g), s);
            Rng rng = make_rng(seeds.truth);
            std::uniform_real_distribution<double> u0(c.truth_delta0_low, c.truth_delta0_high),
                u1(c.truth_delta1_low, c.truth_delta1_high);
            DiscrepancyParams p{Eigen::VectorXd(s), Eigen::VectorXd(s)};
            for (int i = 0; i < s; ++i) {
                p.delta0(i) = u0(rng);
                p.delta1(i) = u1(rng);
            }
            const auto sc = sample_scenarios(c.n_calibration + c.n_validation, c.n_calibration, s, S, c.ic_range,
                                             seeds.scenarios);
            const ObservationSet obs = synthesize_observations(TruthModel{EnrichedModel{red, p, c.mode}}, s, sc, times,
                                                               c.sigma2_eps, c.solver, seeds.noise);
            const CalibrationProblem prob(red, obs.restrict(Partition::calibration), c.solver, c.mode);
            DramConfig dc = c.dram;
            dc.seed = seeds.chain;
            dc.initial_covariance = c.initial_proposal_sd * c.initial_proposal_sd * Eigen::MatrixXd::Identity(d, d);
            const PosteriorChain ch = run_dram(make_log_posterior(prob, PriorSpec::uniform(d, c.prior_lower, c.prior_upper)),
                                               sample_initial_theta(d, c.init_low, c.init_high, seeds.init), dc);
            const Eigen::VectorXd truth = p.theta();
            bool all = true;
            for (int k = 0; k < d; ++k) {
                const auto col = column(ch.samples, k);
                const bool in = sample_quantile(col, 0.025) <= truth(k) && truth(k) <= sample_quantile(col, 0.975);
                covered[static_cast<std::size_t>(k)] += in;
                all = all && in;
            }
            joint += all;
        } catch (const Error& e) {
            ++failed;
            fmt::print(stderr, "criterion 5 repetition {} failed: {}\n", r, e.what());
        }
    }
    const int worst = *std::min_element(covered.begin(), covered.end());
    std::string per;
    for (int k : covered) per += fmt::format(" {}", k);
    return {worst >= 80 && failed == 0,
            fmt::format("per-parameter coverage out of {}:{}; all parameters jointly {}/{}; {} failed; {:.0f} s", reps,
                        per, joint, reps, failed, seconds_since(t0))};
}

// 6. gamma-value sanity on Gaussian ensembles
Outcome gamma_sanity() {
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng rng = make_rng(derive_seed(600, {seed}));
        const double mu = 0.5 * static_cast<double>(seed) - 1.0, sd = 0.3 * static_cast<double>(seed);
        std::normal_distribution<double> nd(mu, sd);
        std::vector<double> e(10000);
        for (double& v : e) v = nd(rng);
        const double at_mode = gamma_value(mu, e);
        const double hi = gamma_value(mu + 1.96 * sd, e), lo = gamma_value(mu - 1.96 * sd, e);
        ok = ok && at_mode > 0.95 && std::abs(hi - 0.05) <= 0.01 && std::abs(lo - 0.05) <= 0.01;
        detail += fmt::format("{}gamma(mu)={:.3f} gamma(mu+-1.96sd)={:.4f}/{:.4f}", detail.empty() ? "" : "; ", at_mode,
                              hi, lo);
    }
    return {ok, detail};
}

// 7. f_gamma approaches the threshold when the model generated the data
Outcome fgamma_limit(const fs::path& scratch) {
    ExperimentConfig c;
    c.truth = TruthKind::enriched;
    c.realizations = 10;
    c.output_directory = scratch / "criterion7";
    fs::remove_all(c.output_directory);
    const auto t0 = Clock::now();
    const SweepResult res = run_sweep(c);
    const double el = seconds_since(t0);
    for (const FGammaRow& row : res.fgamma) {
        if (row.tau == 0.05 && !row.partition) {
            const double f = row.fraction();
            return {std::abs(f - 0.05) <= 0.03 && row.total >= 2000 && el <= 1800.0,
                    fmt::format("f_gamma(0.05) = {:.4f} from {}/{} gamma-values over {} realizations; {:.0f} s", f,
                                row.below, row.total, row.realizations, el)};
        }
    }
    return {false, "no pooled tau = 0.05 row in the sweep output"};
}

// 8. enrichment captures the detailed model's observations
Outcome enrichment(const fs::path& scratch) {
    ExperimentConfig c;
    c.realizations = 5;
    c.output_directory = scratch / "criterion8";
    fs::remove_all(c.output_directory);
    const auto t0 = Clock::now();
    const SweepResult res = run_sweep(c);
    double cal = 0.0, val = 0.0;
    bool mse_ok = res.runs.size() == 5;
    std::string mse;
    for (const RunSummary& r : res.runs) {
        cal += r.coverage95_calibration;
        val += r.coverage95_validation;
        mse_ok = mse_ok && r.mse_enriched < r.mse_reduced;
        mse += fmt::format(" {:.2e}<{:.2e}", r.mse_enriched, r.mse_reduced);
    }
    const double n = static_cast<double>(std::max<std::size_t>(res.runs.size(), 1));
    cal /= n;  // equal counts per run, so the mean is the pooled fraction
    val /= n;
    return {cal >= 0.80 && val >= 0.70 && mse_ok,
            fmt::format("inside 95% bands: calibration {:.3f}, validation {:.3f}; MSE enriched<reduced:{}; {:.0f} s", cal,
                        val, mse, seconds_since(t0))};
}

// 9. relative complexity
Outcome complexity(const fs::path& scratch) {
    const bool exact = relative_complexity(10, 4) == 8.0 / 90.0 && relative_complexity(10, 4) < 0.1;
    const std::vector<int> sizes{10, 20, 50, 100};
    const auto rows = complexity_table(sizes);
    std::size_t expected_rows = 0, mismatches = 0;
    for (int S : sizes) expected_rows += static_cast<std::size_t>(S - 1);
    for (const ComplexityRow& r : rows) {
        const int S = r.detailed_size, s = r.reduced_size;
        const double oracle = 2.0 * s / (static_cast<double>(S) * S - static_cast<double>(s) * s + (S - s));
        if (std::abs(r.value - oracle) > 1e-15 * oracle) ++mismatches;
    }
    // the emitted file carries the same grid
    const fs::path file = scratch / "complexity.csv";
    write_text(file, complexity_csv(rows, {}));
    std::istringstream in(read_text(file));
    std::string line;
    std::size_t file_rows = 0, file_mismatches = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || !std::isdigit(static_cast<unsigned char>(line[0]))) continue;
        int S = 0, s = 0;
        if (std::sscanf(line.c_str(), "%d,%d", &S, &s) != 2) continue;
        const double v = std::stod(line.substr(line.rfind(',') + 1));
        ++file_rows;
        const double oracle = 2.0 * s / (static_cast<double>(S) * S - static_cast<double>(s) * s + (S - s));
        if (std::abs(v - oracle) > 1e-12 * oracle) ++file_mismatches;
    }
    return {exact && rows.size() == expected_rows && mismatches == 0 && file_rows == expected_rows &&
                file_mismatches == 0,
            fmt::format("relative_complexity(10,4) = {:.17g}; {} grid points, {} table and {} file mismatches",
                        relative_complexity(10, 4), rows.size(), mismatches, file_mismatches)};
}

// 10. reruns with the same master seed give identical CSV files
Outcome reproducibility(const fs::path& scratch) {
    ExperimentConfig c;
    c.dram.iterations = 6000;
    c.dram.burn_in = 2000;
    c.ensemble_size = 500;
    c.write_svg = true;
    std::size_t compared = 0;
    std::vector<std::string> differ;
    auto compare = [&](const fs::path& a, const fs::path& b) {
        const auto fa = csv_files(a), fb = csv_files(b);
        if (fa.size() != fb.size()) differ.push_back(fmt::format("{} vs {} files", fa.size(), fb.size()));
        for (const auto& [name, text] : fa) {
            ++compared;
            const auto it = fb.find(name);
            if (it == fb.end() || it->second != text) differ.push_back(name);
        }
    };
    const fs::path a = scratch / "criterion10" / "single_a", b = scratch / "criterion10" / "single_b";
    fs::remove_all(scratch / "criterion10");
    run_single(c, 4, 0, a);
    run_single(c, 4, 0, b);
    compare(a, b);

    ExperimentConfig sw = c;
    sw.generation.species = 6;
    sw.reductions = {2, 3};
    sw.realizations = 2;
    sw.write_svg = false;
    sw.output_directory = scratch / "criterion10" / "sweep_a";
    run_sweep(sw);
    sw.output_directory = scratch / "criterion10" / "sweep_b";
    sw.workers = 2;
    run_sweep(sw);
    compare(scratch / "criterion10" / "sweep_a", scratch / "criterion10" / "sweep_b");
    return {differ.empty() && compared > 0,
            fmt::format("{} CSV files compared, {} differ{}", compared, differ.size(),
                        differ.empty() ? "" : " (first: " + differ.front() + ")")};
}

}  // namespace

int main(int argc, char** argv) {
    fs::path scratch = fs::temp_directory_path() / "glvd-acceptance";
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--scratch" && i + 1 < argc) {
            scratch = argv[++i];
        } else if (arg == "--only" && i + 1 < argc) {
            std::istringstream in(argv[++i]);
            std::string tok;
            while (std::getline(in, tok, ',')) only.insert(std::atoi(tok.c_str()));
        } else {
            fmt::print(stderr, "usage: {} [--scratch DIR] [--only N[,N...]]\n", argv[0]);
            return 2;
        }
    }
    fs::create_directories(scratch);

    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, structural},
        {2, solver_oracle},
        {3, implicit_algebra},
        {4, mcmc_gaussian},
        {5, self_consistency},
        {6, gamma_sanity},
        {7, [&] { return fgamma_limit(scratch); }},
        {8, [&] { return enrichment(scratch); }},
        {9, [&] { return complexity(scratch); }},
        {10, [&] { return reproducibility(scratch); }},
    };

    int failures = 0;
    for (const auto& [id, check] : criteria) {
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        fmt::print("{} criterion {}: {}\n", o.pass ? "PASS" : "FAIL", id, o.detail);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
