#include "glvd/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "glvd/parallel.hpp"
#include "glvd/rng.hpp"
#include "glvd/svg.hpp"

namespace glvd {

using json = nlohmann::json;

namespace {

void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ConfigError(fmt::format("config section '{}' must be an object", section));
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(fmt::format("unknown config key '{}{}{}'", section, section.empty() ? "" : ".", key));
        }
    }
}

template <class T>
void read(const json& j, std::string_view key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(std::string(key)).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
    }
}

void read_range(const json& j, std::string_view key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    std::vector<double> r;
    read(j, key, r);
    if (r.size() != 2) throw ConfigError(fmt::format("config key '{}' must be a [low, high] pair", key));
    lo = r[0];
    hi = r[1];
}

std::string_view to_string(TruthKind k) { return k == TruthKind::detailed ? "detailed" : "enriched"; }

Metadata base_metadata(const ExperimentConfig& config, int s, int realization, const RunSeeds& seeds) {
    return {{"glvd_version", library_version()},
            {"config_hash", config_hash(config)},
            {"master_seed", std::to_string(config.master_seed)},
            {"realization", std::to_string(realization)},
            {"S", std::to_string(config.generation.species)},
            {"s", std::to_string(s)},
            {"truth", std::string(to_string(config.truth))},
            {"model_seed", std::to_string(seeds.model)},
            {"scenario_seed", std::to_string(seeds.scenarios)},
            {"noise_seed", std::to_string(seeds.noise)},
            {"chain_seed", std::to_string(seeds.chain)},
            {"predictive_seed", std::to_string(seeds.predictive)}};
}

Metadata with(Metadata meta, std::initializer_list<std::pair<std::string, std::string>> extra) {
    meta.insert(meta.end(), extra.begin(), extra.end());
    return meta;
}

std::vector<double> plotting_grid(double t_final, int points, const std::vector<double>& obs_times) {
    // Observation times are kept verbatim so observed values can be matched exactly.
    const double tol = 1e-9 * std::max(1.0, t_final);
    std::vector<double> grid(obs_times.begin(), obs_times.end());
    for (int p = 0; p < points; ++p) {
        const double t = t_final * p / (points - 1);
        const bool near_obs = std::any_of(obs_times.begin(), obs_times.end(),
                                          [&](double o) { return std::abs(o - t) <= tol; });
        if (!near_obs) grid.push_back(t);
    }
    std::sort(grid.begin(), grid.end());
    return grid;
}

}  // namespace

void ExperimentConfig::validate() const {
    generation.validate();
    const int S = generation.species;
    if (reductions.empty()) throw ConfigError("reduction list is empty");
    for (int s : reductions) {
        if (s < 1 || s >= S) throw ConfigError(fmt::format("reduced size {} outside [1, {}]", s, S - 1));
    }
    if (n_calibration < 1 || n_validation < 1) throw ConfigError("need at least one calibration and one validation scenario");
    if (!(ic_range.low > 0.0 && ic_range.high > ic_range.low)) throw ConfigError("ic_range must satisfy 0 < low < high");
    solver.validate();
    if (observation_count < 1) throw ConfigError("observation count T must be positive");
    if (!(sigma2_eps > 0.0)) throw ConfigError("sigma2_eps must be positive");
    dram.validate();
    if (!(initial_proposal_sd > 0.0)) throw ConfigError("initial proposal sd must be positive");
    if (!(prior_lower < prior_upper && prior_upper <= 0.0)) throw ConfigError("prior bounds must satisfy lower < upper <= 0");
    if (!(init_low < init_high && init_low > prior_lower && init_high <= prior_upper)) {
        throw ConfigError("initial range must lie inside the prior support");
    }
    if (thresholds.empty()) throw ConfigError("threshold list is empty");
    for (double t : thresholds) {
        if (!(t > 0.0 && t < 1.0)) throw ConfigError(fmt::format("threshold {} outside (0, 1)", t));
    }
    if (ensemble_size < 100) throw ConfigError("gamma-values need an ensemble of at least 100");
    if (realizations < 1) throw ConfigError("n_M must be positive");
    for (int S2 : complexity_sizes) {
        if (S2 < 2) throw ConfigError("complexity sizes must be >= 2");
    }
    if (truth == TruthKind::enriched) {
        if (!(truth_delta0_low < truth_delta0_high && truth_delta0_high <= 0.0 && truth_delta0_low > prior_lower) ||
            !(truth_delta1_low < truth_delta1_high && truth_delta1_high <= 0.0 && truth_delta1_low > prior_lower)) {
            throw ConfigError("truth parameter ranges must lie inside the prior support");
        }
    }
    if (plot_points < 2) throw ConfigError("plot_points must be at least 2");
    if (workers < 1) throw ConfigError("workers must be positive");
}

ExperimentConfig experiment_config_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("malformed config JSON: {}", e.what()));
    }
    check_keys(j, "", {"generation", "reductions", "scenarios", "solver", "observations", "inference", "validation",
                       "sweep", "truth", "output", "workers"});
    ExperimentConfig c;
    if (j.contains("generation")) {
        const json& g = j["generation"];
        check_keys(g, "generation", {"species", "sigma2_b", "sigma2_c"});
        read(g, "species", c.generation.species);
        read(g, "sigma2_b", c.generation.sigma2_b);
        read(g, "sigma2_c", c.generation.sigma2_c);
    }
    read(j, "reductions", c.reductions);
    if (j.contains("scenarios")) {
        const json& g = j["scenarios"];
        check_keys(g, "scenarios", {"n_calibration", "n_validation", "ic_range"});
        read(g, "n_calibration", c.n_calibration);
        read(g, "n_validation", c.n_validation);
        read_range(g, "ic_range", c.ic_range.low, c.ic_range.high);
    }
    if (j.contains("solver")) {
        const json& g = j["solver"];
        check_keys(g, "solver", {"rel_tol", "abs_tol", "max_step", "t_final", "negativity_floor", "max_steps"});
        read(g, "rel_tol", c.solver.rel_tol);
        read(g, "abs_tol", c.solver.abs_tol);
        if (g.contains("max_step") && !g["max_step"].is_null()) read(g, "max_step", c.solver.max_step);
        read(g, "t_final", c.solver.t_final);
        read(g, "negativity_floor", c.solver.negativity_floor);
        read(g, "max_steps", c.solver.max_steps);
    }
    if (j.contains("observations")) {
        const json& g = j["observations"];
        check_keys(g, "observations", {"count", "sigma2"});
        read(g, "count", c.observation_count);
        read(g, "sigma2", c.sigma2_eps);
    }
    if (j.contains("inference")) {
        const json& g = j["inference"];
        check_keys(g, "inference",
                   {"iterations", "burn_in", "thin", "delayed_rejection", "dr_scale", "adapt", "adapt_start",
                    "adapt_interval", "adapt_scale", "regularization", "stall_window", "initial_proposal_sd",
                    "prior", "init_range", "mode"});
        read(g, "iterations", c.dram.iterations);
        read(g, "burn_in", c.dram.burn_in);
        read(g, "thin", c.dram.thin);
        read(g, "delayed_rejection", c.dram.delayed_rejection);
        read(g, "dr_scale", c.dram.dr_scale);
        read(g, "adapt", c.dram.adapt);
        read(g, "adapt_start", c.dram.adapt_start);
        read(g, "adapt_interval", c.dram.adapt_interval);
        read(g, "adapt_scale", c.dram.adapt_scale);
        read(g, "regularization", c.dram.regularization);
        read(g, "stall_window", c.dram.stall_window);
        read(g, "initial_proposal_sd", c.initial_proposal_sd);
        read_range(g, "prior", c.prior_lower, c.prior_upper);
        read_range(g, "init_range", c.init_low, c.init_high);
        if (g.contains("mode")) {
            std::string mode;
            read(g, "mode", mode);
            c.mode = enriched_mode_from_string(mode);
        }
    }
    if (j.contains("validation")) {
        const json& g = j["validation"];
        check_keys(g, "validation", {"thresholds", "ensemble_size"});
        read(g, "thresholds", c.thresholds);
        read(g, "ensemble_size", c.ensemble_size);
    }
    if (j.contains("sweep")) {
        const json& g = j["sweep"];
        check_keys(g, "sweep", {"realizations", "master_seed", "complexity_sizes"});
        read(g, "realizations", c.realizations);
        read(g, "master_seed", c.master_seed);
        read(g, "complexity_sizes", c.complexity_sizes);
    }
    if (j.contains("truth")) {
        const json& g = j["truth"];
        check_keys(g, "truth", {"kind", "delta0_range", "delta1_range"});
        if (g.contains("kind")) {
            std::string kind;
            read(g, "kind", kind);
            if (kind == "detailed") {
                c.truth = TruthKind::detailed;
            } else if (kind == "enriched") {
                c.truth = TruthKind::enriched;
            } else {
                throw ConfigError(fmt::format("unknown truth kind '{}'", kind));
            }
        }
        read_range(g, "delta0_range", c.truth_delta0_low, c.truth_delta0_high);
        read_range(g, "delta1_range", c.truth_delta1_low, c.truth_delta1_high);
    }
    if (j.contains("output")) {
        const json& g = j["output"];
        check_keys(g, "output", {"directory", "svg", "plot_points", "plot_draws"});
        std::string dir = c.output_directory.string();
        read(g, "directory", dir);
        c.output_directory = dir;
        read(g, "svg", c.write_svg);
        read(g, "plot_points", c.plot_points);
        read(g, "plot_draws", c.plot_draws);
    }
    read(j, "workers", c.workers);
    c.validate();
    return c;
}

std::string to_json(const ExperimentConfig& c) {
    json j = {
        {"generation",
         {{"species", c.generation.species}, {"sigma2_b", c.generation.sigma2_b}, {"sigma2_c", c.generation.sigma2_c}}},
        {"reductions", c.reductions},
        {"scenarios",
         {{"n_calibration", c.n_calibration},
          {"n_validation", c.n_validation},
          {"ic_range", {c.ic_range.low, c.ic_range.high}}}},
        {"solver",
         {{"rel_tol", c.solver.rel_tol},
          {"abs_tol", c.solver.abs_tol},
          {"max_step", std::isfinite(c.solver.max_step) ? json(c.solver.max_step) : json(nullptr)},
          {"t_final", c.solver.t_final},
          {"negativity_floor", c.solver.negativity_floor},
          {"max_steps", c.solver.max_steps}}},
        {"observations", {{"count", c.observation_count}, {"sigma2", c.sigma2_eps}}},
        {"inference",
         {{"iterations", c.dram.iterations},
          {"burn_in", c.dram.burn_in},
          {"thin", c.dram.thin},
          {"delayed_rejection", c.dram.delayed_rejection},
          {"dr_scale", c.dram.dr_scale},
          {"adapt", c.dram.adapt},
          {"adapt_start", c.dram.adapt_start},
          {"adapt_interval", c.dram.adapt_interval},
          {"adapt_scale", c.dram.adapt_scale},
          {"regularization", c.dram.regularization},
          {"stall_window", c.dram.stall_window},
          {"initial_proposal_sd", c.initial_proposal_sd},
          {"prior", {c.prior_lower, c.prior_upper}},
          {"init_range", {c.init_low, c.init_high}},
          {"mode", std::string(to_string(c.mode))}}},
        {"validation", {{"thresholds", c.thresholds}, {"ensemble_size", c.ensemble_size}}},
        {"sweep",
         {{"realizations", c.realizations},
          {"master_seed", c.master_seed},
          {"complexity_sizes", c.complexity_sizes}}},
        {"truth",
         {{"kind", std::string(to_string(c.truth))},
          {"delta0_range", {c.truth_delta0_low, c.truth_delta0_high}},
          {"delta1_range", {c.truth_delta1_low, c.truth_delta1_high}}}},
        {"output",
         {{"directory", c.output_directory.string()},
          {"svg", c.write_svg},
          {"plot_points", c.plot_points},
          {"plot_draws", c.plot_draws}}},
        {"workers", c.workers}};
    return j.dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
    // Output location and worker count do not change results.
    ExperimentConfig canonical = config;
    canonical.output_directory = "";
    canonical.workers = 1;
    return fnv1a_hex(to_json(canonical));
}

RunSeeds run_seeds(std::uint64_t master, int realization, int s) {
    const auto m = static_cast<std::uint64_t>(realization);
    const auto r = static_cast<std::uint64_t>(s);
    return {derive_seed(master, {m, 0}),    derive_seed(master, {m, 1}),    derive_seed(master, {m, 2, r}),
            derive_seed(master, {m, 3, r}), derive_seed(master, {m, 4, r}), derive_seed(master, {m, 5, r}),
            derive_seed(master, {m, 6, r})};
}

RunSummary run_single(const ExperimentConfig& config, int s, int realization, const std::filesystem::path& dir) {
    config.validate();
    const int S = config.generation.species;
    if (s < 1 || s >= S) throw ConfigError(fmt::format("reduced size {} outside [1, {}]", s, S - 1));

    const RunSeeds seeds = run_seeds(config.master_seed, realization, s);
    const Metadata meta = base_metadata(config, s, realization, seeds);
    std::filesystem::create_directories(dir);

    std::string stage;
    auto fail = [&](const std::exception& e, bool numerical) -> RunError {
        json manifest = {{"format", "glvd.failure/1"}, {"stage", stage}, {"message", e.what()},
                         {"realization", realization}, {"s", s}};
        try {
            write_text(dir / "failure.json", manifest.dump(2));
        } catch (...) {
        }
        return RunError(stage, e.what(), numerical);
    };

    RunSummary summary;
    summary.detailed_size = S;
    summary.reduced_size = s;
    summary.realization = realization;
    summary.directory = dir;

    try {
        stage = "config";
        write_text(dir / "config.json", to_json(config));

        stage = "generate";
        GenerationConfig gen = config.generation;
        gen.seed = seeds.model;
        const DetailedModel detailed = generate_detailed(gen);
        write_text(dir / "detailed.json", to_json(detailed));

        stage = "reduce";
        const ReducedModel reduced = subsample_reduced(detailed, s);
        write_text(dir / "reduced.json", to_json(reduced));

        stage = "observe";
        const auto scenarios = sample_scenarios(config.n_calibration + config.n_validation, config.n_calibration, s, S,
                                                config.ic_range, seeds.scenarios);
        const auto times = uniform_observation_times(config.solver.t_final, config.observation_count);
        std::optional<EnrichedModel> truth_enriched;
        TruthModel truth = detailed;
        if (config.truth == TruthKind::enriched) {
            Rng rng = make_rng(seeds.truth);
            std::uniform_real_distribution<double> d0(config.truth_delta0_low, config.truth_delta0_high);
            std::uniform_real_distribution<double> d1(config.truth_delta1_low, config.truth_delta1_high);
            DiscrepancyParams p = DiscrepancyParams::zero(s);
            for (int i = 0; i < s; ++i) p.delta0(i) = d0(rng);
            for (int i = 0; i < s; ++i) p.delta1(i) = d1(rng);
            truth_enriched = EnrichedModel{reduced, p, config.mode};
            truth = *truth_enriched;
            summary.theta_true = p.theta();
            write_text(dir / "truth_params.json", to_json(p));
        }
        const ObservationSet obs =
            synthesize_observations(truth, s, scenarios, times, config.sigma2_eps, config.solver, seeds.noise);
        write_text(dir / "observations.json", to_json(obs));
        write_text(dir / "observations.csv", observations_csv(obs, meta));

        stage = "calibrate";
        const CalibrationProblem problem(reduced, obs.restrict(Partition::calibration), config.solver, config.mode);
        const PriorSpec prior = PriorSpec::uniform(2 * s, config.prior_lower, config.prior_upper);
        const LogDensity target = make_log_posterior(problem, prior);
        DramConfig dram = config.dram;
        dram.seed = seeds.chain;
        dram.initial_covariance =
            config.initial_proposal_sd * config.initial_proposal_sd * Eigen::MatrixXd::Identity(2 * s, 2 * s);
        const Eigen::VectorXd init = sample_initial_theta(2 * s, config.init_low, config.init_high, seeds.init);
        const PosteriorChain chain = run_dram(target, init, dram);
        write_text(dir / "chain.csv", chain_csv(chain, meta));
        write_text(dir / "chain_diagnostics.json", chain_diagnostics_json(chain, dram));
        summary.acceptance = chain.acceptance;
        summary.stalled = chain.stalled;
        summary.theta_mean = chain.mean();

        stage = "predict";
        const PredictiveEnsemble ens =
            posterior_predictive(chain, reduced, obs.scenarios(), times, config.ensemble_size, config.sigma2_eps,
                                 config.solver, config.mode, seeds.predictive);
        {
            const std::array<double, 2> probs{0.025, 0.975};
            const Eigen::MatrixXd band = quantile_bands(ens.replicates, probs);
            const Eigen::RowVectorXd mean_output = ens.outputs.colwise().mean();
            std::size_t in_c = 0, n_c = 0, in_v = 0, n_v = 0;
            double se_enriched = 0.0, se_reduced = 0.0;
            for (std::size_t pos = 0; pos < obs.scenarios().size(); ++pos) {
                const Scenario& sc = obs.scenarios()[pos];
                const Trajectory red = integrate(reduced, sc.initial, config.solver, times);
                for (int j = 0; j < static_cast<int>(times.size()); ++j) {
                    for (int i = 0; i < s; ++i) {
                        const Observation& o = obs.at(i, j, sc.id);
                        const Eigen::Index c = ens.coordinate(i, j, static_cast<int>(pos));
                        const bool inside = o.value >= band(c, 0) && o.value <= band(c, 1);
                        if (sc.partition == Partition::calibration) {
                            ++n_c;
                            in_c += inside;
                        } else {
                            ++n_v;
                            in_v += inside;
                        }
                        se_enriched += (o.value - mean_output(c)) * (o.value - mean_output(c));
                        se_reduced += (o.value - red.states(j, i)) * (o.value - red.states(j, i));
                    }
                }
            }
            summary.coverage95_calibration = static_cast<double>(in_c) / static_cast<double>(n_c);
            summary.coverage95_validation = static_cast<double>(in_v) / static_cast<double>(n_v);
            summary.mse_enriched = se_enriched / static_cast<double>(obs.size());
            summary.mse_reduced = se_reduced / static_cast<double>(obs.size());
        }

        stage = "plot";
        {
            const auto grid = plotting_grid(config.solver.t_final, config.plot_points, times);
            const std::size_t draws = std::min(config.plot_draws, config.ensemble_size);
            const PredictiveEnsemble plot_ens =
                posterior_predictive(chain, reduced, obs.scenarios(), grid, std::max<std::size_t>(draws, 1),
                                     config.sigma2_eps, config.solver, config.mode, derive_seed(seeds.predictive, {1}));
            const std::array<double, 5> probs{0.025, 0.25, 0.5, 0.75, 0.975};
            const Eigen::MatrixXd q = quantile_bands(plot_ens.outputs, probs);
            const Eigen::MatrixXd pred = quantile_bands(plot_ens.replicates, std::array<double, 2>{0.025, 0.975});

            for (std::size_t pos = 0; pos < obs.scenarios().size(); ++pos) {
                const Scenario& sc = obs.scenarios()[pos];
                const Trajectory red = integrate(reduced, sc.initial, config.solver, grid);
                Trajectory tru;
                if (truth_enriched) {
                    tru = integrate(*truth_enriched, sc.initial, config.solver, grid);
                } else {
                    tru = integrate(detailed, sc.full_initial(), config.solver, grid);
                }
                std::string csv;
                for (const auto& [k, v] : with(meta, {{"scenario", std::to_string(sc.id + 1)},
                                                      {"partition", std::string(to_string(sc.partition))}})) {
                    csv += fmt::format("# {}: {}\n", k, v);
                }
                csv += "time,species,truth,reduced,enriched_q025,enriched_q25,enriched_q50,enriched_q75,"
                       "enriched_q975,predictive_q025,predictive_q975,observed\n";
                std::vector<PlotPanel> panels(static_cast<std::size_t>(s));
                for (int i = 0; i < s; ++i) {
                    PlotPanel& panel = panels[static_cast<std::size_t>(i)];
                    panel.title = fmt::format("species {}", i + 1);
                    BandSeries band;
                    LineSeries tru_line{config.truth == TruthKind::detailed ? "detailed" : "truth", "#000000", "", {}, {}};
                    LineSeries red_line{"reduced", "#d62728", "6,3", {}, {}};
                    LineSeries med_line{"enriched median", "#08519c", "", {}, {}};
                    for (std::size_t g = 0; g < grid.size(); ++g) {
                        const Eigen::Index c = plot_ens.coordinate(i, static_cast<int>(g), static_cast<int>(pos));
                        const auto row = static_cast<Eigen::Index>(g);
                        std::string observed;
                        auto it = std::find(times.begin(), times.end(), grid[g]);
                        if (it != times.end()) {
                            const Observation& o = obs.at(i, static_cast<int>(it - times.begin()), sc.id);
                            observed = fmt::format("{}", o.value);
                            panel.points_x.push_back(grid[g]);
                            panel.points_y.push_back(o.value);
                        }
                        csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", grid[g], i + 1, tru.states(row, i),
                                           red.states(row, i), q(c, 0), q(c, 1), q(c, 2), q(c, 3), q(c, 4), pred(c, 0),
                                           pred(c, 1), observed);
                        band.x.push_back(grid[g]);
                        band.lo95.push_back(q(c, 0));
                        band.lo50.push_back(q(c, 1));
                        band.median.push_back(q(c, 2));
                        band.hi50.push_back(q(c, 3));
                        band.hi95.push_back(q(c, 4));
                        tru_line.x.push_back(grid[g]);
                        tru_line.y.push_back(tru.states(row, i));
                        red_line.x.push_back(grid[g]);
                        red_line.y.push_back(red.states(row, i));
                        med_line.x.push_back(grid[g]);
                        med_line.y.push_back(q(c, 2));
                    }
                    panel.band = std::move(band);
                    panel.lines = {std::move(tru_line), std::move(red_line), std::move(med_line)};
                }
                const std::string stem = fmt::format("scenario_{}", sc.id + 1);
                write_text(dir / "trajectories" / (stem + ".csv"), csv);
                if (config.write_svg) {
                    write_text(dir / "plots" / (stem + ".svg"),
                               render_svg(panels, fmt::format("S = {}, s = {}, scenario {} ({})", S, s, sc.id + 1,
                                                              to_string(sc.partition))));
                }
            }
        }

        stage = "validate";
        summary.gamma = compute_gamma_report(obs, ens, S, realization);
        const std::array<GammaReport, 1> one{summary.gamma};
        write_text(dir / "gamma.csv", gamma_csv(one, meta));

        stage = "summary";
        json js = {{"format", "glvd.run-summary/1"},
                   {"S", S},
                   {"s", s},
                   {"realization", realization},
                   {"config_hash", config_hash(config)},
                   {"acceptance_rate", chain.acceptance.overall_rate()},
                   {"stalled", chain.stalled},
                   {"theta_mean", std::vector<double>(summary.theta_mean.data(),
                                                      summary.theta_mean.data() + summary.theta_mean.size())},
                   {"coverage95_calibration", summary.coverage95_calibration},
                   {"coverage95_validation", summary.coverage95_validation},
                   {"mse_enriched", summary.mse_enriched},
                   {"mse_reduced", summary.mse_reduced},
                   {"predictive_draws_dropped", ens.dropped},
                   {"gamma_degenerate", summary.gamma.degenerate},
                   {"relative_complexity", relative_complexity(S, s)}};
        if (summary.theta_true) {
            js["theta_true"] = std::vector<double>(summary.theta_true->data(),
                                                   summary.theta_true->data() + summary.theta_true->size());
        }
        write_text(dir / "summary.json", js.dump(2));
    } catch (const RunError&) {
        throw;
    } catch (const NumericalError& e) {
        throw fail(e, true);
    } catch (const Error& e) {
        throw fail(e, false);
    } catch (const std::exception& e) {
        throw fail(e, false);
    }
    return summary;
}

std::vector<FGammaRow> aggregate_fgamma(std::span<const GammaReport> reports, std::span<const double> thresholds) {
    std::map<std::pair<int, int>, std::vector<GammaReport>> groups;
    for (const GammaReport& r : reports) groups[{r.detailed_size, r.reduced_size}].push_back(r);
    std::vector<FGammaRow> rows;
    for (const auto& [key, group] : groups) {
        for (double tau : thresholds) {
            for (std::optional<Partition> p : {std::optional<Partition>(Partition::calibration),
                                               std::optional<Partition>(Partition::validation),
                                               std::optional<Partition>()}) {
                rows.push_back(f_gamma(group, tau, p));
            }
        }
    }
    return rows;
}

SweepResult run_sweep(const ExperimentConfig& config, const ProgressCallback& progress) {
    config.validate();
    struct Job {
        int s;
        int realization;
    };
    std::vector<Job> jobs;
    for (int s : config.reductions) {
        for (int m = 0; m < config.realizations; ++m) jobs.push_back({s, m});
    }

    std::vector<std::optional<RunSummary>> results(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::mutex progress_mutex;
    const std::filesystem::path root = config.output_directory;

    parallel_for(jobs.size(), config.workers, [&](std::size_t n) {
        const Job& job = jobs[n];
        const auto dir = root / "runs" / fmt::format("s{:02}", job.s) / fmt::format("r{:03}", job.realization);
        try {
            results[n] = run_single(config, job.s, job.realization, dir);
        } catch (const Error& e) {
            errors[n] = e.what();
        }
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(fmt::format("s = {}, realization {}: {}", job.s, job.realization,
                                 errors[n].empty() ? "ok" : "failed (" + errors[n] + ")"));
        }
    });

    SweepResult result;
    result.attempted = jobs.size();
    std::vector<GammaReport> reports;
    for (std::size_t n = 0; n < jobs.size(); ++n) {
        if (results[n]) {
            reports.push_back(results[n]->gamma);
            result.runs.push_back(std::move(*results[n]));
        } else {
            result.failures.push_back(fmt::format("s = {}, realization {}: {}", jobs[n].s, jobs[n].realization, errors[n]));
        }
    }

    const Metadata meta{{"glvd_version", library_version()},
                        {"config_hash", config_hash(config)},
                        {"master_seed", std::to_string(config.master_seed)},
                        {"S", std::to_string(config.generation.species)},
                        {"n_M", std::to_string(config.realizations)},
                        {"truth", std::string(to_string(config.truth))},
                        {"attempted", std::to_string(result.attempted)},
                        {"excluded", std::to_string(result.failures.size())}};

    if (!reports.empty()) result.fgamma = aggregate_fgamma(reports, config.thresholds);
    result.complexity = complexity_table(config.complexity_sizes);

    write_text(root / "config.json", to_json(config));
    write_text(root / "fgamma.csv", fgamma_csv(result.fgamma, meta));
    write_text(root / "complexity.csv", complexity_csv(result.complexity, meta));
    if (!reports.empty()) write_text(root / "gamma_all.csv", gamma_csv(reports, meta));
    // f_gamma against alpha, one table per (tau, partition).
    for (double tau : config.thresholds) {
        for (const char* p : {"c", "v"}) {
            std::vector<FGammaRow> rows;
            for (const FGammaRow& r : result.fgamma) {
                if (r.tau == tau && r.partition && (*r.partition == Partition::calibration) == (p[0] == 'c')) {
                    rows.push_back(r);
                }
            }
            write_text(root / fmt::format("fgamma_S{}_tau{}_{}.csv", config.generation.species, tau, p),
                       fgamma_csv(rows, meta));
        }
    }
    json js = {{"format", "glvd.sweep-summary/1"},
               {"config_hash", config_hash(config)},
               {"attempted", result.attempted},
               {"succeeded", result.runs.size()},
               {"failures", result.failures}};
    write_text(root / "sweep_summary.json", js.dump(2));

    if (static_cast<double>(result.failures.size()) > 0.1 * static_cast<double>(result.attempted)) {
        throw SweepError(fmt::format("{} of {} realizations failed", result.failures.size(), result.attempted),
                         std::move(result));
    }
    return result;
}

}  // namespace glvd
