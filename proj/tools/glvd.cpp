// glvd: command-line front end for generating GLV models, synthesizing data,
// calibrating embedded discrepancies and validating them with gamma-values.

#include <array>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "glvd/data.hpp"
#include "glvd/dynamics.hpp"
#include "glvd/error.hpp"
#include "glvd/experiment.hpp"
#include "glvd/inference.hpp"
#include "glvd/io.hpp"
#include "glvd/model_gen.hpp"
#include "glvd/validation.hpp"

namespace fs = std::filesystem;
using namespace glvd;

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kNumericalError = 3,
    kPartialSweep = 4,
};

struct Globals {
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    std::string out_dir = ".";
    std::string config_path;
    int verbosity = 0;
};

void info(const Globals& g, const std::string& msg) {
    if (g.verbosity >= 0) std::cerr << msg << '\n';
}

void debug(const Globals& g, const std::string& msg) {
    if (g.verbosity > 0) std::cerr << msg << '\n';
}

ExperimentConfig base_config(const Globals& g) {
    ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : experiment_config_from_json(read_text(g.config_path));
    if (g.seed) c.master_seed = *g.seed;
    c.workers = g.workers;
    if (g.out_dir != ".") c.output_directory = g.out_dir;
    return c;
}

fs::path output_path(const Globals& g, const std::string& explicit_path, const std::string& default_name) {
    if (!explicit_path.empty()) return explicit_path;
    return fs::path(g.out_dir) / default_name;
}

Metadata cli_metadata(const ExperimentConfig& c, std::initializer_list<std::pair<std::string, std::string>> extra) {
    Metadata m{{"glvd_version", library_version()}, {"config_hash", config_hash(c)}};
    m.insert(m.end(), extra.begin(), extra.end());
    return m;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw ArgumentError(fmt::format("'{}' is not a number", cell));
        }
    }
    return out;
}

bool is_format(const std::string& text, std::string_view format) {
    return text.find(fmt::format("\"format\": \"{}\"", format)) != std::string::npos;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Embedded discrepancy calibration and validation for generalized Lotka-Volterra models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", library_version());

    Globals g;
    app.add_option("--seed", g.seed, "Master seed (overrides the config)");
    app.add_option("--workers", g.workers, "Worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out_dir, "Output directory");
    app.add_option("--config", g.config_path, "Experiment config JSON")->check(CLI::ExistingFile);
    app.add_flag("-v,--verbose", [&g](std::int64_t n) { g.verbosity = static_cast<int>(n); }, "More output");
    app.add_flag("-q,--quiet", [&g](std::int64_t) { g.verbosity = -1; }, "Only errors");

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a random detailed model");
    int gen_species = -1;
    double gen_b = -1.0, gen_c = -1.0;
    std::string gen_out;
    gen->add_option("-S,--species", gen_species, "Number of species S");
    gen->add_option("--sigma2-b", gen_b, "Variance of log off-diagonal interactions");
    gen->add_option("--sigma2-c", gen_c, "Variance of log diagonal surplus");
    gen->add_option("-o,--output", gen_out, "Output JSON (default <out>/detailed.json)");

    // reduce
    auto* red = app.add_subcommand("reduce", "Subsample a reduced model from a detailed model");
    std::string red_model, red_out;
    int red_s = 0;
    red->add_option("--model", red_model, "Detailed model JSON")->required()->check(CLI::ExistingFile);
    red->add_option("-s,--size", red_s, "Reduced size s")->required();
    red->add_option("-o,--output", red_out, "Output JSON (default <out>/reduced.json)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Integrate a model and export trajectories");
    std::string sim_model, sim_params, sim_scenarios, sim_initial, sim_mode = "explicit";
    int sim_points = 101;
    sim->add_option("--model", sim_model, "Detailed or reduced model JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--params", sim_params, "Discrepancy JSON; simulates the enriched model")->check(CLI::ExistingFile);
    sim->add_option("--mode", sim_mode, "Enriched mode: explicit or implicit");
    sim->add_option("--scenarios", sim_scenarios, "Scenarios JSON (or observations JSON)")->check(CLI::ExistingFile);
    sim->add_option("--initial", sim_initial, "Comma-separated initial concentrations");
    sim->add_option("--points", sim_points, "Output points on [0, t_final]")->check(CLI::Range(2, 1000000));

    // observe
    auto* obs_cmd = app.add_subcommand("observe", "Synthesize noisy observations from a detailed model");
    std::string obs_model, obs_out, obs_params;
    int obs_s = 0;
    obs_cmd->add_option("--model", obs_model, "Detailed model JSON (or reduced, with --params)")
        ->required()
        ->check(CLI::ExistingFile);
    obs_cmd->add_option("--params", obs_params, "Discrepancy JSON: observe the enriched model instead")
        ->check(CLI::ExistingFile);
    obs_cmd->add_option("-s,--size", obs_s, "Number of observed species s")->required();
    obs_cmd->add_option("-o,--output", obs_out, "Output JSON (default <out>/observations.json)");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Sample the discrepancy posterior with DRAM");
    std::string cal_reduced, cal_obs, cal_out;
    cal->add_option("--reduced", cal_reduced, "Reduced model JSON")->required()->check(CLI::ExistingFile);
    cal->add_option("--obs", cal_obs, "Observations JSON")->required()->check(CLI::ExistingFile);
    cal->add_option("-o,--output", cal_out, "Chain CSV (default <out>/chain.csv)");

    // validate
    auto* val = app.add_subcommand("validate", "Compute gamma-values and f_gamma for a calibrated chain");
    std::string val_reduced, val_obs, val_chain, val_out;
    int val_detailed_size = 0;
    val->add_option("--reduced", val_reduced, "Reduced model JSON")->required()->check(CLI::ExistingFile);
    val->add_option("--obs", val_obs, "Observations JSON")->required()->check(CLI::ExistingFile);
    val->add_option("--chain", val_chain, "Chain CSV")->required()->check(CLI::ExistingFile);
    val->add_option("-S,--detailed-size", val_detailed_size, "S recorded in the report (default: parent size)");
    val->add_option("-o,--output", val_out, "Gamma CSV (default <out>/gamma.csv)");

    // run
    auto* run = app.add_subcommand("run", "One realization end to end");
    int run_s = -1, run_realization = 0;
    run->add_option("-s,--size", run_s, "Reduced size s (default: first in config)");
    run->add_option("--realization", run_realization, "Realization index")->check(CLI::NonNegativeNumber);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "All reductions x n_M realizations, aggregated f_gamma");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // help and version exit 0; anything else is a usage error
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            ExperimentConfig c = base_config(g);
            GenerationConfig gc = c.generation;
            if (gen_species > 0) gc.species = gen_species;
            if (gen_b > 0) gc.sigma2_b = gen_b;
            if (gen_c > 0) gc.sigma2_c = gen_c;
            gc.seed = c.master_seed;
            const DetailedModel m = generate_detailed(gc);
            const fs::path out = output_path(g, gen_out, "detailed.json");
            write_text(out, to_json(m));
            info(g, fmt::format("wrote {} (S = {}, {})", out.string(), m.size(), check_stability(m).describe()));
        } else if (red->parsed()) {
            const DetailedModel d = detailed_from_json(read_text(red_model));
            const ReducedModel r = subsample_reduced(d, red_s);
            const fs::path out = output_path(g, red_out, "reduced.json");
            write_text(out, to_json(r));
            info(g, fmt::format("wrote {} (s = {} of S = {})", out.string(), r.size(), d.size()));
        } else if (sim->parsed()) {
            ExperimentConfig c = base_config(g);
            const std::string text = read_text(sim_model);
            std::vector<Scenario> scenarios;
            if (!sim_scenarios.empty()) {
                const std::string st = read_text(sim_scenarios);
                scenarios = is_format(st, "glvd.observations/1") ? observations_from_json(st).scenarios()
                                                                  : scenarios_from_json(st);
            } else if (!sim_initial.empty()) {
                const auto v = parse_list(sim_initial);
                Scenario sc;
                sc.initial = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
                scenarios.push_back(sc);
            } else {
                throw ArgumentError("simulate needs --scenarios or --initial");
            }
            std::vector<double> grid;
            for (int p = 0; p < sim_points; ++p) grid.push_back(c.solver.t_final * p / (sim_points - 1));

            for (const Scenario& sc : scenarios) {
                Trajectory traj;
                if (is_format(text, "glvd.detailed/1")) {
                    const DetailedModel m = detailed_from_json(text);
                    Eigen::VectorXd x0 = sc.initial.size() == m.size() ? sc.initial : sc.full_initial();
                    traj = integrate(m, x0, c.solver, grid);
                } else {
                    const ReducedModel m = reduced_from_json(text);
                    const Eigen::VectorXd x0 = sc.initial.head(std::min<Eigen::Index>(sc.initial.size(), m.size()));
                    if (!sim_params.empty()) {
                        EnrichedModel e{m, params_from_json(read_text(sim_params)), enriched_mode_from_string(sim_mode)};
                        traj = integrate(e, x0, c.solver, grid);
                    } else {
                        traj = integrate(m, x0, c.solver, grid);
                    }
                }
                const fs::path out =
                    fs::path(g.out_dir) / fmt::format("trajectory_{}_scenario_{}.csv", to_string(traj.tag), sc.id + 1);
                write_text(out, trajectory_csv(traj, cli_metadata(c, {{"scenario", std::to_string(sc.id + 1)},
                                                                      {"steps", std::to_string(traj.stats.accepted)},
                                                                      {"rejected", std::to_string(traj.stats.rejected)}})));
                info(g, fmt::format("wrote {} ({} accepted, {} rejected steps)", out.string(), traj.stats.accepted,
                                    traj.stats.rejected));
            }
        } else if (obs_cmd->parsed()) {
            ExperimentConfig c = base_config(g);
            const std::string text = read_text(obs_model);
            const auto times = uniform_observation_times(c.solver.t_final, c.observation_count);
            TruthModel truth;
            int S = 0;
            if (is_format(text, "glvd.detailed/1")) {
                const DetailedModel d = detailed_from_json(text);
                S = d.size();
                truth = d;
            } else {
                const ReducedModel r = reduced_from_json(text);
                if (obs_params.empty()) throw ArgumentError("observing a reduced model requires --params");
                S = r.size();
                truth = EnrichedModel{r, params_from_json(read_text(obs_params)), c.mode};
            }
            const RunSeeds seeds = run_seeds(c.master_seed, 0, obs_s);
            const auto scenarios = sample_scenarios(c.n_calibration + c.n_validation, c.n_calibration, obs_s, S,
                                                    c.ic_range, seeds.scenarios);
            const ObservationSet o =
                synthesize_observations(truth, obs_s, scenarios, times, c.sigma2_eps, c.solver, seeds.noise);
            const fs::path out = output_path(g, obs_out, "observations.json");
            write_text(out, to_json(o));
            fs::path csv = out;
            csv.replace_extension(".csv");
            write_text(csv, observations_csv(o, cli_metadata(c, {{"scenario_seed", std::to_string(seeds.scenarios)},
                                                                 {"noise_seed", std::to_string(seeds.noise)}})));
            info(g, fmt::format("wrote {} and {} ({} observations)", out.string(), csv.string(), o.size()));
        } else if (cal->parsed()) {
            ExperimentConfig c = base_config(g);
            const ReducedModel r = reduced_from_json(read_text(cal_reduced));
            const ObservationSet o = observations_from_json(read_text(cal_obs));
            const int s = r.size();
            const RunSeeds seeds = run_seeds(c.master_seed, 0, s);
            const CalibrationProblem problem(r, o.restrict(Partition::calibration), c.solver, c.mode);
            const PriorSpec prior = PriorSpec::uniform(2 * s, c.prior_lower, c.prior_upper);
            DramConfig dram = c.dram;
            dram.seed = seeds.chain;
            dram.initial_covariance = c.initial_proposal_sd * c.initial_proposal_sd * Eigen::MatrixXd::Identity(2 * s, 2 * s);
            const Eigen::VectorXd init = sample_initial_theta(2 * s, c.init_low, c.init_high, seeds.init);
            debug(g, fmt::format("running {} DRAM iterations in {} dimensions", dram.iterations, 2 * s));
            const PosteriorChain chain = run_dram(make_log_posterior(problem, prior), init, dram);
            const fs::path out = output_path(g, cal_out, "chain.csv");
            write_text(out, chain_csv(chain, cli_metadata(c, {{"chain_seed", std::to_string(dram.seed)}})));
            fs::path diag = out;
            diag.replace_extension(".json");
            write_text(diag, chain_diagnostics_json(chain, dram));
            for (const auto& w : chain.warnings) info(g, "warning: " + w);
            info(g, fmt::format("wrote {} ({} samples, acceptance {:.3f})", out.string(), chain.size(),
                                chain.acceptance.overall_rate()));
        } else if (val->parsed()) {
            ExperimentConfig c = base_config(g);
            const ReducedModel r = reduced_from_json(read_text(val_reduced));
            const ObservationSet o = observations_from_json(read_text(val_obs));
            const PosteriorChain chain = chain_from_csv(read_text(val_chain));
            const RunSeeds seeds = run_seeds(c.master_seed, 0, r.size());
            const PredictiveEnsemble ens = posterior_predictive(chain, r, o.scenarios(), o.times(), c.ensemble_size,
                                                                o.sigma2(), c.solver, c.mode, seeds.predictive, g.workers);
            const int S = val_detailed_size > 0 ? val_detailed_size : r.parent_size;
            const GammaReport report = compute_gamma_report(o, ens, S, 0, g.workers);
            const std::array<GammaReport, 1> reports{report};
            const auto rows = aggregate_fgamma(reports, c.thresholds);
            const Metadata meta = cli_metadata(c, {{"predictive_seed", std::to_string(seeds.predictive)}});
            const fs::path out = output_path(g, val_out, "gamma.csv");
            write_text(out, gamma_csv(reports, meta));
            fs::path fg = out.parent_path() / "fgamma.csv";
            write_text(fg, fgamma_csv(rows, meta));
            for (const FGammaRow& row : rows) {
                info(g, fmt::format("tau = {:<5} partition = {:<3} f_gamma = {:.4f} ({}/{})", row.tau,
                                    row.partition ? std::string(to_string(*row.partition)).substr(0, 1) : "all",
                                    row.fraction(), row.below, row.total));
            }
        } else if (run->parsed()) {
            ExperimentConfig c = base_config(g);
            const int s = run_s > 0 ? run_s : c.reductions.front();
            const fs::path dir = c.output_directory / fmt::format("run_s{:02}_r{:03}", s, run_realization);
            const RunSummary sum = run_single(c, s, run_realization, dir);
            info(g, fmt::format("wrote {}: coverage95 c = {:.3f}, v = {:.3f}; mse enriched {:.3g} vs reduced {:.3g}",
                                dir.string(), sum.coverage95_calibration, sum.coverage95_validation, sum.mse_enriched,
                                sum.mse_reduced));
        } else if (sweep->parsed()) {
            ExperimentConfig c = base_config(g);
            try {
                const SweepResult res = run_sweep(c, [&g](const std::string& m) { debug(g, m); });
                for (const FGammaRow& row : res.fgamma) {
                    if (!row.partition) continue;
                    info(g, fmt::format("s = {:>3} alpha = {:.2f} tau = {:<5} p = {} f_gamma = {:.4f}", row.reduced_size,
                                        row.alpha(), row.tau, to_string(*row.partition).substr(0, 1), row.fraction()));
                }
                if (!res.failures.empty()) {
                    info(g, fmt::format("{} realization(s) excluded", res.failures.size()));
                    return kPartialSweep;
                }
            } catch (const SweepError& e) {
                std::cerr << "error: " << e.what() << '\n';
                return kPartialSweep;
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const RunError& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return e.numerical() ? kNumericalError : kFailure;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}
