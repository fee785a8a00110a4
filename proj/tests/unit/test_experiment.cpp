#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "glvd/error.hpp"
#include "glvd/experiment.hpp"

using namespace glvd;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig c;
    c.generation.species = 5;
    c.reductions = {2, 3};
    c.n_calibration = 2;
    c.n_validation = 2;
    c.observation_count = 5;
    c.dram.iterations = 3000;
    c.dram.burn_in = 1000;
    c.ensemble_size = 200;
    c.realizations = 2;
    c.plot_points = 11;
    c.plot_draws = 100;
    c.complexity_sizes = {5, 10};
    c.output_directory = out;
    return c;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "glvd-experiment-test" / name;
    fs::remove_all(p);
    return p;
}

std::map<std::string, std::string> csv_files(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") {
            out[fs::relative(e.path(), root).string()] = read_text(e.path());
        }
    }
    return out;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("defaults carry the reference settings") {
    const ExperimentConfig c;
    CHECK(c.generation.species == 10);
    CHECK(c.generation.sigma2_b == 1.0);
    CHECK(c.generation.sigma2_c == 1.0);
    CHECK(c.reductions == std::vector<int>{4});
    CHECK(c.n_calibration == 3);
    CHECK(c.n_validation == 3);
    CHECK(c.observation_count == 10);
    CHECK(c.sigma2_eps == 0.001);
    CHECK(c.prior_lower == -100.0);
    CHECK(c.prior_upper == 0.0);
    CHECK(c.dram.iterations == 50000);
    CHECK(c.dram.burn_in == 10000);
    CHECK(c.ensemble_size == 2000);
    CHECK(c.thresholds == std::vector<double>{0.05, 0.01});
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("config JSON parsing") {
    const ExperimentConfig c = experiment_config_from_json(R"({
        "generation": {"species": 20},
        "reductions": [1, 5, 19],
        "observations": {"count": 4, "sigma2": 0.01},
        "inference": {"iterations": 1000, "burn_in": 100, "mode": "implicit", "prior": [-10, 0]},
        "truth": {"kind": "enriched"},
        "sweep": {"realizations": 3, "master_seed": 99},
        "solver": {"max_step": null},
        "workers": 2
    })");
    CHECK(c.generation.species == 20);
    CHECK(c.reductions == std::vector<int>{1, 5, 19});
    CHECK(c.observation_count == 4);
    CHECK(c.sigma2_eps == 0.01);
    CHECK(c.dram.iterations == 1000);
    CHECK(c.mode == EnrichedMode::implicit);
    CHECK(c.prior_lower == -10.0);
    CHECK(c.truth == TruthKind::enriched);
    CHECK(c.master_seed == 99);
    CHECK(c.workers == 2);
    CHECK(c.n_calibration == 3);  // untouched default

    // canonical form parses back to the same config
    const ExperimentConfig again = experiment_config_from_json(to_json(c));
    CHECK(to_json(again) == to_json(c));
    CHECK(config_hash(again) == config_hash(c));
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(experiment_config_from_json(R"({"bogus": 1})"), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"generation": {"S": 3}})"), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"reductions": [10]})"), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"observations": {"sigma2": -1}})"), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"inference": {"iterations": "many"}})"), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json("{"), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(R"({"truth": {"kind": "oracle"}})"), ConfigError);
}

TEST_CASE("config hash ignores output location and workers") {
    ExperimentConfig a;
    ExperimentConfig b = a;
    b.output_directory = "/elsewhere";
    b.workers = 4;
    CHECK(config_hash(a) == config_hash(b));
    b.master_seed = 2;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("run seeds are distinct streams") {
    const RunSeeds a = run_seeds(1, 0, 4), b = run_seeds(1, 1, 4), c = run_seeds(1, 0, 3);
    CHECK(a.model != b.model);
    CHECK(a.model == c.model);          // same realization shares the detailed model
    CHECK(a.scenarios == c.scenarios);  // and its scenarios
    CHECK(a.noise != c.noise);
    CHECK(a.chain != a.init);
}

TEST_CASE("single run writes the documented artifacts") {
    const fs::path dir = scratch("single");
    ExperimentConfig c = small_config(dir);
    c.write_svg = true;
    const RunSummary sum = run_single(c, 2, 0, dir);
    for (const char* f : {"config.json", "detailed.json", "reduced.json", "observations.json", "observations.csv",
                          "chain.csv", "chain_diagnostics.json", "gamma.csv", "summary.json"}) {
        CHECK_MESSAGE(fs::exists(dir / f), f);
    }
    for (int k = 1; k <= 4; ++k) {
        CHECK(fs::exists(dir / "trajectories" / ("scenario_" + std::to_string(k) + ".csv")));
        CHECK(fs::exists(dir / "plots" / ("scenario_" + std::to_string(k) + ".svg")));
    }
    CHECK(sum.gamma.entries.size() == 2u * 5u * 4u);
    CHECK(sum.coverage95_calibration >= 0.0);
    CHECK(sum.coverage95_calibration <= 1.0);
    CHECK(sum.theta_mean.size() == 4);
    CHECK_FALSE(sum.theta_true);
    // no absolute paths leak into artifacts
    for (const auto& [name, text] : csv_files(dir)) CHECK(text.find(dir.string()) == std::string::npos);
    CHECK(read_text(dir / "trajectories" / "scenario_1.csv").find("# config_hash: " + config_hash(c)) !=
          std::string::npos);
}

TEST_CASE("single run is byte-for-byte reproducible") {
    const fs::path a = scratch("repro-a"), b = scratch("repro-b");
    ExperimentConfig c = small_config(a);
    c.truth = TruthKind::enriched;
    run_single(c, 3, 1, a);
    run_single(c, 3, 1, b);
    const auto fa = csv_files(a), fb = csv_files(b);
    CHECK(fa.size() >= 6);
    CHECK(fa == fb);
    CHECK(read_text(a / "summary.json") == read_text(b / "summary.json"));
    CHECK(fs::exists(a / "truth_params.json"));
}

TEST_CASE("failing stage leaves a manifest") {
    const fs::path dir = scratch("failure");
    ExperimentConfig c = small_config(dir);
    c.solver.max_steps = 2;
    try {
        run_single(c, 2, 0, dir);
        FAIL("expected a run failure");
    } catch (const RunError& e) {
        CHECK(e.stage() == "observe");
        CHECK(e.numerical());
    }
    CHECK(fs::exists(dir / "failure.json"));
    CHECK(fs::exists(dir / "reduced.json"));
    CHECK_THROWS_AS(run_single(small_config(dir), 5, 0, dir), ConfigError);
}

TEST_CASE("sweep equals independent runs plus aggregation") {
    const fs::path root = scratch("sweep");
    ExperimentConfig c = small_config(root);
    const SweepResult res = run_sweep(c);
    CHECK(res.attempted == 4);
    CHECK(res.failures.empty());
    REQUIRE(res.runs.size() == 4);
    // 2 reductions x 2 thresholds x 3 partition rows
    CHECK(res.fgamma.size() == 12);
    CHECK(fs::exists(root / "fgamma.csv"));
    CHECK(fs::exists(root / "complexity.csv"));
    CHECK(fs::exists(root / "fgamma_S5_tau0.05_c.csv"));
    CHECK(fs::exists(root / "sweep_summary.json"));

    std::vector<GammaReport> reports;
    for (int s : c.reductions) {
        for (int m = 0; m < c.realizations; ++m) {
            const fs::path d = scratch("sweep-single") / std::to_string(s) / std::to_string(m);
            reports.push_back(run_single(c, s, m, d).gamma);
        }
    }
    const auto rows = aggregate_fgamma(reports, c.thresholds);
    REQUIRE(rows.size() == res.fgamma.size());
    for (std::size_t n = 0; n < rows.size(); ++n) {
        CHECK(rows[n].below == res.fgamma[n].below);
        CHECK(rows[n].total == res.fgamma[n].total);
        CHECK(rows[n].tau == res.fgamma[n].tau);
        CHECK(rows[n].partition == res.fgamma[n].partition);
        CHECK(rows[n].realizations == 2);
    }
    // |Gamma| = s T n_phi_p n_M
    CHECK(res.fgamma[0].total == 2u * 5u * 2u * 2u);

    // worker count does not change results
    const fs::path root2 = scratch("sweep-2");
    ExperimentConfig c2 = c;
    c2.output_directory = root2;
    c2.workers = 3;
    run_sweep(c2);
    CHECK(read_text(root / "fgamma.csv") == read_text(root2 / "fgamma.csv"));
    CHECK(read_text(root / "gamma_all.csv") == read_text(root2 / "gamma_all.csv"));
}

TEST_CASE("sweep with too many failures raises") {
    const fs::path root = scratch("sweep-fail");
    ExperimentConfig c = small_config(root);
    c.solver.max_steps = 2;
    try {
        run_sweep(c);
        FAIL("expected a sweep error");
    } catch (const SweepError& e) {
        CHECK(e.partial().failures.size() == 4);
        CHECK(e.partial().runs.empty());
    }
    CHECK(fs::exists(root / "sweep_summary.json"));
}

}
