#include <doctest.h>

#include <cmath>
#include <set>
#include <tuple>

#include "glvd/data.hpp"
#include "glvd/error.hpp"
#include "glvd/io.hpp"
#include "glvd/model_gen.hpp"

using namespace glvd;

namespace {

struct Fixture {
    DetailedModel detailed = generate_detailed({.species = 10, .seed = 21});
    std::vector<double> times = uniform_observation_times(10.0, 10);
    SolverConfig solver;
};

}  // namespace

TEST_SUITE("data") {

TEST_CASE("scenario partition and ranges") {
    const auto sc = sample_scenarios(6, 3, 4, 10, {}, 99);
    REQUIRE(sc.size() == 6);
    int cal = 0;
    for (std::size_t k = 0; k < sc.size(); ++k) {
        CHECK(sc[k].id == static_cast<int>(k));
        CHECK(sc[k].initial.size() == 4);
        CHECK(sc[k].hidden_initial.size() == 6);
        const Eigen::VectorXd full = sc[k].full_initial();
        CHECK((full.array() >= 0.5).all());
        CHECK((full.array() <= 2.0).all());
        cal += sc[k].partition == Partition::calibration;
        CHECK((sc[k].partition == Partition::calibration) == (k < 3));
    }
    CHECK(cal == 3);
}

TEST_CASE("scenario sampling is deterministic and independent of s") {
    const auto a = sample_scenarios(6, 3, 4, 10, {}, 5);
    const auto b = sample_scenarios(6, 3, 4, 10, {}, 5);
    const auto c = sample_scenarios(6, 3, 7, 10, {}, 5);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].initial == b[k].initial);
        CHECK(a[k].full_initial() == c[k].full_initial());
    }
}

TEST_CASE("narrow range gives nearly identical scenarios") {
    const auto sc = sample_scenarios(5, 2, 3, 6, {1.0, 1.0 + 1e-9}, 1);
    for (const auto& s : sc) CHECK((s.full_initial().array() - 1.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("scenario argument errors") {
    CHECK_THROWS_AS(sample_scenarios(1, 1, 2, 4, {}, 0), ArgumentError);
    CHECK_THROWS_AS(sample_scenarios(4, 0, 2, 4, {}, 0), ArgumentError);
    CHECK_THROWS_AS(sample_scenarios(4, 4, 2, 4, {}, 0), ArgumentError);
    CHECK_THROWS_AS(sample_scenarios(4, 2, 2, 4, {2.0, 1.0}, 0), ArgumentError);
    CHECK_THROWS_AS(sample_scenarios(4, 2, 2, 4, {0.0, 1.0}, 0), ArgumentError);
}

TEST_CASE("observation count and keys") {
    Fixture f;
    const auto sc = sample_scenarios(6, 3, 4, 10, {}, 3);
    const ObservationSet obs = synthesize_observations(f.detailed, 4, sc, f.times, 0.001, f.solver, 8);
    CHECK(obs.size() == 4u * 10u * 6u);
    CHECK(obs.n_calibration() == 3);
    CHECK(obs.n_validation() == 3);
    std::set<std::tuple<int, int, int>> keys;
    for (const Observation& o : obs.entries()) keys.insert({o.species, o.time_index, o.scenario});
    CHECK(keys.size() == obs.size());
    const Observation& o = obs.at(2, 5, 4);
    CHECK(o.species == 2);
    CHECK(o.time_index == 5);
    CHECK(o.scenario == 4);
    CHECK(o.time == f.times[5]);
    CHECK(o.partition == Partition::validation);
    CHECK_THROWS_AS(obs.at(4, 0, 0), ArgumentError);
    CHECK_THROWS_AS(obs.at(0, 0, 17), ArgumentError);
}

TEST_CASE("truth values are the detailed trajectory") {
    Fixture f;
    const auto sc = sample_scenarios(2, 1, 3, 10, {}, 4);
    const ObservationSet obs = synthesize_observations(f.detailed, 3, sc, f.times, 0.001, f.solver, 1);
    for (const Scenario& s : sc) {
        const Trajectory tr = integrate(f.detailed, s.full_initial(), f.solver, f.times);
        for (int j = 0; j < 10; ++j) {
            for (int i = 0; i < 3; ++i) CHECK(obs.at(i, j, s.id).truth == tr.states(j, i));
        }
    }
}

TEST_CASE("noise standard deviation matches sigma") {
    Fixture f;
    const auto sc = sample_scenarios(50, 25, 9, 10, {}, 11);
    const ObservationSet obs = synthesize_observations(f.detailed, 9, sc, f.times, 0.001, f.solver, 12);
    REQUIRE(obs.size() >= 4500u);
    // pool a few noise seeds to get past 10^4 residuals
    std::vector<double> res;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const ObservationSet o = synthesize_observations(f.detailed, 9, sc, f.times, 0.001, f.solver, 100 + seed);
        for (const Observation& e : o.entries()) res.push_back(e.value - e.truth);
    }
    REQUIRE(res.size() >= 10000u);
    double m = 0.0, v = 0.0;
    for (double r : res) m += r;
    m /= static_cast<double>(res.size());
    for (double r : res) v += (r - m) * (r - m);
    const double sd = std::sqrt(v / static_cast<double>(res.size() - 1));
    CHECK(std::abs(sd - std::sqrt(0.001)) < 0.05 * std::sqrt(0.001));

    // lag-1 autocorrelation over the flattened index
    double num = 0.0;
    for (std::size_t n = 1; n < res.size(); ++n) num += (res[n] - m) * (res[n - 1] - m);
    const double r1 = num / v;
    CHECK(std::abs(r1) < 4.0 / std::sqrt(static_cast<double>(res.size())));
}

TEST_CASE("vanishing noise reproduces the truth") {
    Fixture f;
    const auto sc = sample_scenarios(4, 2, 4, 10, {}, 2);
    const ObservationSet obs = synthesize_observations(f.detailed, 4, sc, f.times, 1e-12, f.solver, 2);
    for (const Observation& o : obs.entries()) CHECK(std::abs(o.value - o.truth) < 1e-5);
}

TEST_CASE("synthesis is deterministic and order independent") {
    Fixture f;
    auto sc = sample_scenarios(6, 3, 4, 10, {}, 3);
    const ObservationSet a = synthesize_observations(f.detailed, 4, sc, f.times, 0.001, f.solver, 8);
    const ObservationSet b = synthesize_observations(f.detailed, 4, sc, f.times, 0.001, f.solver, 8);
    CHECK(a == b);
    // observing a subset of scenarios gives the same values for them
    std::vector<Scenario> last(sc.begin() + 3, sc.end());
    const ObservationSet c = synthesize_observations(f.detailed, 4, last, f.times, 0.001, f.solver, 8);
    for (const Observation& o : c.entries()) CHECK(o.value == a.at(o.species, o.time_index, o.scenario).value);
}

TEST_CASE("partitions are disjoint and exhaustive") {
    Fixture f;
    const auto sc = sample_scenarios(6, 2, 4, 10, {}, 3);
    const ObservationSet obs = synthesize_observations(f.detailed, 4, sc, f.times, 0.001, f.solver, 8);
    const ObservationSet c = obs.restrict(Partition::calibration);
    const ObservationSet v = obs.restrict(Partition::validation);
    CHECK(c.size() + v.size() == obs.size());
    CHECK(c.n_calibration() == 2);
    CHECK(c.n_validation() == 0);
    CHECK(v.n_validation() == 4);
    std::set<int> cs, vs;
    for (const auto& o : c.entries()) cs.insert(o.scenario);
    for (const auto& o : v.entries()) vs.insert(o.scenario);
    for (int k : cs) CHECK(vs.count(k) == 0);
    CHECK(cs.size() + vs.size() == 6);
}

TEST_CASE("JSON round trip is bit exact") {
    Fixture f;
    const auto sc = sample_scenarios(6, 3, 4, 10, {}, 3);
    const ObservationSet obs = synthesize_observations(f.detailed, 4, sc, f.times, 0.001, f.solver, 8);
    const ObservationSet back = observations_from_json(to_json(obs));
    CHECK(back == obs);
    CHECK(to_json(back) == to_json(obs));
}

TEST_CASE("enriched truth model") {
    Fixture f;
    const ReducedModel r = subsample_reduced(f.detailed, 3);
    DiscrepancyParams p{Eigen::Vector3d(-0.5, -0.2, -0.1), Eigen::Vector3d(-0.3, -0.1, -0.4)};
    const auto sc = sample_scenarios(2, 1, 3, 10, {}, 4);
    const ObservationSet obs = synthesize_observations(EnrichedModel{r, p}, 3, sc, f.times, 0.001, f.solver, 1);
    const Trajectory tr = integrate(EnrichedModel{r, p}, sc[0].initial, f.solver, f.times);
    CHECK(obs.at(1, 3, 0).truth == tr.states(3, 1));
}

TEST_CASE("observation set validates its layout") {
    CHECK_THROWS_AS(ObservationSet(1, {1.0}, 0.0, {}, {}), ArgumentError);
    Scenario s;
    s.initial = Eigen::VectorXd::Ones(1);
    CHECK_THROWS_AS(ObservationSet(1, {1.0}, 0.1, {s}, {}), ArgumentError);
    Observation o;
    o.species = 0;
    o.time_index = 0;
    o.scenario = 3;  // wrong scenario id
    CHECK_THROWS_AS(ObservationSet(1, {1.0}, 0.1, {s}, {o}), ArgumentError);
    CHECK(partition_from_string("v") == Partition::validation);
    CHECK_THROWS_AS(partition_from_string("x"), ArgumentError);
}

}
