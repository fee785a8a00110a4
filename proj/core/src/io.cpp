#include "glvd/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "glvd/error.hpp"

namespace glvd {

using json = nlohmann::json;

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json mat_json(const Eigen::MatrixXd& m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
    }
    return flat;
}

Eigen::MatrixXd json_mat(const json& j, Eigen::Index n) {
    const auto flat = j.get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != n * n) {
        throw ArgumentError(fmt::format("interaction matrix has {} entries, expected {}", flat.size(), n * n));
    }
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) m(i, k) = flat[static_cast<std::size_t>(i * n + k)];
    }
    return m;
}

json parse(std::string_view text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ArgumentError(fmt::format("malformed {} JSON: {}", what, e.what()));
    }
}

void expect_format(const json& j, std::string_view format) {
    if (!j.contains("format") || j.at("format").get<std::string>() != format) {
        throw ArgumentError(fmt::format("expected a '{}' document", format));
    }
}

template <class F>
auto guarded(std::string_view what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ArgumentError(fmt::format("invalid {} document: {}", what, e.what()));
    }
}

json scenario_json(const Scenario& sc) {
    return {{"id", sc.id + 1},
            {"partition", std::string(to_string(sc.partition))},
            {"initial", vec_json(sc.initial)},
            {"hidden_initial", vec_json(sc.hidden_initial)}};
}

Scenario json_scenario(const json& j) {
    Scenario sc;
    sc.id = j.at("id").get<int>() - 1;
    sc.partition = partition_from_string(j.at("partition").get<std::string>());
    sc.initial = json_vec(j.at("initial"));
    sc.hidden_initial = j.contains("hidden_initial") ? json_vec(j.at("hidden_initial")) : Eigen::VectorXd();
    return sc;
}

std::string header(const Metadata& meta) {
    std::string out;
    for (const auto& [k, v] : meta) out += fmt::format("# {}: {}\n", k, v);
    return out;
}

std::string num(double v) { return fmt::format("{}", v); }

}  // namespace

std::string library_version() {
#ifdef GLVD_VERSION
    return GLVD_VERSION;
#else
    return "unknown";
#endif
}

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

std::string to_json(const DetailedModel& model) {
    json j = {{"format", "glvd.detailed/1"},
              {"size", model.size()},
              {"growth", vec_json(model.growth.values())},
              {"interactions", mat_json(model.interactions.entries())},
              {"generation",
               {{"species", model.config.species},
                {"sigma2_b", model.config.sigma2_b},
                {"sigma2_c", model.config.sigma2_c}}},
              {"seed", model.config.seed}};
    return j.dump(2);
}

DetailedModel detailed_from_json(std::string_view text) {
    const json j = parse(text, "detailed model");
    expect_format(j, "glvd.detailed/1");
    return guarded("detailed model", [&] {
        DetailedModel m;
        const int n = j.at("size").get<int>();
        m.growth = GrowthRates(json_vec(j.at("growth")));
        m.interactions = InteractionMatrix(json_mat(j.at("interactions"), n));
        const json& g = j.at("generation");
        m.config.species = g.at("species").get<int>();
        m.config.sigma2_b = g.at("sigma2_b").get<double>();
        m.config.sigma2_c = g.at("sigma2_c").get<double>();
        m.config.seed = j.at("seed").get<std::uint64_t>();
        if (m.growth.size() != n || m.config.species != n) {
            throw ArgumentError("detailed model size does not match its arrays");
        }
        return m;
    });
}

std::string to_json(const ReducedModel& model) {
    json j = {{"format", "glvd.reduced/1"},
              {"size", model.size()},
              {"parent_size", model.parent_size},
              {"growth", vec_json(model.growth.values())},
              {"interactions", mat_json(model.interactions.entries())}};
    return j.dump(2);
}

ReducedModel reduced_from_json(std::string_view text) {
    const json j = parse(text, "reduced model");
    expect_format(j, "glvd.reduced/1");
    return guarded("reduced model", [&] {
        ReducedModel m;
        const int n = j.at("size").get<int>();
        m.parent_size = j.at("parent_size").get<int>();
        m.growth = GrowthRates(json_vec(j.at("growth")));
        m.interactions = InteractionMatrix(json_mat(j.at("interactions"), n));
        if (m.growth.size() != n) throw ArgumentError("reduced model size does not match its arrays");
        return m;
    });
}

std::string to_json(const DiscrepancyParams& params) {
    json j = {{"format", "glvd.discrepancy/1"},
              {"delta0", vec_json(params.delta0)},
              {"delta1", vec_json(params.delta1)}};
    return j.dump(2);
}

DiscrepancyParams params_from_json(std::string_view text) {
    const json j = parse(text, "discrepancy");
    expect_format(j, "glvd.discrepancy/1");
    return guarded("discrepancy", [&] {
        DiscrepancyParams p{json_vec(j.at("delta0")), json_vec(j.at("delta1"))};
        p.validate();
        return p;
    });
}

std::string to_json(std::span<const Scenario> scenarios) {
    json arr = json::array();
    for (const Scenario& sc : scenarios) arr.push_back(scenario_json(sc));
    return json{{"format", "glvd.scenarios/1"}, {"scenarios", arr}}.dump(2);
}

std::vector<Scenario> scenarios_from_json(std::string_view text) {
    const json j = parse(text, "scenarios");
    expect_format(j, "glvd.scenarios/1");
    return guarded("scenarios", [&] {
        std::vector<Scenario> out;
        for (const json& s : j.at("scenarios")) out.push_back(json_scenario(s));
        return out;
    });
}

std::string to_json(const ObservationSet& obs) {
    json scenarios = json::array();
    for (const Scenario& sc : obs.scenarios()) scenarios.push_back(scenario_json(sc));
    json entries = json::array();
    for (const Observation& o : obs.entries()) {
        entries.push_back({{"i", o.species + 1},
                           {"j", o.time_index + 1},
                           {"k", o.scenario + 1},
                           {"time", o.time},
                           {"value", o.value},
                           {"truth", o.truth},
                           {"partition", std::string(to_string(o.partition))}});
    }
    json j = {{"format", "glvd.observations/1"},
              {"species", obs.species()},
              {"times", obs.times()},
              {"sigma2", obs.sigma2()},
              {"n_calibration", obs.n_calibration()},
              {"n_validation", obs.n_validation()},
              {"scenarios", scenarios},
              {"entries", entries}};
    return j.dump(1);
}

ObservationSet observations_from_json(std::string_view text) {
    const json j = parse(text, "observations");
    expect_format(j, "glvd.observations/1");
    return guarded("observations", [&] {
        std::vector<Scenario> scenarios;
        for (const json& s : j.at("scenarios")) scenarios.push_back(json_scenario(s));
        std::vector<Observation> entries;
        for (const json& e : j.at("entries")) {
            Observation o;
            o.species = e.at("i").get<int>() - 1;
            o.time_index = e.at("j").get<int>() - 1;
            o.scenario = e.at("k").get<int>() - 1;
            o.time = e.at("time").get<double>();
            o.value = e.at("value").get<double>();
            o.truth = e.at("truth").get<double>();
            o.partition = partition_from_string(e.at("partition").get<std::string>());
            entries.push_back(o);
        }
        ObservationSet out(j.at("species").get<int>(), j.at("times").get<std::vector<double>>(),
                           j.at("sigma2").get<double>(), std::move(scenarios), std::move(entries));
        if (out.n_calibration() != j.at("n_calibration").get<int>() ||
            out.n_validation() != j.at("n_validation").get<int>()) {
            throw ArgumentError("partition counts do not match the scenario tags");
        }
        return out;
    });
}

std::string chain_diagnostics_json(const PosteriorChain& chain, const DramConfig& config) {
    const AcceptanceStats& a = chain.acceptance;
    json j = {{"format", "glvd.chain-diagnostics/1"},
              {"samples", chain.size()},
              {"dimension", chain.dimension()},
              {"seed", chain.seed},
              {"burn_in", chain.burn_in},
              {"thin", chain.thin},
              {"acceptance",
               {{"iterations", a.iterations},
                {"stage1_proposals", a.stage1_proposals},
                {"stage1_accepted", a.stage1_accepted},
                {"stage2_proposals", a.stage2_proposals},
                {"stage2_accepted", a.stage2_accepted},
                {"stage1_rate", a.stage1_rate()},
                {"stage2_rate", a.stage2_rate()},
                {"overall_rate", a.overall_rate()}}},
              {"stalled", chain.stalled},
              {"warnings", chain.warnings},
              {"config",
               {{"iterations", config.iterations},
                {"burn_in", config.burn_in},
                {"thin", config.thin},
                {"delayed_rejection", config.delayed_rejection},
                {"dr_scale", config.dr_scale},
                {"adapt", config.adapt},
                {"adapt_start", config.adapt_start},
                {"adapt_interval", config.adapt_interval},
                {"adapt_scale", config.adapt_scale},
                {"regularization", config.regularization},
                {"stall_window", config.stall_window}}}};
    return j.dump(2);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(fmt::format("write to '{}' failed", path.string()));
}

std::string trajectory_csv(const Trajectory& traj, const Metadata& meta) {
    std::string out = header(meta);
    out += "time";
    for (Eigen::Index i = 0; i < traj.states.cols(); ++i) out += fmt::format(",x_{}", i + 1);
    out += ",model\n";
    for (std::size_t r = 0; r < traj.times.size(); ++r) {
        out += num(traj.times[r]);
        for (Eigen::Index i = 0; i < traj.states.cols(); ++i) {
            out += ',';
            out += num(traj.states(static_cast<Eigen::Index>(r), i));
        }
        out += ',';
        out += to_string(traj.tag);
        out += '\n';
    }
    return out;
}

std::string observations_csv(const ObservationSet& obs, const Metadata& meta) {
    std::string out = header(meta);
    out += "species,time_index,scenario,partition,time,value,truth\n";
    for (const Observation& o : obs.entries()) {
        out += fmt::format("{},{},{},{},{},{},{}\n", o.species + 1, o.time_index + 1, o.scenario + 1,
                           to_string(o.partition), num(o.time), num(o.value), num(o.truth));
    }
    return out;
}

std::string chain_csv(const PosteriorChain& chain, const Metadata& meta) {
    std::string out = header(meta);
    const int s = chain.dimension() / 2;
    for (int i = 0; i < s; ++i) out += fmt::format("delta0_{},", i + 1);
    for (int i = 0; i < s; ++i) out += fmt::format("delta1_{},", i + 1);
    out += "log_posterior\n";
    for (Eigen::Index r = 0; r < chain.samples.rows(); ++r) {
        for (Eigen::Index c = 0; c < chain.samples.cols(); ++c) {
            out += num(chain.samples(r, c));
            out += ',';
        }
        out += num(chain.log_posterior[static_cast<std::size_t>(r)]);
        out += '\n';
    }
    return out;
}

PosteriorChain chain_from_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<std::vector<double>> rows;
    std::size_t columns = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
            saw_header = true;
            continue;
        }
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ArgumentError(fmt::format("bad number '{}' in chain CSV", cell));
            }
        }
        if (row.size() != columns) throw ArgumentError("ragged row in chain CSV");
        rows.push_back(std::move(row));
    }
    if (!saw_header || columns < 3 || (columns - 1) % 2 != 0) throw ArgumentError("not a chain CSV");
    PosteriorChain chain;
    const auto d = static_cast<Eigen::Index>(columns - 1);
    chain.samples.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (Eigen::Index c = 0; c < d; ++c) chain.samples(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
        chain.log_posterior.push_back(rows[r].back());
    }
    return chain;
}

std::string gamma_csv(std::span<const GammaReport> reports, const Metadata& meta) {
    std::string out = header(meta);
    out += "S,s,realization,partition,species,time_index,scenario,observed,gamma,bandwidth\n";
    for (const GammaReport& r : reports) {
        for (const GammaEntry& e : r.entries) {
            out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.detailed_size, r.reduced_size, r.realization,
                               e.partition == Partition::calibration ? "c" : "v", e.species + 1, e.time_index + 1,
                               e.scenario + 1, num(e.observed), num(e.gamma), r.bandwidth_rule);
        }
    }
    return out;
}

std::string fgamma_csv(std::span<const FGammaRow> rows, const Metadata& meta) {
    std::string out = header(meta);
    out += "S,s,alpha,partition,n_M,tau,below,total,f_gamma\n";
    for (const FGammaRow& r : rows) {
        const char* p = !r.partition ? "all" : (*r.partition == Partition::calibration ? "c" : "v");
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.detailed_size, r.reduced_size, num(r.alpha()), p,
                           r.realizations, num(r.tau), r.below, r.total, num(r.fraction()));
    }
    return out;
}

std::vector<ComplexityRow> complexity_table(std::span<const int> sizes) {
    std::vector<ComplexityRow> rows;
    for (int S : sizes) {
        for (int s = 1; s < S; ++s) rows.push_back({S, s, relative_complexity(S, s)});
    }
    return rows;
}

std::string complexity_csv(std::span<const ComplexityRow> rows, const Metadata& meta) {
    std::string out = header(meta);
    out += "S,s,alpha,terms_added,terms_omitted,relative_complexity\n";
    for (const ComplexityRow& r : rows) {
        const int S = r.detailed_size, s = r.reduced_size;
        out += fmt::format("{},{},{},{},{},{}\n", S, s, num(static_cast<double>(s) / S), 2 * s,
                           S * S - s * s + (S - s), num(r.value));
    }
    return out;
}

}  // namespace glvd
