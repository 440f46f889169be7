#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "reset/filters.hpp"
#include "reset/log.hpp"
#include "reset/pvalue_adapter.hpp"
#include "reset/reset.hpp"
#include "reset/simgen.hpp"
#include "tsv.hpp"

namespace resetfdr {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;
using reset::ConfigError;
using reset::ControlMode;
using reset::DataError;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ControlMode parse_mode(const std::string& m) { return m == "fdp" ? ControlMode::fdp : ControlMode::fdr; }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Options

struct EnsembleKnobs {
    int folds = 3;
    int repetitions = 10;
    double alpha0 = 0.5;
    std::size_t min_positive = 50;
    std::size_t knn = 20;
    double sideinfo_cutoff = 0.01;
    int rf_trees = 500;
    int threads = 0;

    void add(CLI::App& app) {
        auto* g = app.add_option_group("ensemble");
        g->add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 100));
        g->add_option("--repetitions", repetitions, "Cross-validation repetitions")->check(CLI::Range(1, 1000));
        g->add_option("--alpha0", alpha0, "Level of the initial positive set");
        g->add_option("--min-positive", min_positive, "Minimum size of the positive set");
        g->add_option("--knn", knn, "Neighbours for the zero-score feature");
        g->add_option("--sideinfo-cutoff", sideinfo_cutoff, "p-value cutoff for side-information screening");
        g->add_option("--rf-trees", rf_trees, "Trees per random forest")->check(CLI::PositiveNumber);
        app.add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    }

    reset::EnsembleConfig config() const {
        reset::EnsembleConfig c;
        c.folds = folds;
        c.repetitions = repetitions;
        c.alpha0 = alpha0;
        c.min_positive = min_positive;
        c.knn = knn;
        c.sideinfo_p_cutoff = sideinfo_cutoff;
        c.threads = threads;
        for (auto& spec : c.grid) spec.rf_trees = rf_trees;
        return c;
    }

    json to_json() const {
        return {{"folds", folds},
                {"repetitions", repetitions},
                {"alpha0", alpha0},
                {"min_positive", min_positive},
                {"knn", knn},
                {"sideinfo_cutoff", sideinfo_cutoff},
                {"rf_trees", rf_trees}};
    }

    void load(const json& j) {
        folds = j.value("folds", folds);
        repetitions = j.value("repetitions", repetitions);
        alpha0 = j.value("alpha0", alpha0);
        min_positive = j.value("min_positive", min_positive);
        knn = j.value("knn", knn);
        sideinfo_cutoff = j.value("sideinfo_cutoff", sideinfo_cutoff);
        rf_trees = j.value("rf_trees", rf_trees);
    }
};

struct RegionKnobs {
    double a = 0.5;
    double b1 = 0.5;
    double b2 = 1.0;

    void add(CLI::App& app) {
        app.add_option("--a", a, "Target region [0,a) for p-value input");
        app.add_option("--b1", b1, "Decoy region (b1,b2] for p-value input");
        app.add_option("--b2", b2, "Decoy region (b1,b2] for p-value input");
    }
    reset::ConversionRegions regions() const { return {a, b1, b2}; }
};

struct ResetOptions {
    std::string input;
    std::string out = ".";
    std::string replay;
    double alpha = 0.1;
    std::string mode = "fdr";
    std::optional<double> gamma;
    double s = 0.5;
    RegionKnobs regions;
    std::optional<double> c0;
    std::uint64_t seed = 1;
    bool deterministic_fdpsd = false;
    EnsembleKnobs ensemble;

    json config_json() const {
        json j{{"alpha", alpha},
               {"mode", mode},
               {"gamma", gamma ? json(*gamma) : json(nullptr)},
               {"s", s},
               {"a", regions.a},
               {"b1", regions.b1},
               {"b2", regions.b2},
               {"c0", c0 ? json(*c0) : json(nullptr)},
               {"seed", seed},
               {"deterministic_fdpsd", deterministic_fdpsd},
               {"ensemble", ensemble.to_json()}};
        return j;
    }

    void load(const json& j) {
        alpha = j.value("alpha", alpha);
        mode = j.value("mode", mode);
        if (j.contains("gamma") && !j["gamma"].is_null()) gamma = j["gamma"].get<double>();
        s = j.value("s", s);
        regions.a = j.value("a", regions.a);
        regions.b1 = j.value("b1", regions.b1);
        regions.b2 = j.value("b2", regions.b2);
        if (j.contains("c0") && !j["c0"].is_null()) c0 = j["c0"].get<double>();
        seed = j.value("seed", seed);
        deterministic_fdpsd = j.value("deterministic_fdpsd", deterministic_fdpsd);
        if (j.contains("ensemble")) ensemble.load(j["ensemble"]);
    }
};

struct FilterOptions {
    std::string input;
    std::string out = ".";
    std::string method;
    double alpha = 0.1;
    std::optional<double> gamma;
    RegionKnobs regions;
    std::optional<double> c0;
    std::uint64_t seed = 1;
    bool deterministic_fdpsd = false;
};

struct SimOptions {
    std::string sim;
    std::string scenario;
    std::size_t runs = 1;
    std::uint64_t seed = 1;
    std::string out = ".";
    std::optional<std::size_t> m;
    std::size_t d = 100;
    int grid = 50;
    double false_null_fraction = 0.0;
    double signal = 2.0;
    double null_target_prob = 0.5;

    void add(CLI::App& app) {
        app.add_option("--sim", sim, "Generator")
            ->required()
            ->check(CLI::IsMember({"geometric", "betamix", "competition"}));
        app.add_option("--scenario", scenario, "Geometric scenario: circle_center|circle_corner|ellipse (or a|b|c)");
        app.add_option("--runs", runs, "Number of replicates")->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "Master seed");
        app.add_option("--out", out, "Output directory");
        auto* g = app.add_option_group("generator");
        g->add_option("--m", m, "Hypotheses per table (betamix, competition)")->check(CLI::PositiveNumber);
        g->add_option("--d", d, "Side-information columns (betamix)")->check(CLI::Range(2, 100000));
        g->add_option("--grid", grid, "Lattice points per axis (geometric)")->check(CLI::Range(2, 10000));
        g->add_option("--false-null-fraction", false_null_fraction, "Fraction of false nulls (competition)")
            ->check(CLI::Range(0.0, 1.0));
        g->add_option("--signal", signal, "Mean shift of false nulls (competition)");
        g->add_option("--null-target-prob", null_target_prob, "P(target win) for a true null (competition)")
            ->check(CLI::Range(0.0, 1.0));
    }

    void check() const {
        if (sim == "geometric") {
            if (!scenario.empty()) (void)reset::parse_scenario(scenario);
        } else if (!scenario.empty()) {
            throw UsageError("--scenario applies only to --sim geometric");
        }
    }

    json to_json() const {
        json j{{"sim", sim}, {"runs", runs}, {"seed", seed}};
        if (sim == "geometric") {
            j["scenario"] = reset::scenario_name(reset::parse_scenario(scenario.empty() ? "a" : scenario));
            j["grid"] = grid;
        } else if (sim == "betamix") {
            j["m"] = m.value_or(2000);
            j["d"] = d;
        } else {
            j["m"] = m.value_or(500);
            j["false_null_fraction"] = false_null_fraction;
            j["signal"] = signal;
            j["null_target_prob"] = null_target_prob;
        }
        return j;
    }
};

struct ValidateOptions {
    SimOptions sim;
    std::string method = "reset";
    std::vector<double> alphas{0.05, 0.1, 0.2};
    std::string mode = "fdr";
    std::optional<double> gamma;
    double s = 0.5;
    RegionKnobs regions;
    std::optional<double> c0;
    bool deterministic_fdpsd = false;
    EnsembleKnobs ensemble;
};

// ---------------------------------------------------------------------------
// Shared pieces

/// The competition form of an input: converted when it holds p-values.
struct Competition {
    reset::HypothesisTable table;
    std::vector<std::size_t> rows;  ///< input row of each table row
    bool converted = false;
    double c0 = 0.5;
};

Competition to_competition(const InputTable& input, const RegionKnobs& knobs, std::optional<double> c0) {
    Competition out;
    if (input.kind == InputKind::pvalue) {
        const auto regions = knobs.regions();
        auto conv = reset::convert_pvalues(input.pvalue_table(), regions);
        out.table = std::move(conv.table);
        out.rows = std::move(conv.kept);
        out.converted = true;
        out.c0 = c0.value_or(reset::null_win_prob(regions));
    } else {
        out.table = input.competition_table();
        out.rows.resize(input.size());
        std::iota(out.rows.begin(), out.rows.end(), std::size_t{0});
        out.c0 = c0.value_or(0.5);
    }
    return out;
}

/// Per-input-row output columns.
struct RowReport {
    std::vector<double> rescored;
    std::vector<bool> discovered;
    std::vector<std::string> status;

    explicit RowReport(std::size_t n, const std::string& initial)
        : rescored(n, kNaN), discovered(n, false), status(n, initial) {}
};

void write_discoveries(const fs::path& path, const InputTable& input, const RowReport& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path.string() + "'");
    f << "id\tscore\trescored\tdiscovered\tstatus\n";
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double score = input.kind == InputKind::pvalue ? input.pvalues[i] : input.scores[i];
        f << input.ids[i] << '\t' << format_double(score) << '\t' << format_double(rows.rescored[i]) << '\t'
          << (rows.discovered[i] ? 1 : 0) << '\t' << rows.status[i] << '\n';
    }
    if (!f) throw DataError("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path.string() + "'");
    f << j.dump(2) << '\n';
    if (!f) throw DataError("failed writing '" + path.string() + "'");
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

json input_json(const std::string& path, const InputTable& input) {
    return {{"path", path},
            {"fnv1a64", file_digest(path)},
            {"kind", input.kind == InputKind::pvalue ? "pvalue" : "competition"},
            {"rows", input.size()},
            {"side_info", input.side_names}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// RESET

struct ResetRun {
    Competition comp;
    reset::ResetConfig config;
    reset::Rescoring stage;
    reset::ResetResult result;
    std::vector<std::size_t> discoveries;  ///< input rows
};

ResetRun execute_reset(const InputTable& input, const ResetOptions& o, const reset::SeedSpec& seed) {
    if (o.mode == "fdp" && !o.gamma) throw UsageError("--mode fdp requires --gamma");
    ResetRun run;
    run.comp = to_competition(input, o.regions, o.c0);
    auto& cfg = run.config;
    cfg.s = o.s;
    cfg.c0 = run.comp.c0;
    cfg.mode = parse_mode(o.mode);
    cfg.alpha = o.alpha;
    cfg.gamma = o.gamma.value_or(0.1);
    cfg.seed = seed;
    cfg.deterministic_fdpsd = o.deterministic_fdpsd;
    cfg.ensemble = o.ensemble.config();
    cfg.validate();
    cfg.ensemble.validate();
    run.stage = reset::rescore_table(run.comp.table, cfg);
    run.result = reset::finalize(run.stage, cfg.mode, cfg.alpha, cfg.gamma, cfg.seed, cfg.deterministic_fdpsd);
    for (auto r : run.result.list.discoveries) run.discoveries.push_back(run.comp.rows[r]);
    return run;
}

int cmd_reset(const ResetOptions& o, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    if (o.input.empty()) throw UsageError("reset: an input file is required");
    const auto input = read_tsv(o.input);
    const auto run = execute_reset(input, o, reset::SeedSpec(o.seed));
    const auto& stage = run.stage;
    const auto& table = run.comp.table;

    RowReport rows(input.size(), run.comp.converted ? "outside_regions" : "");
    for (auto r : run.comp.rows) rows.status[r] = "zero_score";
    const bool have_rescored = !stage.ensemble.rescored.empty();
    for (std::size_t k = 0; k < stage.nonzero.size(); ++k) {
        const auto r = run.comp.rows[stage.nonzero[k]];
        if (have_rescored) rows.rescored[r] = stage.ensemble.rescored[k];
        rows.status[r] = table.labels()[stage.nonzero[k]] == reset::kTarget ? "target" : "decoy";
    }
    for (auto k : stage.pseudo.training) rows.status[run.comp.rows[stage.nonzero[k]]] = "training_decoy";
    for (auto r : run.discoveries) rows.discovered[r] = true;

    std::size_t pseudo_decoys = 0;
    for (auto l : stage.pseudo_targets.labels()) pseudo_decoys += l == reset::kDecoy ? 1 : 0;

    json passes = json::array();
    for (const auto& p : stage.ensemble.passes) {
        passes.push_back({{"winner", run.config.ensemble.grid[p.winner].name()},
                          {"counts", p.counts},
                          {"positive_size", p.positive_size},
                          {"positive_alpha", p.positive_alpha}});
    }
    json retained = json::array();
    for (auto j : stage.ensemble.retained) retained.push_back(input.side_names[static_cast<std::size_t>(j)]);

    const auto dir = prepare_out(o.out);
    write_discoveries(dir / "discoveries.tsv", input, rows);
    json doc{{"command", "reset"},
             {"input", input_json(o.input, input)},
             {"config", o.config_json()},
             {"resolved",
              {{"c0", run.config.c0},
               {"c", stage.c},
               {"selection_c", run.config.s > 0.0 ? reset::selection_c(run.config.c0, run.config.s) : run.config.c0},
               {"converted", run.comp.converted}}},
             {"counts",
              {{"input", input.size()},
               {"tested", table.size()},
               {"zero_score", table.size() - stage.nonzero.size()},
               {"training_decoys", stage.pseudo.training.size()},
               {"pseudo_targets", stage.pseudo.pseudo_targets.size()},
               {"pseudo_target_decoys", pseudo_decoys},
               {"cutoff", run.result.list.cutoff},
               {"discoveries", run.discoveries.size()}}},
             {"ensemble",
              {{"skipped", stage.ensemble.skipped},
               {"retained", retained},
               {"knn_feature", stage.ensemble.knn_feature},
               {"ordering", stage.ensemble.ordering},
               {"passes", passes}}},
             {"timing", {{"seconds", seconds_since(t0)}}}};
    write_json(dir / "run.json", doc);
    out << run.discoveries.size() << " discoveries among " << stage.pseudo.pseudo_targets.size()
        << " pseudo targets (" << o.mode << ", alpha=" << o.alpha << ", c=" << stage.c << ")\n";
    return kOk;
}

/// Fills `o` from a previous run.json; explicit flags parsed afterwards win.
void load_replay(const std::string& path, ResetOptions& o) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open replay file '" + path + "'");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw DataError("replay file '" + path + "': " + e.what());
    }
    if (j.value("command", "") != "reset" || !j.contains("config")) {
        throw DataError("replay file '" + path + "' is not a reset run.json");
    }
    try {
        o.load(j["config"]);
        if (j.contains("input")) o.input = j["input"].value("path", o.input);
    } catch (const json::exception& e) {
        throw DataError("replay file '" + path + "': " + e.what());
    }
}

void check_replay_digest(const std::string& replay, const std::string& input) {
    std::ifstream f(replay);
    const auto j = json::parse(f);
    const auto want = j["input"].value("fnv1a64", "");
    if (!want.empty() && want != file_digest(input)) {
        throw DataError("input '" + input + "' differs from the file recorded in '" + replay + "'");
    }
}

// ---------------------------------------------------------------------------
// Bare filters

struct FilterRun {
    std::vector<std::size_t> discoveries;  ///< input rows
    std::size_t cutoff = 0;
    std::size_t tested = 0;
    std::optional<Competition> comp;
};

FilterRun execute_filter(const InputTable& input, const std::string& method, double alpha,
                         std::optional<double> gamma, const RegionKnobs& regions, std::optional<double> c0,
                         const reset::SeedSpec& seed, bool deterministic_fdpsd) {
    FilterRun run;
    const bool pvalue_method = method == "bh" || method == "grsd";
    if ((method == "grsd" || method == "fdpsd") && !gamma) throw UsageError("--method " + method + " requires --gamma");
    if (pvalue_method) {
        if (input.kind != InputKind::pvalue) throw DataError("--method " + method + " needs a pvalue column");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0,1]");
        reset::DiscoveryList found;
        if (method == "bh") {
            found = reset::bh(input.pvalues, alpha);
        } else {
            if (!(*gamma > 0.0 && *gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
            found = reset::gr_sd(input.pvalues, alpha, *gamma);
        }
        run.discoveries = found.discoveries;
        run.cutoff = found.cutoff;
        run.tested = input.size();
        return run;
    }
    run.comp = to_competition(input, regions, c0);
    const auto& table = run.comp->table;
    run.tested = table.size();
    reset::FilterParams params{alpha, gamma.value_or(0.1), run.comp->c0,
                               method == "fdpsd" ? ControlMode::fdp : ControlMode::fdr};
    params.validate();
    if (table.empty()) return run;
    auto tie = seed.stream(reset::Stream::tie_break);
    const auto ranked = reset::RankedLabels::rank(table.labels(), table.scores(), tie);
    reset::DiscoveryList found;
    if (method == "fdpsd") {
        auto coin = seed.stream(reset::Stream::coinflip);
        found = reset::fdp_sd(ranked, params, coin, reset::FdpSdOptions{!deterministic_fdpsd});
    } else {
        found = reset::seqstep(ranked, params, method == "seqstep+");
    }
    for (auto r : found.discoveries) run.discoveries.push_back(run.comp->rows[r]);
    run.cutoff = found.cutoff;
    return run;
}

int cmd_filter(const FilterOptions& o, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto input = read_tsv(o.input);
    const auto run = execute_filter(input, o.method, o.alpha, o.gamma, o.regions, o.c0, reset::SeedSpec(o.seed),
                                    o.deterministic_fdpsd);
    RowReport rows(input.size(), "tested");
    if (run.comp) {
        for (auto& s : rows.status) s = "outside_regions";
        for (std::size_t t = 0; t < run.comp->table.size(); ++t) {
            rows.status[run.comp->rows[t]] = run.comp->table.labels()[t] == reset::kTarget ? "target" : "decoy";
        }
    }
    for (auto r : run.discoveries) rows.discovered[r] = true;

    const auto dir = prepare_out(o.out);
    write_discoveries(dir / "discoveries.tsv", input, rows);
    json config{{"method", o.method},
                {"alpha", o.alpha},
                {"gamma", o.gamma ? json(*o.gamma) : json(nullptr)},
                {"a", o.regions.a},
                {"b1", o.regions.b1},
                {"b2", o.regions.b2},
                {"c0", o.c0 ? json(*o.c0) : json(nullptr)},
                {"seed", o.seed},
                {"deterministic_fdpsd", o.deterministic_fdpsd}};
    json doc{{"command", "filter"},
             {"input", input_json(o.input, input)},
             {"config", config},
             {"resolved", {{"c", run.comp ? json(run.comp->c0) : json(nullptr)}}},
             {"counts",
              {{"input", input.size()},
               {"tested", run.tested},
               {"cutoff", run.cutoff},
               {"discoveries", run.discoveries.size()}}},
             {"timing", {{"seconds", seconds_since(t0)}}}};
    write_json(dir / "run.json", doc);
    out << run.discoveries.size() << " discoveries (" << o.method << ", alpha=" << o.alpha << ")\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// Simulation

struct Simulated {
    InputTable input;
    reset::PValueTable pvalues;
    reset::HypothesisTable competition;
    reset::GroundTruth truth;
};

InputTable from_pvalues(const reset::PValueTable& t) {
    InputTable in;
    in.kind = InputKind::pvalue;
    in.ids = t.ids();
    in.pvalues.assign(t.pvalues().begin(), t.pvalues().end());
    in.side_info = t.side_info();
    for (Eigen::Index j = 0; j < t.side_info().cols(); ++j) in.side_names.push_back("x_" + std::to_string(j + 1));
    return in;
}

InputTable from_competition(const reset::HypothesisTable& t) {
    InputTable in;
    in.kind = InputKind::competition;
    in.ids = t.ids();
    in.labels.assign(t.labels().begin(), t.labels().end());
    in.scores.assign(t.scores().begin(), t.scores().end());
    in.side_info = t.side_info();
    for (Eigen::Index j = 0; j < t.dims(); ++j) in.side_names.push_back("x_" + std::to_string(j + 1));
    return in;
}

/// Replicate `index` of the configured generator; `simulate` and `validate`
/// draw identical tables for the same seed.
Simulated simulate_one(const SimOptions& o, std::size_t index) {
    auto rng = reset::SeedSpec(o.seed).child(index).stream(reset::Stream::simulation);
    Simulated out;
    if (o.sim == "geometric") {
        reset::GeometricSimSpec spec;
        spec.scenario = reset::parse_scenario(o.scenario.empty() ? "a" : o.scenario);
        spec.grid = o.grid;
        auto sim = reset::simulate_geometric(spec, rng);
        out.pvalues = std::move(sim.table);
        out.truth = std::move(sim.truth);
        out.input = from_pvalues(out.pvalues);
    } else if (o.sim == "betamix") {
        reset::BetaMixtureSpec spec;
        spec.m = o.m.value_or(2000);
        spec.d = o.d;
        auto sim = reset::simulate_beta_mixture(spec, rng);
        out.pvalues = std::move(sim.table);
        out.truth = std::move(sim.truth);
        out.input = from_pvalues(out.pvalues);
    } else {
        reset::CompetitionSimSpec spec;
        spec.m = o.m.value_or(500);
        spec.false_null_fraction = o.false_null_fraction;
        spec.signal = o.signal;
        spec.null_target_prob = o.null_target_prob;
        auto sim = reset::simulate_competition(spec, rng);
        out.competition = std::move(sim.table);
        out.truth = std::move(sim.truth);
        out.input = from_competition(out.competition);
    }
    return out;
}

std::string replicate_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sim_%04zu", i);
    return buf;
}

int cmd_simulate(const SimOptions& o, std::ostream& out) {
    o.check();
    const auto dir = prepare_out(o.out);
    for (std::size_t i = 0; i < o.runs; ++i) {
        const auto sim = simulate_one(o, i);
        const auto name = replicate_name(i);
        std::ofstream table(dir / (name + ".tsv"), std::ios::binary);
        if (sim.input.kind == InputKind::pvalue) {
            write_pvalue_tsv(table, sim.pvalues);
        } else {
            write_competition_tsv(table, sim.competition);
        }
        std::ofstream truth(dir / (name + ".truth.tsv"), std::ios::binary);
        truth << "id\tfalse_null\tstatistic\n";
        for (std::size_t r = 0; r < sim.input.size(); ++r) {
            truth << sim.input.ids[r] << '\t' << (sim.truth.false_null[r] ? 1 : 0) << '\t'
                  << format_double(sim.truth.statistic.empty() ? kNaN : sim.truth.statistic[r]) << '\n';
        }
        if (!table || !truth) throw DataError("failed writing replicate " + name);
    }
    write_json(dir / "simulate.json", o.to_json());
    out << "wrote " << o.runs << " replicate(s) to " << dir.string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// Monte Carlo validation

int cmd_validate(const ValidateOptions& o, std::ostream& out) {
    o.sim.check();
    if (o.alphas.empty()) throw UsageError("validate: at least one --alpha is required");
    if (o.mode == "fdp" && !o.gamma) throw UsageError("--mode fdp requires --gamma");
    const int pool = o.ensemble.threads;
    const auto dir = prepare_out(o.sim.out);

    std::vector<reset::MonteCarloReport> reports;
    for (double alpha : o.alphas) {
        auto trial = [&](std::size_t i, const reset::SeedSpec& seed) {
            const auto sim = simulate_one(o.sim, i);
            std::vector<std::size_t> found;
            if (o.method == "reset") {
                ResetOptions r;
                r.alpha = alpha;
                r.mode = o.mode;
                r.gamma = o.gamma;
                r.s = o.s;
                r.regions = o.regions;
                r.c0 = o.c0;
                r.deterministic_fdpsd = o.deterministic_fdpsd;
                r.ensemble = o.ensemble;
                r.ensemble.threads = 1;  // the pool runs replicates concurrently
                found = execute_reset(sim.input, r, seed).discoveries;
            } else {
                found = execute_filter(sim.input, o.method, alpha, o.gamma, o.regions, o.c0, seed,
                                       o.deterministic_fdpsd)
                            .discoveries;
            }
            return reset::score_discoveries(found, sim.truth);
        };
        reports.push_back(reset::monte_carlo_validate(o.sim.runs, reset::SeedSpec(o.sim.seed), alpha, trial, pool));
    }

    std::ofstream csv(dir / "report.csv", std::ios::binary);
    csv << "alpha,runs,empirical_fdr,fdr_se,power,power_se,p_fdp_exceed,p_fdp_exceed_se\n";
    for (const auto& r : reports) {
        csv << format_double(r.alpha) << ',' << r.runs << ',' << format_double(r.fdr) << ','
            << format_double(r.fdr_se) << ',' << format_double(r.power) << ',' << format_double(r.power_se) << ','
            << format_double(r.p_fdp_exceed) << ',' << format_double(r.p_fdp_exceed_se) << '\n';
        out << "alpha=" << r.alpha << " fdr=" << r.fdr << " (se " << r.fdr_se << ") power=" << r.power
            << " P(fdp>alpha)=" << r.p_fdp_exceed << '\n';
    }
    if (!csv) throw DataError("failed writing report.csv");
    return kOk;
}

// ---------------------------------------------------------------------------
// Dispatch

std::optional<std::string> find_replay(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--replay" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--replay=", 0) == 0) return args[i].substr(9);
    }
    return std::nullopt;
}

int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rescoring-based multiple testing with finite-sample FDR and FDP control", "resetfdr"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");

    ResetOptions ro;
    auto* reset_cmd = app.add_subcommand("reset", "Rescore with side information and filter");
    if (!args.empty() && args.front() == "reset") {
        if (auto replay = find_replay(args)) load_replay(*replay, ro);
    }
    reset_cmd->add_option("input", ro.input, "Input TSV");
    reset_cmd->add_option("--replay", ro.replay, "Take defaults from a previous run.json");
    reset_cmd->add_option("--alpha", ro.alpha, "Target FDR / FDP level");
    reset_cmd->add_option("--mode", ro.mode, "fdr or fdp")->check(CLI::IsMember({"fdr", "fdp"}));
    reset_cmd->add_option("--gamma", ro.gamma, "Confidence parameter of FDP control");
    reset_cmd->add_option("--s", ro.s, "Probability that a decoy is used for training");
    ro.regions.add(*reset_cmd);
    reset_cmd->add_option("--c0", ro.c0, "Null target-win probability (default from the regions, or 1/2)");
    reset_cmd->add_option("--seed", ro.seed, "Master seed");
    reset_cmd->add_flag("--deterministic-fdpsd", ro.deterministic_fdpsd, "Disable the FDP-SD coin flip");
    reset_cmd->add_option("--out", ro.out, "Output directory");
    ro.ensemble.add(*reset_cmd);

    FilterOptions fo;
    auto* filter_cmd = app.add_subcommand("filter", "Run a filter without rescoring");
    filter_cmd->add_option("input", fo.input, "Input TSV")->required();
    filter_cmd->add_option("--method", fo.method, "Filter")
        ->required()
        ->check(CLI::IsMember({"seqstep", "seqstep+", "fdpsd", "grsd", "bh"}));
    filter_cmd->add_option("--alpha", fo.alpha, "Target level");
    filter_cmd->add_option("--gamma", fo.gamma, "Confidence parameter (fdpsd, grsd)");
    fo.regions.add(*filter_cmd);
    filter_cmd->add_option("--c0", fo.c0, "Null target-win probability");
    filter_cmd->add_option("--seed", fo.seed, "Seed for tie breaking and the FDP-SD coin");
    filter_cmd->add_flag("--deterministic-fdpsd", fo.deterministic_fdpsd, "Disable the FDP-SD coin flip");
    filter_cmd->add_option("--out", fo.out, "Output directory");

    SimOptions so;
    auto* sim_cmd = app.add_subcommand("simulate", "Write simulated tables and their ground truth");
    so.add(*sim_cmd);

    ValidateOptions vo;
    auto* val_cmd = app.add_subcommand("validate", "Monte Carlo FDR, FDP and power of a method");
    vo.sim.add(*val_cmd);
    val_cmd->add_option("--method", vo.method, "Method")
        ->check(CLI::IsMember({"reset", "seqstep", "seqstep+", "fdpsd", "grsd", "bh"}));
    val_cmd->add_option("--alpha", vo.alphas, "Levels (repeatable)")->delimiter(',');
    val_cmd->add_option("--mode", vo.mode, "fdr or fdp (reset)")->check(CLI::IsMember({"fdr", "fdp"}));
    val_cmd->add_option("--gamma", vo.gamma, "Confidence parameter");
    val_cmd->add_option("--s", vo.s, "Training-decoy probability (reset)");
    vo.regions.add(*val_cmd);
    val_cmd->add_option("--c0", vo.c0, "Null target-win probability");
    val_cmd->add_flag("--deterministic-fdpsd", vo.deterministic_fdpsd, "Disable the FDP-SD coin flip");
    vo.ensemble.add(*val_cmd);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    if (quiet) reset::log::set_level(reset::log::Level::off);

    if (reset_cmd->parsed()) {
        if (!ro.replay.empty()) check_replay_digest(ro.replay, ro.input);
        return cmd_reset(ro, out);
    }
    if (filter_cmd->parsed()) return cmd_filter(fo, out);
    if (sim_cmd->parsed()) return cmd_simulate(so, out);
    return cmd_validate(vo, out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const UsageError& e) {
        err << "resetfdr: " << e.what() << '\n';
        return kUsage;
    } catch (const ConfigError& e) {
        err << "resetfdr: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        err << "resetfdr: " << e.what() << '\n';
        return kData;
    } catch (const fs::filesystem_error& e) {
        err << "resetfdr: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        err << "resetfdr: internal error: " << e.what() << '\n';
        return kInternal;
    } catch (...) {
        err << "resetfdr: internal error\n";
        return kInternal;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, out, err);
}

}  // namespace resetfdr
