// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,4,8] [--threads N]
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "../cli_harness.hpp"
#include "../oracles.hpp"
#include "reset/classifiers.hpp"
#include "reset/filters.hpp"
#include "reset/pvalue_adapter.hpp"
#include "reset/reset.hpp"
#include "reset/simgen.hpp"

using namespace reset;

namespace {

int g_threads = 0;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void progress(const std::string& what, std::size_t done, std::size_t total) {
    if (done % 100 == 0 || done == total) std::cerr << "  " << what << ": " << done << "/" << total << std::endl;
}

// ---------------------------------------------------------------------------
// 1. Filters against brute force

Verdict filter_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(20240101);
    const std::vector<double> alphas{0.01, 0.05, 0.1, 0.2, 0.5};
    const std::vector<double> gammas{0.05, 0.1, 0.2, 0.5};
    const std::vector<double> cs{1.0 / 3.0, 0.5, 2.0 / 3.0, 0.8};
    // delta_i does not depend on m, so one brute-force table per (alpha, gamma, c) serves every m.
    std::map<std::tuple<double, double, double>, std::vector<std::int64_t>> delta_cache;
    std::size_t mismatches = 0, checks = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t m = 1 + rng.below(200);
        const double alpha = alphas[rng.below(alphas.size())];
        const double gamma = gammas[rng.below(gammas.size())];
        const double c = cs[rng.below(cs.size())];
        const double bias = rng.uniform(0.2, 0.95);

        std::vector<Label> labels(m);
        std::vector<int> raw(m);
        for (std::size_t i = 0; i < m; ++i) {
            labels[i] = rng.bernoulli(bias) ? kTarget : kDecoy;
            raw[i] = labels[i];
        }
        const auto ranked = RankedLabels::presorted(labels);
        const FilterParams params{alpha, gamma, c, ControlMode::fdr};
        for (bool plus : {true, false}) {
            const auto k = oracle::seqstep_cutoff(raw, c, alpha, plus);
            const auto got = seqstep(ranked, params, plus);
            mismatches += got.cutoff != k || got.size() != oracle::count_targets(raw, k);
            ++checks;
        }

        const auto bounds = fdp_sd_bounds(m, params);
        const double R = 1.0 - c;
        auto& full = delta_cache[{alpha, gamma, c}];
        if (full.empty()) full = oracle::fdp_bounds(200, alpha, gamma, R);
        const std::vector<std::int64_t> delta(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(m + 1));
        const auto i0 = oracle::fdp_first_index(alpha, gamma, R);
        mismatches += bounds.delta != delta || bounds.i0 != i0;
        ++checks;
        Rng unused(0);
        const auto sd = fdp_sd(ranked, bounds, unused, FdpSdOptions{false});
        mismatches += sd.size() != oracle::count_targets(raw, oracle::fdp_stepdown(raw, delta, i0));
        ++checks;

        std::vector<double> p(m);
        const double signal = rng.uniform(0.0, 1.0);
        for (auto& v : p) v = rng.bernoulli(signal * 0.5) ? std::pow(rng.uniform(), 8.0) : rng.uniform();
        mismatches += bh(p, alpha).size() != oracle::bh_count(p, alpha);
        mismatches += gr_sd(p, alpha, gamma).size() != oracle::grsd_count(p, alpha, gamma);
        checks += 2;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {mismatches == 0 && secs < 60.0,
            fmt("%zu/%zu integer comparisons agree over 1000 instances in %.1f s (limit 60 s)", checks - mismatches,
                checks, secs)};
}

// ---------------------------------------------------------------------------
// 2, 3, 9. All-null competition Monte Carlo

struct AllNullResults {
    bool done = false;
    std::vector<double> alphas{0.05, 0.1, 0.2};
    std::vector<MonteCarloReport> fdr, fdp;
    std::vector<double> counts_alpha_01;  ///< FDR-mode discoveries per run at alpha = 0.1
};

AllNullResults& all_null() {
    static AllNullResults r;
    if (r.done) return r;
    constexpr std::size_t runs = 2000;
    const SeedSpec master(2000);
    const std::size_t na = r.alphas.size();
    std::vector<std::vector<RunMetrics>> fdr(na, std::vector<RunMetrics>(runs)), fdp = fdr;
    r.counts_alpha_01.assign(runs, 0.0);
    std::atomic<std::size_t> done{0};
    parallel_for(runs, g_threads, [&](std::size_t i) {
        const SeedSpec seed = master.child(i);
        auto data_rng = seed.stream(Stream::simulation);
        const auto sim = simulate_competition(CompetitionSimSpec{}, data_rng);
        for (std::size_t a = 0; a < na; ++a) {
            ResetConfig cfg;
            cfg.s = 0.5;
            cfg.c0 = 0.5;
            cfg.alpha = r.alphas[a];
            cfg.gamma = 0.1;
            cfg.seed = seed;
            cfg.ensemble.threads = 1;
            const auto stage = rescore_table(sim.table, cfg);
            const auto by_fdr = finalize(stage, ControlMode::fdr, cfg.alpha, cfg.gamma, seed);
            const auto by_fdp = finalize(stage, ControlMode::fdp, cfg.alpha, cfg.gamma, seed);
            fdr[a][i] = score_discoveries(by_fdr.list.discoveries, sim.truth);
            fdp[a][i] = score_discoveries(by_fdp.list.discoveries, sim.truth);
            if (r.alphas[a] == 0.1) r.counts_alpha_01[i] = static_cast<double>(by_fdr.list.size());
        }
        progress("all-null runs", ++done, runs);
    });
    for (std::size_t a = 0; a < na; ++a) {
        r.fdr.push_back(summarize_runs(fdr[a], r.alphas[a]));
        r.fdp.push_back(summarize_runs(fdp[a], r.alphas[a]));
    }
    r.done = true;
    return r;
}

Verdict theorem_fdr() {
    const auto& r = all_null();
    bool ok = true;
    std::string detail;
    for (const auto& rep : r.fdr) {
        const bool pass = rep.fdr <= rep.alpha + 3.0 * rep.fdr_se;
        ok = ok && pass;
        detail += fmt("alpha=%.2f FDR=%.4f (se %.4f)%s; ", rep.alpha, rep.fdr, rep.fdr_se, pass ? "" : " EXCEEDS");
    }
    return {ok, detail + "2000 all-null runs, m=500, c0=1/2, s=1/2"};
}

Verdict theorem_fdp() {
    const auto& r = all_null();
    bool ok = true;
    std::string detail;
    for (const auto& rep : r.fdp) {
        const bool pass = rep.p_fdp_exceed <= 0.1 + 3.0 * rep.p_fdp_exceed_se;
        ok = ok && pass;
        detail += fmt("alpha=%.2f P(FDP>alpha)=%.4f (se %.4f)%s; ", rep.alpha, rep.p_fdp_exceed,
                      rep.p_fdp_exceed_se, pass ? "" : " EXCEEDS");
    }
    return {ok, detail + "gamma=0.1, 2000 all-null runs"};
}

// ---------------------------------------------------------------------------
// 4. Target-win frequency among true-null pseudo targets

Verdict pseudo_target_win_rate() {
    constexpr std::size_t runs = 5000;
    bool ok = true;
    std::string detail;
    for (const auto [c0, s] : {std::pair{0.5, 0.5}, std::pair{1.0 / 3.0, 0.5}}) {
        std::vector<double> freq(runs);
        const SeedSpec master(4000 + static_cast<std::uint64_t>(c0 * 1000));
        parallel_for(runs, g_threads, [&](std::size_t i) {
            const SeedSpec seed = master.child(i);
            auto data_rng = seed.stream(Stream::simulation);
            CompetitionSimSpec spec;
            spec.null_target_prob = c0;
            const auto sim = simulate_competition(spec, data_rng);
            auto split_rng = seed.stream(Stream::decoy_split);
            const auto pseudo = split_decoys(sim.table.labels(), s, split_rng);
            std::size_t wins = 0;
            for (auto r : pseudo.pseudo_targets) wins += sim.table.labels()[r] == kTarget ? 1 : 0;
            freq[i] = pseudo.pseudo_targets.empty()
                          ? 0.0
                          : static_cast<double>(wins) / static_cast<double>(pseudo.pseudo_targets.size());
        });
        const double c = adjust_c(c0, s);
        const double f = mean(freq);
        const double se = standard_error(freq);
        const bool pass = f <= c + 3.0 * se;
        ok = ok && pass;
        detail += fmt("(c0=%.3f,s=%.1f): freq=%.5f (se %.5f) vs c=%.5f; ", c0, s, f, se, c);
    }
    const bool pinned = std::abs(adjust_c(0.5, 0.5) - 2.0 / 3.0) < 1e-15;
    return {ok && pinned, detail + (pinned ? "c(1/2,1/2)=2/3" : "c(1/2,1/2) != 2/3")};
}

// ---------------------------------------------------------------------------
// 5, 6. Geometric side information, scenario (a)

struct GeometricResults {
    bool done = false;
    std::vector<double> alphas{0.05, 0.1, 0.2};
    // [alpha][run]
    std::vector<std::vector<RunMetrics>> reset, bh, seqstep_plus;
};

GeometricResults& geometric() {
    static GeometricResults r;
    if (r.done) return r;
    constexpr std::size_t runs = 50;
    const SeedSpec master(5000);
    const std::size_t na = r.alphas.size();
    r.reset.assign(na, std::vector<RunMetrics>(runs));
    r.bh = r.seqstep_plus = r.reset;
    std::atomic<std::size_t> done{0};
    parallel_for(runs, g_threads, [&](std::size_t i) {
        const SeedSpec seed = master.child(i);
        auto data_rng = seed.stream(Stream::simulation);
        GeometricSimSpec spec;
        spec.scenario = GeometricScenario::circle_center;
        const auto sim = simulate_geometric(spec, data_rng);
        const ConversionRegions regions;
        const auto conv = convert_pvalues(sim.table, regions);
        const double c0 = null_win_prob(regions);
        auto to_input = [&](const std::vector<std::size_t>& rows) {
            std::vector<std::size_t> out;
            for (auto k : rows) out.push_back(conv.kept[k]);
            return out;
        };
        for (std::size_t a = 0; a < na; ++a) {
            ResetConfig cfg;
            cfg.c0 = c0;
            cfg.alpha = r.alphas[a];
            cfg.seed = seed;
            cfg.ensemble.threads = 1;
            r.reset[a][i] = score_discoveries(to_input(run_reset(conv.table, cfg).list.discoveries), sim.truth);
            r.bh[a][i] = score_discoveries(reset::bh(sim.table.pvalues(), r.alphas[a]).discoveries, sim.truth);
            auto tie = seed.stream(Stream::tie_break, {9});
            const auto ranked = RankedLabels::rank(conv.table.labels(), conv.table.scores(), tie);
            const auto ss = seqstep(ranked, FilterParams{r.alphas[a], 0.1, c0, ControlMode::fdr}, true);
            r.seqstep_plus[a][i] = score_discoveries(to_input(ss.discoveries), sim.truth);
        }
        std::cerr << "  geometric run " << ++done << "/" << runs << std::endl;
    });
    r.done = true;
    return r;
}

Verdict geometric_power() {
    const auto& r = geometric();
    bool ok = true;
    std::string detail;
    for (std::size_t a = 0; a < r.alphas.size(); ++a) {
        std::vector<double> pr, d_bh, d_ss;
        for (std::size_t i = 0; i < r.reset[a].size(); ++i) {
            pr.push_back(r.reset[a][i].power);
            d_bh.push_back(r.reset[a][i].power - r.bh[a][i].power);
            d_ss.push_back(r.reset[a][i].power - r.seqstep_plus[a][i].power);
        }
        const bool pass = mean(d_bh) > 2.0 * standard_error(d_bh) && mean(d_ss) > 2.0 * standard_error(d_ss) &&
                          mean(d_bh) > 0.0 && mean(d_ss) > 0.0;
        ok = ok && pass;
        detail += fmt("alpha=%.2f power reset=%.3f bh=%.3f seqstep+=%.3f (paired diff %.3f/%.3f, se %.3f/%.3f); ",
                      r.alphas[a], mean(pr), mean(pr) - mean(d_bh), mean(pr) - mean(d_ss), mean(d_bh), mean(d_ss),
                      standard_error(d_bh), standard_error(d_ss));
    }
    return {ok, detail + "50 runs"};
}

Verdict geometric_fdr() {
    const auto& r = geometric();
    bool ok = true;
    std::string detail;
    for (std::size_t a = 0; a < r.alphas.size(); ++a) {
        const auto rep = summarize_runs(r.reset[a], r.alphas[a]);
        const bool pass = rep.fdr <= rep.alpha + 3.0 * rep.fdr_se;
        ok = ok && pass;
        detail += fmt("alpha=%.2f FDR=%.4f (se %.4f); ", rep.alpha, rep.fdr, rep.fdr_se);
    }
    return {ok, detail + "50 runs"};
}

// ---------------------------------------------------------------------------
// 7. Beta mixture generator and RESET on it

Verdict beta_mixture() {
    constexpr std::size_t runs = 50;
    const SeedSpec master(7000);
    std::vector<RunMetrics> metrics(runs);
    std::vector<double> pi_error(runs);
    std::atomic<std::size_t> done{0};
    parallel_for(runs, g_threads, [&](std::size_t i) {
        const SeedSpec seed = master.child(i);
        auto data_rng = seed.stream(Stream::simulation);
        BetaMixtureDetails details;
        const auto sim = simulate_beta_mixture(BetaMixtureSpec{}, data_rng, &details);
        pi_error[i] = std::abs(mean(details.pi) - 0.3);
        const auto conv = convert_pvalues(sim.table);
        ResetConfig cfg;
        cfg.c0 = null_win_prob({});
        cfg.alpha = 0.1;
        cfg.seed = seed;
        cfg.ensemble.threads = 1;
        std::vector<std::size_t> rows;
        for (auto k : run_reset(conv.table, cfg).list.discoveries) rows.push_back(conv.kept[k]);
        metrics[i] = score_discoveries(rows, sim.truth);
        std::cerr << "  beta-mixture run " << ++done << "/" << runs << std::endl;
    });
    const double worst_pi = *std::max_element(pi_error.begin(), pi_error.end());
    const auto rep = summarize_runs(metrics, 0.1);
    const bool ok = worst_pi <= 1e-6 && rep.power > 0.0 && rep.fdr <= 0.1 + 3.0 * rep.fdr_se;
    return {ok, fmt("max |mean pi - 0.3| = %.2e; power=%.4f (se %.4f); FDR=%.4f (se %.4f); 50 runs", worst_pi,
                    rep.power, rep.power_se, rep.fdr, rep.fdr_se)};
}

// ---------------------------------------------------------------------------
// 8. Bound comparison

Verdict bound_comparison() {
    const std::vector<std::size_t> idx{1000, 10000};
    const auto rows = compare_bounds(0.01, 0.1, 0.5, adjust_c(0.5, 0.5), idx);
    const double lo = rows[0].ratio, hi = rows[1].ratio;
    const bool ok = std::abs(lo - 0.5) <= 0.05 && hi >= 0.9 - 0.05;
    return {ok, fmt("ratio at 1e3 = %.4f (%lld/%lld, want 0.5 +- 0.05); at 1e4 = %.4f (%lld/%lld, want >= 0.9 - 0.05)",
                    lo, static_cast<long long>(rows[0].reset_doubled), static_cast<long long>(rows[0].fdpsd), hi,
                    static_cast<long long>(rows[1].reset_doubled), static_cast<long long>(rows[1].fdpsd))};
}

// ---------------------------------------------------------------------------
// 9. Determinism through the command line

Verdict cli_determinism() {
    const auto& band_source = all_null();
    const auto& counts = band_source.counts_alpha_01;
    const double lo = *std::min_element(counts.begin(), counts.end());
    const double hi = *std::max_element(counts.begin(), counts.end());

    harness::TempDir dir("resetfdr_acceptance");
    auto ok_run = [](const std::vector<std::string>& args) { return harness::run(args).code == 0; };
    if (!ok_run({"simulate", "--sim", "competition", "--m", "500", "--seed", "99", "--out", dir / "sim"})) {
        return {false, "simulate failed"};
    }
    const auto input = dir / "sim/sim_0000.tsv";
    const std::vector<std::string> common{"--alpha", "0.1", "--s", "0.5", "--c0", "0.5"};
    auto reset_run = [&](const std::string& seed, const std::string& out) {
        std::vector<std::string> args{"reset", input, "--seed", seed, "--out", dir / out};
        args.insert(args.end(), common.begin(), common.end());
        return ok_run(args);
    };
    if (!reset_run("1", "a") || !reset_run("1", "b") || !reset_run("2", "c")) return {false, "reset failed"};

    const bool identical = harness::slurp(dir / "a/discoveries.tsv") == harness::slurp(dir / "b/discoveries.tsv");
    const auto rows_a = harness::tsv_rows(dir / "a/discoveries.tsv");
    const auto rows_c = harness::tsv_rows(dir / "c/discoveries.tsv");
    bool rescored_changed = false;
    for (std::size_t i = 0; i < rows_a.size() && i < rows_c.size(); ++i) {
        rescored_changed = rescored_changed || rows_a[i][2] != rows_c[i][2];
    }
    const auto na = static_cast<double>(harness::discovered_count(dir / "a/discoveries.tsv"));
    const auto nc = static_cast<double>(harness::discovered_count(dir / "c/discoveries.tsv"));
    const bool in_band = na >= lo && na <= hi && nc >= lo && nc <= hi;
    return {identical && rescored_changed && in_band,
            fmt("same seed byte-identical: %s; new seed changes rescored values: %s; discoveries %.0f and %.0f within "
                "all-null band [%.0f, %.0f]",
                identical ? "yes" : "no", rescored_changed ? "yes" : "no", na, nc, lo, hi)};
}

// ---------------------------------------------------------------------------
// 10. Classifier health

Verdict classifier_health() {
    Rng rng(10);
    double worst_grad = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int hidden = 1 + static_cast<int>(rng.below(10));
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(5));
        const Eigen::Index n = 10 + static_cast<Eigen::Index>(rng.below(40));
        const double decay = std::array{0.0, 0.1, 1.0}[rng.below(3)];
        Matrix x(n, d);
        Vector y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
            y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        }
        Vector w(static_cast<Eigen::Index>(NeuralNet::parameter_count(d, hidden)));
        for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = rng.uniform(-1.5, 1.5);
        Vector g, scratch;
        NeuralNet::objective_and_gradient(w, x, y, hidden, decay, g);
        constexpr double h = 1e-5;
        for (Eigen::Index k = 0; k < w.size(); ++k) {
            Vector wp = w, wm = w;
            wp[k] += h;
            wm[k] -= h;
            const double fd = (NeuralNet::objective_and_gradient(wp, x, y, hidden, decay, scratch) -
                               NeuralNet::objective_and_gradient(wm, x, y, hidden, decay, scratch)) /
                              (2 * h);
            worst_grad = std::max(worst_grad, std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k])));
        }
    }

    // Two well-separated Gaussian blobs; accuracy on a fresh sample.
    auto blobs = [](std::size_t n, std::uint64_t seed) {
        Rng r(seed);
        Matrix x(static_cast<Eigen::Index>(n), 2);
        std::vector<Label> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const bool pos = i % 2 == 0;
            const double shift = pos ? 1.5 : -1.5;
            x(static_cast<Eigen::Index>(i), 0) = shift + 0.4 * r.normal();
            x(static_cast<Eigen::Index>(i), 1) = shift + 0.4 * r.normal();
            y[i] = pos ? kTarget : kDecoy;
        }
        return std::pair{x, y};
    };
    const auto [train_x, train_y] = blobs(300, 1);
    const auto [test_x, test_y] = blobs(1000, 2);
    double worst_acc = 1.0;
    for (const auto& spec : default_classifier_grid()) {
        if (spec.kind != ClassifierKind::neural_net || spec.nn_decay > 0.1) continue;
        Rng r(3);
        const auto s = train(spec, train_x, train_y, r).score(test_x);
        std::size_t ok = 0;
        for (std::size_t i = 0; i < test_y.size(); ++i) ok += (s[static_cast<Eigen::Index>(i)] > 0.5) == (test_y[i] == kTarget);
        worst_acc = std::min(worst_acc, static_cast<double>(ok) / static_cast<double>(test_y.size()));
    }

    // P(target) increasing in the first feature; the second is noise.
    auto monotone = [](std::size_t n, std::uint64_t seed) {
        Rng r(seed);
        Matrix x(static_cast<Eigen::Index>(n), 2);
        std::vector<Label> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = r.uniform(-3, 3);
            x(static_cast<Eigen::Index>(i), 0) = v;
            x(static_cast<Eigen::Index>(i), 1) = r.normal();
            y[i] = r.bernoulli(1.0 / (1.0 + std::exp(-2.0 * v))) ? kTarget : kDecoy;
        }
        return std::pair{x, y};
    };
    const auto [mx, my] = monotone(2000, 11);
    const auto [px, py] = monotone(500, 12);
    std::vector<double> feature(px.col(0).data(), px.col(0).data() + px.rows());
    double worst_rho = 1.0;
    std::string rho_detail;
    for (const auto& spec : {ClassifierSpec::forest(), ClassifierSpec::spline()}) {
        Rng r(13);
        const auto s = train(spec, mx, my, r).score(px);
        const double rho = oracle::spearman(feature, std::vector<double>(s.data(), s.data() + s.size()));
        worst_rho = std::min(worst_rho, rho);
        rho_detail += fmt("%s %.4f ", spec.name().c_str(), rho);
    }
    const bool ok = worst_grad < 1e-4 && worst_acc >= 0.95 && worst_rho >= 0.9;
    return {ok, fmt("max gradient rel. err %.2e; min held-out NN accuracy %.4f; Spearman %s", worst_grad, worst_acc,
                    rho_detail.c_str())};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream s(argv[++i]);
            std::string item;
            while (std::getline(s, item, ',')) only.insert(std::stoi(item));
        } else if (a == "--threads" && i + 1 < argc) {
            g_threads = std::stoi(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--only 1,2,...] [--threads N]\n";
            return 2;
        }
    }
    log::set_level(log::Level::off);

    const std::vector<Criterion> criteria{
        {1, "filter oracles", filter_oracles},
        {2, "FDR control, all-null competition", theorem_fdr},
        {3, "FDP control, all-null competition", theorem_fdp},
        {4, "pseudo-target win frequency", pseudo_target_win_rate},
        {5, "geometric power ordering", geometric_power},
        {6, "geometric FDR", geometric_fdr},
        {7, "beta-mixture generator and power", beta_mixture},
        {8, "bound comparison", bound_comparison},
        {9, "CLI determinism", cli_determinism},
        {10, "classifier health", classifier_health},
    };
    // Cheap criteria first so their verdicts appear early.
    const std::vector<int> order{1, 8, 10, 4, 7, 5, 6, 2, 3, 9};
    int failures = 0;
    for (int id : order) {
        if (!only.empty() && !only.count(id)) continue;
        const auto& c = criteria[static_cast<std::size_t>(id - 1)];
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << v.detail
                  << fmt(" [%.0f s]", secs) << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
