// Command-line driver: validate points, evolve flows, run identity-check
// suites, and emit machine-readable JSON reports.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <thread>

#include "toda/deformed.hpp"

using json = nlohmann::json;
using namespace toda;

namespace {

int thread_cap() {
    const char* env = std::getenv("TODA_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    int hw = int(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    return std::clamp(n, 1, hw);
}

cd parse_zeta(const std::string& s) {
    // "0.3", "0.3+0.1i", "-0.2-0.1i", "0.3i"
    double re = 0, im = 0;
    std::string t = s;
    if (!t.empty() && t.back() == 'i') {
        t.pop_back();
        std::size_t split = t.find_last_of("+-");
        if (split == std::string::npos || split == 0) {
            im = t.empty() || t == "+" ? 1.0 : t == "-" ? -1.0 : std::stod(t);
        } else {
            re = std::stod(t.substr(0, split));
            std::string imp = t.substr(split);
            im = (imp == "+") ? 1.0 : (imp == "-") ? -1.0 : std::stod(imp);
        }
    } else {
        re = std::stod(t);
    }
    return {re, im};
}

AlphaHat parse_alpha_hat(const std::string& s) {
    if (s == "u") return ah_u();
    if (s == "v") return ah_v();
    return ah_int(std::stoi(s));
}

HierarchyIndex parse_flow(const std::string& s) {
    std::size_t comma = s.find_last_of(',');
    if (comma == std::string::npos) throw ParseError("flow must be \"alpha,p\"");
    try {
        return {parse_alpha_hat(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
    } catch (const std::exception&) {
        throw ParseError("cannot parse flow index: " + s);
    }
}

LoopLaxPoint load_point(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bad config: ") + e.what());
    }
    int N, M;
    try {
        N = cfg.at("n_modes").get<int>();
        M = cfg.value("x_modes", 1);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad config: ") + e.what());
    }
    if (N < 1 || M < 1 || (M & (M - 1)) != 0)
        throw ParseError("n_modes must be positive and x_modes a power of two");
    LoopField lam(N, M), lab(N, M);
    auto add = [&](LoopField& F, const json& entries, bool is_lam, bool modulated) {
        for (const auto& e : entries) {
            if (!e.is_array() || e.size() != std::size_t(modulated ? 4 : 3))
                throw ParseError("coefficient entries must be [k,re,im] or [m,k,re,im]");
            int m = modulated ? e[0].get<int>() : 0;
            int k = e[modulated ? 1 : 0].get<int>();
            cd c(e[modulated ? 2 : 1].get<double>(), e[modulated ? 3 : 2].get<double>());
            if (k < -N || k > N) throw OutOfDomain("mode index outside [-N, N]");
            if (m < -M / 2 || m >= M) throw OutOfDomain("x-mode index outside range");
            if (is_lam && k >= 2) throw OutOfDomain("lambda must have c_k = 0 for k >= 2");
            if (is_lam && k == 1 && (c != cd(1) || modulated))
                throw OutOfDomain("lambda must be normalized with c_1 = 1");
            if (!is_lam && k < -1) throw OutOfDomain("lambdabar must have modes k >= -1");
            for (int j = 0; j < M; ++j)
                F.at(k, j) += c * std::exp(cd(0, 2 * std::numbers::pi * m * j / M));
        }
    };
    try {
        add(lam, cfg.at("lambda"), true, false);
        add(lab, cfg.at("lambdabar"), false, false);
        if (cfg.contains("lambda_x")) add(lam, cfg["lambda_x"], true, true);
        if (cfg.contains("lambdabar_x")) add(lab, cfg["lambdabar_x"], false, true);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad config: ") + e.what());
    }
    return LoopLaxPoint(lam, lab);
}

// ---- check harness --------------------------------------------------------

struct Check {
    std::string name, indices;
    double tolerance;
    std::function<double()> run;
};

json run_checks(std::vector<Check> checks, double tol_override) {
    const int nthreads = thread_cap();
    std::vector<json> rows(checks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= checks.size()) return;
            auto t0 = std::chrono::steady_clock::now();
            double r = checks[i].run();
            auto t1 = std::chrono::steady_clock::now();
            double tol = tol_override > 0 ? tol_override : checks[i].tolerance;
            rows[i] = {{"name", checks[i].name},
                       {"indices", checks[i].indices},
                       {"residual", r},
                       {"tolerance", tol},
                       {"pass", std::isfinite(r) && r <= tol},
                       {"runtime_ms",
                        std::chrono::duration<double, std::milli>(t1 - t0).count()}};
        }
    };
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    bool pass = true;
    for (auto& r : rows) pass = pass && r["pass"].get<bool>();
    return {{"pass", pass}, {"checks", rows}};
}

std::vector<Check> build_suite(const std::string& suite, const LoopLaxPoint& lp, cd zeta,
                               int window, unsigned seed) {
    const LaxPoint& pt = lp.slices[0];
    std::vector<Check> out;
    auto add = [&](std::string name, std::string idx, double tol, std::function<double()> f) {
        out.push_back({std::move(name), std::move(idx), tol, std::move(f)});
    };
    std::mt19937 rng(seed);
    auto random_dir = [&]() {
        std::uniform_real_distribution<double> d(-0.5, 0.5);
        Laurent L(pt.N());
        for (int k = -3; k <= 3; ++k) L.at(k) = cd(d(rng), d(rng));
        return Triple{L, cd(d(rng), d(rng)), cd(d(rng), d(rng))};
    };

    if (suite == "zs") {
        require_m1(lp);
        std::vector<std::pair<HierarchyIndex, HierarchyIndex>> pairs = {
            {{ah_int(0), 0}, {ah_int(1), 0}},   {{ah_int(1), 1}, {ah_v(), 0}},
            {{ah_int(-1), 0}, {ah_u(), 1}},     {{ah_int(-1), 1}, {ah_v(), 1}},
            {{ah_int(-2), 1}, {ah_int(0), 1}},  {{ah_v(), 0}, {ah_u(), 0}},
            {{ah_int(2), 0}, {ah_int(-1), 0}},  {{ah_v(), 1}, {ah_u(), 2}},
            {{ah_int(-3), 2}, {ah_int(1), 0}},  {{ah_int(0), 2}, {ah_v(), 0}},
            {{ah_int(-1), 2}, {ah_int(-1), 0}}, {{ah_u(), 1}, {ah_int(2), 1}},
        };
        for (auto& [a, b] : pairs)
            add("zero_curvature", to_string(a) + "|" + to_string(b), 1e-9,
                [a = a, b = b, &lp]() { return norm_inf(zs_residual(a, b, lp)); });
    } else if (suite == "recursion") {
        require_m1(lp);
        for (auto idx : {HierarchyIndex{ah_int(1), -1}, HierarchyIndex{ah_int(1), 0},
                         HierarchyIndex{ah_int(1), 1}, HierarchyIndex{ah_int(-1), 0},
                         HierarchyIndex{ah_int(-3), 1}, HierarchyIndex{ah_v(), -1},
                         HierarchyIndex{ah_v(), 0}, HierarchyIndex{ah_v(), 1},
                         HierarchyIndex{ah_u(), -1}, HierarchyIndex{ah_u(), 0},
                         HierarchyIndex{ah_u(), 1}})
            add("recursion", to_string(idx), 1e-9,
                [idx, &lp]() { return norm_inf(recursion_residual(idx, lp)); });
        for (auto idx : {HierarchyIndex{ah_int(1), 0}, HierarchyIndex{ah_v(), 1},
                         HierarchyIndex{ah_u(), 0}})
            add("lax_equals_p1", to_string(idx), 1e-9, [idx, &lp]() {
                auto [o, ob] = hamiltonian_gradient(idx, lp);
                return norm_inf(lax_flow(idx, lp) - poisson_p1(o, ob, lp));
            });
    } else if (suite == "casimir") {
        require_m1(lp);
        for (auto ah : {ah_int(2), ah_int(0), ah_int(-1), ah_int(-2), ah_v(), ah_u()})
            add("casimir_p1", to_string(ah) + ",-1", 1e-10, [ah, &lp]() {
                auto [o, ob] = hamiltonian_gradient({ah, -1}, lp);
                return norm_inf(poisson_p1(o, ob, lp));
            });
        for (auto idx : {HierarchyIndex{ah_int(-1), -1}, HierarchyIndex{ah_v(), -1}})
            add("casimir_p2", to_string(idx), 1e-10, [idx, &lp]() {
                auto [o, ob] = hamiltonian_gradient(idx, lp);
                return norm_inf(poisson_p2(o, ob, lp));
            });
    } else if (suite == "tau") {
        require_m1(lp);
        std::vector<std::pair<HierarchyIndex, HierarchyIndex>> pairs = {
            {{ah_int(1), 1}, {ah_v(), 1}},     {{ah_int(0), 0}, {ah_u(), 1}},
            {{ah_int(-1), 1}, {ah_int(1), 0}}, {{ah_v(), 0}, {ah_u(), 0}},
            {{ah_int(-2), 1}, {ah_v(), 1}},    {{ah_int(2), 0}, {ah_int(-1), 0}},
        };
        for (auto& [a, b] : pairs)
            add("tau_symmetry", to_string(a) + "|" + to_string(b), 1e-9,
                [a = a, b = b, &lp]() {
                    double m = 0;
                    for (auto& x : tau_symmetry_residual(a, b, lp))
                        m = std::max(m, std::abs(x));
                    return m;
                });
    } else if (suite == "metric") {
        require_m0(pt);
        add("eta_gram", "window", 1e-10, [window, &pt]() {
            auto W = flat_window(window);
            auto E = eta_gram(window);
            std::vector<Triple> dts;
            for (auto& ah : W) dts.push_back(dt_differential(ah, pt));
            double worst = 0;
            for (std::size_t i = 0; i < W.size(); ++i)
                for (std::size_t j = 0; j < W.size(); ++j)
                    worst = std::max(worst,
                                     std::abs(eta_cotangent(dts[i], dts[j], pt) - E[i][j]));
            return worst;
        });
        add("eta_roundtrip", "random", 1e-12, [&pt, X = random_dir()]() {
            return norm_inf(eta_star(eta_sharp(X, pt), pt) - X);
        });
    } else if (suite == "flatness") {
        require_m0(pt);
        Triple X = random_dir();
        const double h = 1e-6;
        for (auto ah : {ah_int(1), ah_int(-2), ah_v(), ah_u()})
            add("parallel_dt", to_string(ah), 1e-6, [ah, X, h, &pt]() {
                Triple fd = (1.0 / (2 * h)) * (dt_differential(ah, perturb(pt, X, h)) -
                                               dt_differential(ah, perturb(pt, X, -h)));
                return norm_inf(fd - christoffel(X, dt_differential(ah, pt), pt));
            });
        add("metric_compatibility", "random", 1e-6, [&pt, X, h, a = random_dir(),
                                                     b = random_dir()]() {
            cd fd = (eta_cotangent(a, b, perturb(pt, X, h)) -
                     eta_cotangent(a, b, perturb(pt, X, -h))) /
                    (2 * h);
            cd rhs = -eta_cotangent(christoffel(X, a, pt), b, pt) -
                     eta_cotangent(a, christoffel(X, b, pt), pt);
            return std::abs(fd - rhs);
        });
    } else if (suite == "deformed") {
        require_m0(pt);
        std::vector<Triple> dirs = {{Laurent(pt.N()), 1, 0},
                                    {Laurent(pt.N()), 0, 1},
                                    random_dir(),
                                    random_dir()};
        for (auto ah : {ah_int(-2), ah_int(-1), ah_int(0), ah_int(1), ah_int(2), ah_u(), ah_v()}) {
            for (std::size_t d = 0; d < dirs.size(); ++d)
                add("deformed_flatness", to_string(ah) + ";dir" + std::to_string(d), 1e-5,
                    [ah, zeta, X = dirs[d], &pt]() {
                        return deformed_flatness_residual(ah, zeta, X, pt);
                    });
            add("zeta_ode", to_string(ah), 1e-5,
                [ah, zeta, &pt]() { return zeta_ode_residual(ah, zeta, pt); });
            add("horizontality", to_string(ah), 1e-10, [ah, zeta, &pt]() {
                auto h = f_horizontality_residual(ah, pt, zeta);
                return std::max({h.r_first, h.r_second, h.r_rational, h.r_u});
            });
        }
    } else if (suite == "levelt") {
        require_m0(pt);
        add("levelt_factorization", "window", 1e-8,
            [zeta, window, &pt]() { return levelt_residual(zeta, pt, window); });
        add("theta_at_origin", "window", 1e-6,
            [window, &pt]() { return theta_matrix_origin_residual(pt, window); });
        add("theta_analyticity", "window", 1e-6,
            [window, &pt]() { return theta_matrix_analyticity_residual(pt, window); });
        add("y_monodromy", "v", 1e-9, [zeta, &pt]() { return y_monodromy_residual(pt, zeta); });
        add("monodromy_invariants", "window", 1e-12,
            [window]() { return monodromy_invariants_residual(window); });
    } else if (suite == "orthogonality") {
        require_m0(pt);
        add("gram", "window", 1e-7,
            [zeta, window, &pt]() { return orthogonality_residual(zeta, pt, window); });
        for (auto ah : {ah_int(2), ah_int(0), ah_int(-1), ah_int(-2), ah_v(), ah_u()}) {
            add("c_relation", to_string(ah), 1e-8, [ah, zeta, window, &pt]() {
                return c_relation_residual(ah, pt, zeta, window);
            });
            for (int p : {0, 1, 2})
                add("q_tilde", to_string(ah) + "," + std::to_string(p), 1e-8,
                    [ah, p, &pt]() { return q_tilde_consistency(ah, p, pt); });
        }
    } else if (suite == "omega") {
        require_m1(lp);
        require_m0(pt);
        for (auto& ah : flat_window(std::min(window, 4)))
            for (int p = 0; p <= 3; ++p)
                add("theta_coeff_density", to_string(ah) + "," + std::to_string(p), 1e-12,
                    [ah, p, &pt]() {
                        return std::abs(theta_coeff(ah, p, pt) -
                                        hamiltonian_density({ah, p - 1}, pt));
                    });
        for (auto [a, b] : {std::pair{HierarchyIndex{ah_u(), 0}, HierarchyIndex{ah_int(0), 0}},
                            std::pair{HierarchyIndex{ah_int(0), 1}, HierarchyIndex{ah_v(), 1}},
                            std::pair{HierarchyIndex{ah_int(-1), 0}, HierarchyIndex{ah_u(), 1}}})
            add("omega_xderiv", to_string(a) + "|" + to_string(b), 1e-7,
                [a = a, b = b, &lp]() { return omega_xderiv_residual(a, b, lp); });
    } else if (suite == "classical") {
        require_m1(lp);
        for (int n : {1, 2, 3}) {
            add("combination", "n=" + std::to_string(n), 1e-10,
                [n, &lp]() { return std::abs(classical_combination_residual(n, lp)); });
            add("hbar_identity", "n=" + std::to_string(n), 1e-12, [n, &lp]() {
                return std::abs(classical_hamiltonian(n, true, lp) +
                                factorial(n) * hamiltonian({ah_u(), n - 1}, lp));
            });
        }
    } else {
        throw ParseError("unknown suite: " + suite);
    }
    return out;
}

json validation_json(const ValidationReport& r) {
    return {{"in_m1", r.in_m1},
            {"in_m0", r.in_m0},
            {"winding_lambda", r.wind_lam},
            {"winding_lambdabar", r.wind_lab},
            {"winding_w", r.wind_w},
            {"gamma_winding", r.gamma_winding},
            {"min_wprime", r.min_wprime},
            {"min_curve_gap", r.min_curve_gap},
            {"self_intersecting", r.self_intersecting},
            {"has_leading_coefficient", r.has_ub1}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"truncated-Laurent pseudo-spectral toolkit for the extended "
                 "dispersionless 2D Toda hierarchy"};
    app.require_subcommand(1);

    std::string cfg_path, flow_str = "v,0", out_path, suite, zeta_str = "0.3";
    double time = 0.0, dt = 1e-3, tol = -1.0;
    int window = 8;
    unsigned seed = 42;

    auto* v = app.add_subcommand("validate", "check manifold membership of a configured point");
    v->add_option("config", cfg_path)->required();

    auto* e = app.add_subcommand("evolve", "integrate a hierarchy flow");
    e->add_option("config", cfg_path)->required();
    e->add_option("--flow", flow_str, "flow index alpha,p (alpha integer, u or v)");
    e->add_option("--time", time)->required();
    e->add_option("--dt", dt);
    e->add_option("--out", out_path, "snapshot output path");

    auto* c = app.add_subcommand("check", "run an identity-check suite");
    c->add_option("suite", suite)->required();
    c->add_option("config", cfg_path)->required();
    c->add_option("--zeta", zeta_str);
    c->add_option("--window", window);
    c->add_option("--tol", tol, "override every tolerance in the suite");
    c->add_option("--seed", seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (v->parsed()) {
            LoopLaxPoint lp = load_point(cfg_path);
            ValidationReport r = validate(lp.slices[0]);
            bool all_m1 = lp.in_m1;
            json rep = validation_json(r);
            rep["all_slices_in_m1"] = all_m1;
            std::cout << rep.dump(2) << "\n";
            return r.in_m0 && all_m1 ? 0 : 1;
        }
        if (e->parsed()) {
            LoopLaxPoint lp = load_point(cfg_path);
            require_m1(lp);
            HierarchyIndex idx = parse_flow(flow_str);
            std::vector<HierarchyIndex> conserved;
            for (int a = -2; a <= 2; ++a)
                for (int p : {0, 1}) conserved.push_back({ah_int(a), p});
            conserved.push_back({ah_v(), 1});
            conserved.push_back({ah_u(), 1});
            std::vector<cd> before;
            for (auto& ci : conserved) before.push_back(hamiltonian(ci, lp));
            EvolveOptions opts;
            opts.dt = dt;
            LoopLaxPoint end = evolve(lp, idx, time, opts);
            json drift = json::array();
            double worst = 0;
            for (std::size_t i = 0; i < conserved.size(); ++i) {
                double d = std::abs(hamiltonian(conserved[i], end) - before[i]);
                worst = std::max(worst, d);
                drift.push_back({{"index", to_string(conserved[i])}, {"drift", d}});
            }
            json rep = {{"flow", to_string(idx)},
                        {"time", time},
                        {"dt", dt},
                        {"max_drift", worst},
                        {"drift_table", drift}};
            if (!out_path.empty()) {
                const int N = end.N(), M = end.M();
                json lamj = json::array(), labj = json::array();
                for (int k = -N; k <= N; ++k)
                    for (int j = 0; j < M; ++j) {
                        cd cl = end.lam.at(k, j), cb = end.lab.at(k, j);
                        if (std::abs(cl) > 0)
                            lamj.push_back({k, j, cl.real(), cl.imag()});
                        if (std::abs(cb) > 0)
                            labj.push_back({k, j, cb.real(), cb.imag()});
                    }
                json snap = {{"n_modes", N},
                             {"x_modes", M},
                             {"lambda_grid", lamj},
                             {"lambdabar_grid", labj}};
                std::ofstream out(out_path);
                if (!out) throw IoError("cannot write " + out_path);
                out << snap.dump() << "\n";
                rep["snapshot"] = out_path;
            }
            std::cout << rep.dump(2) << "\n";
            return 0;
        }
        // check
        LoopLaxPoint lp = load_point(cfg_path);
        cd zeta;
        try {
            zeta = parse_zeta(zeta_str);
        } catch (const std::exception&) {
            throw ParseError("cannot parse zeta: " + zeta_str);
        }
        json rep = run_checks(build_suite(suite, lp, zeta, window, seed), tol);
        rep["suite"] = suite;
        std::cout << rep.dump(2) << "\n";
        return rep["pass"].get<bool>() ? 0 : 1;
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return err.code == errc::io ? 3 : 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
}
