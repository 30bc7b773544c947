#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <utility>

#include "stopflow/analytic.hpp"
#include "stopflow/boundary.hpp"
#include "stopflow/config.hpp"
#include "stopflow/errors.hpp"
#include "stopflow/learner.hpp"
#include "stopflow/manifest.hpp"
#include "stopflow/parallel.hpp"
#include "stopflow/policy_iteration.hpp"
#include "stopflow/report.hpp"
#include "stopflow/simulator.hpp"

namespace stopflow {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const std::vector<std::string> kOnOff{"on", "off"};

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += fmt17(v[i]);
    }
    return s;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return v;
}

void write_named_csv(const fs::path& path,
                     const std::vector<std::pair<std::string, double>>& rows) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "quantity,value\n";
    for (const auto& [name, value] : rows) out << name << ',' << fmt17(value) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

struct Global {
    std::string config;
    std::uint64_t seed = 42;
    std::string out_dir = "stopflow_out";
    unsigned threads = 0;
    std::map<std::string, double> model;
    std::map<std::string, CLI::Option*> model_opts;
    CLI::Option* out_dir_opt = nullptr;
    CLI::Option* threads_opt = nullptr;

    ModelParams params() const {
        std::map<std::string, double> flags;
        for (const auto& [key, opt] : model_opts) {
            if (opt->count() > 0) flags[key] = model.at(key);
        }
        std::optional<fs::path> file;
        if (!config.empty()) file = config;
        return resolve_params(file, flags);
    }
};

/// Output bookkeeping for one command: artifact paths, resolved options and
/// the manifest written at the end.
class Run {
public:
    Run(std::string command, const Global& g, const ModelParams& params)
        : out_dir_(g.out_dir), start_(Clock::now()) {
        manifest_.command = std::move(command);
        manifest_.version = kVersion;
        manifest_.params = params;
        manifest_.seed = g.seed;
        manifest_.threads = g.threads;
        fs::create_directories(out_dir_);
    }

    fs::path file(const std::string& name) {
        manifest_.artifacts.push_back(name);
        return out_dir_ / name;
    }
    void option(const std::string& key, std::string value) {
        manifest_.options[key] = std::move(value);
    }
    void option(const std::string& key, double value) { option(key, fmt17(value)); }
    void option(const std::string& key, std::size_t value) { option(key, std::to_string(value)); }
    void option(const std::string& key, int value) { option(key, std::to_string(value)); }

    void finish() {
        manifest_.duration_s = std::chrono::duration<double>(Clock::now() - start_).count();
        write_manifest(out_dir_ / "manifest.json", manifest_);
        std::cout << manifest_.command << ": wrote " << manifest_.artifacts.size()
                  << " artifacts to " << out_dir_.string() << '\n';
    }

private:
    fs::path out_dir_;
    RunManifest manifest_;
    Clock::time_point start_;
};

std::vector<double> reference_boundary(const ModelParams& params, const Grid& grid) {
    const ClosedFormBoundary cf(params);
    std::vector<double> ref;
    ref.reserve(grid.nx());
    for (double x : grid.x_nodes) ref.push_back(cf.g_lambda(x));
    return ref;
}

Boundary initial_boundary(const ModelParams& params, const Grid& grid, InitKind kind,
                          double zeta) {
    return kind == InitKind::linear ? init_linear(params, grid)
                                    : init_exponential(params, grid, zeta);
}

void write_iterates(Run& run, const std::vector<Boundary>& gs) {
    for (std::size_t k = 0; k < gs.size(); ++k) {
        write_boundary_csv(run.file("g_iter_" + std::to_string(k) + ".csv"), gs[k]);
    }
}

void plot_iterates(const fs::path& path, const std::string& title,
                   const std::vector<Boundary>& gs, const Grid& grid,
                   const std::vector<double>& reference) {
    std::vector<SvgSeries> series;
    std::vector<std::size_t> picks{0, 1, 2, 5};
    picks.push_back(gs.size() - 1);
    std::size_t last = std::numeric_limits<std::size_t>::max();
    for (std::size_t k : picks) {
        if (k >= gs.size() || k == last) continue;
        last = k;
        series.push_back({"g_" + std::to_string(k), grid.x_nodes, gs[k].y_values(), false});
    }
    series.push_back({"g_lambda", grid.x_nodes, reference, true});
    write_svg_plot(path, title, "x", "y", series);
}

std::vector<double> iteration_axis(std::size_t n) {
    std::vector<double> it(n);
    for (std::size_t k = 0; k < n; ++k) it[k] = static_cast<double>(k);
    return it;
}

// ---------------------------------------------------------------------------
// analytic

struct AnalyticOpts {
    double x_min = 0.05;
    double x_max = 10.0;
    std::size_t nx = 100;
    std::size_t ny = 100;
    std::size_t n_curve = 501;
};

void cmd_analytic(const Global& g, const AnalyticOpts& o) {
    const ModelParams params = g.params();
    Run run("analytic", g, params);
    run.option("x-min", o.x_min);
    run.option("x-max", o.x_max);
    run.option("nx", o.nx);
    run.option("ny", o.ny);
    run.option("n-curve", o.n_curve);
    if (!(o.x_min > 0.0 && o.x_max > o.x_min) || o.nx < 2 || o.ny < 1 || o.n_curve < 2) {
        throw ValidationError("analytic: need 0 < x-min < x-max, nx >= 2, ny >= 1, n-curve >= 2");
    }

    const ClosedFormSolution sol(params);
    const UnregularizedSolution unreg(params);

    const std::vector<double> xc = linspace(0.0, o.x_max, o.n_curve);
    std::vector<double> gl, v_reg, v_unreg;
    {
        CsvWriter b(run.file("boundary.csv"), {"x", "g_lambda"});
        CsvWriter v(run.file("value_y1.csv"), {"x", "value_lambda", "value_unregularized"});
        for (double x : xc) {
            gl.push_back(sol.g_lambda(x));
            v_reg.push_back(sol.value(x, 1.0));
            v_unreg.push_back(unreg.value(x));
            b.row({x, gl.back()});
            v.row({x, v_reg.back(), v_unreg.back()});
        }
        b.close();
        v.close();
    }

    const std::vector<double> xs = linspace(o.x_min, o.x_max, o.nx);
    std::vector<double> ys(o.ny);
    for (std::size_t j = 0; j < o.ny; ++j) {
        ys[j] = static_cast<double>(j + 1) / static_cast<double>(o.ny);
    }
    const HjbReport hjb = sol.verify_hjb(xs, ys);
    {
        CsvWriter h(run.file("hjb_residuals.csv"), {"x", "y", "exploration", "pde_residual", "uy"});
        for (const HjbPoint& p : hjb.points) {
            h.row({p.x, p.y, p.exploration ? 1.0 : 0.0, p.pde_residual, p.uy});
        }
        h.close();
    }

    {
        CsvWriter inv(run.file("inverse.csv"), {"y", "b_lambda"});
        for (double y : linspace(sol.y_lambda(), 1.0, o.n_curve)) inv.row({y, sol.b_lambda(y)});
        inv.close();
        CsvWriter val(run.file("value.csv"), {"x", "y", "value"});
        for (double x : xs) {
            for (double y : ys) val.row({x, y, sol.value(x, y)});
        }
        val.close();
        const VanishTable table =
            vanishing_sweep(params, {1.0, 0.5, 0.1, 0.01, 0.001}, {1.0, std::exp(-1.0), 0.1});
        CsvWriter van(run.file("vanish.csv"), {"lambda", "y", "b_lambda", "gap"});
        for (const VanishRow& r : table.rows) van.row({r.lambda, r.y, r.b_lambda, r.gap});
        van.close();
    }

    double gap = 0.0;
    for (std::size_t i = 0; i < xc.size(); ++i) gap = std::max(gap, std::abs(v_reg[i] - v_unreg[i]));
    const RealOptionModel& m = sol.model();
    write_named_csv(run.file("summary.csv"),
                    {{"alpha_minus", m.alpha_minus()},
                     {"alpha_plus", m.alpha_plus()},
                     {"P", m.P()},
                     {"y_lambda", sol.y_lambda()},
                     {"b_star", sol.b_star()},
                     {"x_hat", sol.x_hat()},
                     {"hjb_max_abs_pde_exploration", hjb.max_abs_pde_exploration},
                     {"hjb_max_neg_uy_exploration", hjb.max_neg_uy_exploration},
                     {"hjb_max_abs_uy_stopping", hjb.max_abs_uy_stopping},
                     {"hjb_max_pde_stopping", hjb.max_pde_stopping},
                     {"hjb_n_exploration", static_cast<double>(hjb.n_exploration)},
                     {"hjb_n_stopping", static_cast<double>(hjb.n_stopping)},
                     {"sup_value_gap_y1", gap},
                     {"value_gap_bound", params.lambda / (params.rho * std::exp(1.0))}});

    write_svg_plot(run.file("boundary.svg"), "Free boundary g_lambda", "x", "y",
                   {{"g_lambda", xc, gl, false}});
    write_svg_plot(run.file("value.svg"), "Value at full mass", "x", "value",
                   {{"V_lambda(x,1)", xc, v_reg, false}, {"V(x)", xc, v_unreg, true}});
    run.finish();
}

// ---------------------------------------------------------------------------
// pi

struct GridOpts {
    double dx = 0.02;
    double dy = 0.02;
    double x_max = 5.0;

    void add(CLI::App* sub) {
        sub->add_option("--grid-dx", dx, "x spacing")->capture_default_str();
        sub->add_option("--grid-dy", dy, "y spacing")->capture_default_str();
        sub->add_option("--x-max", x_max, "largest x node")->capture_default_str();
    }
    void record(Run& run) const {
        run.option("grid-dx", dx);
        run.option("grid-dy", dy);
        run.option("x-max", x_max);
    }
    Grid grid() const { return Grid::uniform(x_max, dx, dy); }
};

struct PiOpts {
    GridOpts grid;
    std::size_t nx = 0;
    int max_iters = 50;
    double tol = 1e-10;
    double root_tol = 1e-10;
    std::string init = "exponential";
    double zeta = 0.75;
};

void cmd_pi(const Global& g, const PiOpts& o) {
    const ModelParams params = g.params();
    Run run("pi", g, params);
    o.grid.record(run);
    run.option("nx", o.nx);
    run.option("max-iters", o.max_iters);
    run.option("tol", o.tol);
    run.option("root-tol", o.root_tol);
    run.option("init", o.init);
    run.option("zeta", o.zeta);

    PIConfig cfg;
    GridOpts grid = o.grid;
    if (o.nx > 0) grid.dx = grid.x_max / static_cast<double>(o.nx);
    cfg.grid = grid.grid();
    cfg.max_iters = o.max_iters;
    cfg.boundary_tol = o.tol;
    cfg.root_tol = o.root_tol;
    cfg.init_kind = parse_init_kind(o.init);
    cfg.init_zeta = o.zeta;
    const IterationReport rep = stopflow::run(params, cfg);

    write_iterates(run, rep.boundaries);
    {
        CsvWriter t(run.file("report.csv"), {"iter", "sup_err", "l1_err", "min_improvement"});
        for (std::size_t k = 0; k < rep.boundaries.size(); ++k) {
            t.row({static_cast<double>(k), rep.sup_err[k], rep.l1_err[k],
                   rep.min_value_improvement[k]});
        }
        t.close();
    }
    const std::vector<double> ref = reference_boundary(params, cfg.grid);
    const std::vector<double> it = iteration_axis(rep.l1_err.size());
    write_svg_plot(run.file("convergence.svg"), "Policy iteration: distance to g_lambda",
                   "iteration", "error", {{"L1", it, rep.l1_err, false}, {"sup", it, rep.sup_err, true}},
                   true);
    plot_iterates(run.file("boundary_evolution.svg"), "Policy iteration boundaries", rep.boundaries,
                  cfg.grid, ref);
    run.finish();
}

// ---------------------------------------------------------------------------
// spi / reproduce

struct SimOpts {
    double dt = 1e-3;
    double horizon = 20.0;
    std::string antithetic = "off";

    void add(CLI::App* sub) {
        sub->add_option("--dt", dt, "time step")->capture_default_str();
        sub->add_option("--horizon", horizon, "truncation horizon T")->capture_default_str();
        sub->add_option("--antithetic", antithetic, "antithetic pairs")
            ->check(CLI::IsMember(kOnOff))
            ->capture_default_str();
    }
    void record(Run& run) const {
        run.option("dt", dt);
        run.option("horizon", horizon);
        run.option("antithetic", antithetic);
    }
    SimConfig config(std::uint64_t seed, std::size_t paths) const {
        SimConfig c;
        c.dt = dt;
        c.horizon = horizon;
        c.seed = seed;
        c.n_paths = paths;
        c.antithetic = antithetic == "on";
        return c;
    }
};

struct SpiOpts {
    GridOpts grid;
    SimOpts sim;
    std::size_t paths_per_node = 20;
    int outer_iters = 10;
    std::string init = "exponential";
    double zeta = 0.75;
    std::string crn = "on";
    double gate_sigma = 3.0;
    std::string oracle = "off";
    std::string learn_y0 = "off";
    double eta0 = 0.05;
    double c0 = 0.01;

    void add_learning(CLI::App* sub) {
        grid.add(sub);
        sim.add(sub);
        sub->add_option("--paths-per-node", paths_per_node, "Monte-Carlo paths per node (M)")
            ->capture_default_str();
        sub->add_option("--zeta", zeta, "exponential initialization exponent")
            ->capture_default_str();
        sub->add_option("--crn", crn, "common random numbers across nodes")
            ->check(CLI::IsMember(kOnOff))
            ->capture_default_str();
        sub->add_option("--gate-sigma", gate_sigma, "keep threshold in standard errors")
            ->capture_default_str();
    }
    void record_learning(Run& run) const {
        grid.record(run);
        sim.record(run);
        run.option("paths-per-node", paths_per_node);
        run.option("outer-iters", outer_iters);
        run.option("zeta", zeta);
        run.option("crn", crn);
        run.option("gate-sigma", gate_sigma);
    }
    LearnConfig config(std::uint64_t seed) const {
        LearnConfig c;
        c.grid = grid.grid();
        c.n_paths_per_node = paths_per_node;
        c.outer_iters = outer_iters;
        c.sim = sim.config(seed, paths_per_node);
        c.eta0 = eta0;
        c.c0 = c0;
        c.crn = crn == "on";
        c.gate_sigma = gate_sigma;
        return c;
    }
};

void cmd_spi(const Global& g, const SpiOpts& o) {
    const ModelParams params = g.params();
    Run run("spi", g, params);
    o.record_learning(run);
    run.option("init", o.init);
    run.option("oracle", o.oracle);
    run.option("learn-y0", o.learn_y0);
    run.option("eta0", o.eta0);
    run.option("c0", o.c0);

    const LearnConfig cfg = o.config(g.seed);
    validate(cfg);
    Boundary g0 = initial_boundary(params, cfg.grid, parse_init_kind(o.init), o.zeta);

    if (o.learn_y0 == "on") {
        Y0Config yc;
        yc.eta0 = o.eta0;
        yc.c0 = o.c0;
        const Y0Result y0 = learn_initial_mass(zero_state_value(params, cfg.sim), 0.5, yc);
        CsvWriter t(run.file("y0_trace.csv"), {"iter", "y", "grad_estimate"});
        for (const Y0TraceRow& r : y0.trace) t.row({static_cast<double>(r.iter), r.y, r.grad});
        t.close();
        std::vector<double> shifted = g0.y_values();
        const double factor = y0.y / shifted.front();
        for (double& v : shifted) v = std::min(1.0, v * factor);
        g0 = Boundary(g0.x_nodes(), std::move(shifted));
    }

    const std::vector<double> ref = reference_boundary(params, cfg.grid);
    const ValueSource source =
        o.oracle == "on" ? oracle_source(params, cfg.grid) : monte_carlo_source(params, cfg);
    const IterationReport rep = spi_run(cfg, g0, source, ref);

    write_iterates(run, rep.boundaries);
    {
        CsvWriter t(run.file("l1_trace.csv"), {"iter", "l1", "sup"});
        for (std::size_t k = 0; k < rep.boundaries.size(); ++k) {
            t.row({static_cast<double>(k), rep.l1_err[k], rep.sup_err[k]});
        }
        t.close();
    }
    const std::vector<double> it = iteration_axis(rep.l1_err.size());
    write_svg_plot(run.file("convergence.svg"), "Sample-based policy iteration: L1 to g_lambda",
                   "outer iteration", "L1 error", {{"L1", it, rep.l1_err, false}}, true);
    plot_iterates(run.file("boundaries.svg"), "Sample-based policy iteration boundaries",
                  rep.boundaries, cfg.grid, ref);
    run.finish();
}

void cmd_reproduce(const Global& g, const SpiOpts& o) {
    const ModelParams params = g.params();
    Run run("reproduce", g, params);
    o.record_learning(run);

    const LearnConfig cfg = o.config(g.seed);
    validate(cfg);
    const std::vector<double> ref = reference_boundary(params, cfg.grid);
    const ValueSource source = monte_carlo_source(params, cfg);

    std::vector<SvgSeries> overlay{{"g_lambda", cfg.grid.x_nodes, ref, true}};
    std::vector<SvgSeries> traces;
    std::vector<std::vector<double>> finals;
    for (InitKind kind : {InitKind::exponential, InitKind::linear}) {
        const std::string name = to_string(kind);
        const Boundary g0 = initial_boundary(params, cfg.grid, kind, o.zeta);
        const IterationReport rep = spi_run(cfg, g0, source, ref);
        CsvWriter t(run.file("l1_trace_" + name + ".csv"), {"iter", "l1", "sup"});
        for (std::size_t k = 0; k < rep.boundaries.size(); ++k) {
            t.row({static_cast<double>(k), rep.l1_err[k], rep.sup_err[k]});
        }
        t.close();
        finals.push_back(rep.boundaries.back().y_values());
        overlay.push_back({name + " init, final", cfg.grid.x_nodes, finals.back(), false});
        overlay.push_back({name + " init, g_0", cfg.grid.x_nodes,
                           rep.boundaries.front().y_values(), true});
        traces.push_back({name + " init", iteration_axis(rep.l1_err.size()), rep.l1_err, false});
    }
    {
        CsvWriter b(run.file("boundary_overlay.csv"),
                    {"x", "g_lambda", "g_final_exponential", "g_final_linear"});
        for (std::size_t i = 0; i < cfg.grid.nx(); ++i) {
            b.row({cfg.grid.x_nodes[i], ref[i], finals[0][i], finals[1][i]});
        }
        b.close();
    }
    write_svg_plot(run.file("boundary_overlay.svg"), "Learned boundaries against g_lambda", "x",
                   "y", overlay);
    write_svg_plot(run.file("l1_trace.svg"), "Convergence to the ground truth in L1 norm",
                   "outer iteration", "L1 error", traces, true);
    run.finish();
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
    SimOpts sim;
    std::string policy = "analytic";
    std::string boundary;
    std::vector<double> x0{2.0};
    std::vector<double> y0{1.0};
    std::size_t paths = 10000;
    std::size_t dump_paths = 0;
};

template <class G>
void simulate_with(Run& run, const Simulator& sim, const G& g, const SimulateOpts& o) {
    CsvWriter est(run.file("estimate.csv"), {"x0", "y0", "mean", "stderr", "n_paths"});
    for (double x0 : o.x0) {
        for (std::size_t a = 0; a < o.y0.size(); a += Simulator::kMaxBatch) {
            const std::size_t b = std::min(o.y0.size(), a + Simulator::kMaxBatch);
            const std::vector<double> batch(o.y0.begin() + static_cast<std::ptrdiff_t>(a),
                                            o.y0.begin() + static_cast<std::ptrdiff_t>(b));
            const std::vector<Estimate> e = sim.estimate_values(x0, batch, g);
            for (std::size_t j = 0; j < batch.size(); ++j) {
                est.row({x0, batch[j], e[j].mean, e[j].stderr_, static_cast<double>(e[j].n_paths)});
            }
        }
    }
    est.close();
    if (o.dump_paths == 0) return;
    CsvWriter paths(run.file("paths.csv"), {"path_id", "t", "x", "y", "xi"});
    for (std::size_t p = 0; p < o.dump_paths; ++p) {
        const Trajectory tr = sim.simulate_policy(o.x0.front(), o.y0.front(), g, p);
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            paths.row({static_cast<double>(p), tr.times[i], tr.x[i], tr.y[i], tr.xi[i]});
        }
    }
    paths.close();
}

void cmd_simulate(const Global& g, const SimulateOpts& o) {
    const ModelParams params = g.params();
    Run run("simulate", g, params);
    o.sim.record(run);
    run.option("policy", o.policy);
    run.option("x0", join(o.x0));
    run.option("y0", join(o.y0));
    run.option("paths", o.paths);
    run.option("dump-paths", o.dump_paths);

    const Simulator sim(params, o.sim.config(g.seed, o.paths));
    if (o.policy == "file") {
        if (o.boundary.empty()) throw ValidationError("simulate: --policy file needs --boundary");
        const fs::path abs = fs::absolute(o.boundary);
        run.option("boundary", abs.string());
        const Boundary b = read_boundary_csv(abs);
        simulate_with(run, sim, b, o);
    } else if (o.policy == "never") {
        simulate_with(run, sim, NeverStop{}, o);
    } else {
        const ClosedFormBoundary cf(params);
        simulate_with(run, sim, [&cf](double x) { return cf.g_lambda(x); }, o);
    }
    run.finish();
}

// ---------------------------------------------------------------------------
// learn-y0

struct LearnY0Opts {
    SimOpts sim;
    double y_init = 0.5;
    double eta0 = 0.05;
    double c0 = 0.01;
    int iters = 200;
    double grad_tol = 1e-6;
};

void cmd_learn_y0(const Global& g, const LearnY0Opts& o) {
    const ModelParams params = g.params();
    Run run("learn-y0", g, params);
    o.sim.record(run);
    run.option("y-init", o.y_init);
    run.option("eta0", o.eta0);
    run.option("c0", o.c0);
    run.option("iters", o.iters);
    run.option("grad-tol", o.grad_tol);

    Y0Config yc;
    yc.eta0 = o.eta0;
    yc.c0 = o.c0;
    yc.max_iters = o.iters;
    yc.grad_tol = o.grad_tol;
    const Y0Result res = learn_initial_mass(zero_state_value(params, o.sim.config(g.seed, 1)),
                                            o.y_init, yc);
    std::vector<double> it, err;
    const double target = std::exp(-1.0 - params.kappa * params.rho / params.lambda);
    {
        CsvWriter t(run.file("y0_trace.csv"), {"iter", "y", "grad_estimate"});
        for (const Y0TraceRow& r : res.trace) {
            t.row({static_cast<double>(r.iter), r.y, r.grad});
            it.push_back(r.iter);
            err.push_back(std::abs(r.y - target));
        }
        t.close();
    }
    write_svg_plot(run.file("y0_trace.svg"), "Zeroth-order search for g(0)", "iteration",
                   "|y_i - exp(-1 - kappa rho / lambda)|", {{"error", it, err, false}}, true);
    run.finish();
}

// ---------------------------------------------------------------------------
// vanish

struct VanishOpts {
    std::vector<double> lambdas{1.0, 0.5, 0.1, 0.01, 0.001};
    std::vector<double> ys{1.0, 0.1};
};

void cmd_vanish(const Global& g, const VanishOpts& o) {
    const ModelParams params = g.params();
    Run run("vanish", g, params);
    run.option("lambdas", join(o.lambdas));
    run.option("ys", join(o.ys));

    const VanishTable table = vanishing_sweep(params, o.lambdas, o.ys);
    std::map<double, SvgSeries> per_y;
    {
        CsvWriter t(run.file("vanish.csv"), {"lambda", "y", "b_lambda", "gap"});
        for (const VanishRow& r : table.rows) {
            t.row({r.lambda, r.y, r.b_lambda, r.gap});
            SvgSeries& s = per_y[r.y];
            s.label = "y = " + fmt17(r.y);
            s.x.push_back(std::log10(r.lambda));
            s.y.push_back(r.gap);
        }
        t.close();
    }
    {
        CsvWriter c(run.file("vanish_check.csv"), {"y", "monotone_ok"});
        for (std::size_t j = 0; j < o.ys.size(); ++j) {
            c.row({o.ys[j], table.monotone_ok[j] ? 1.0 : 0.0});
        }
        c.close();
    }
    std::vector<SvgSeries> series;
    for (auto& [y, s] : per_y) series.push_back(std::move(s));
    write_svg_plot(run.file("vanish.svg"),
                   "Boundary gap b_lambda(y) - b*, b* = " + fmt17(unregularized_threshold(params)),
                   "log10 lambda",
                   "gap", series);
    run.finish();
}

// ---------------------------------------------------------------------------

int replay(const Global& g, const std::string& manifest_path) {
    const RunManifest m = read_manifest(manifest_path);
    if (m.command == "replay") throw ValidationError("cannot replay a replay manifest");
    const fs::path out = g.out_dir_opt->count() > 0
                             ? fs::path(g.out_dir)
                             : fs::path(manifest_path).parent_path() / "replay";
    const unsigned threads = g.threads_opt->count() > 0 ? g.threads : m.threads;

    std::vector<std::string> args{"stopflow", m.command};
    const std::pair<const char*, double> model[] = {
        {"--mu", m.params.mu},         {"--sigma", m.params.sigma}, {"--rho", m.params.rho},
        {"--kappa", m.params.kappa},   {"--lambda", m.params.lambda},
        {"--theta", m.params.theta}};
    for (const auto& [flag, v] : model) {
        args.emplace_back(flag);
        args.push_back(fmt17(v));
    }
    args.insert(args.end(), {"--seed", std::to_string(m.seed), "--out-dir", out.string(),
                             "--threads", std::to_string(threads)});
    for (const auto& [key, value] : m.options) {
        args.push_back("--" + key);
        args.push_back(value);
    }
    return run_cli(args);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Entropy-regularized optimal stopping: closed forms, policy iteration, "
                 "Monte-Carlo evaluation and model-free learning",
                 "stopflow"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    Global g;
    app.add_option("--config", g.config, "key=value model file");
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    g.out_dir_opt = app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
    g.threads_opt =
        app.add_option("--threads", g.threads, "worker threads (0 = all cores)")->capture_default_str();
    for (const char* key : kModelKeys) {
        g.model[key] = std::numeric_limits<double>::quiet_NaN();
        g.model_opts[key] =
            app.add_option(std::string("--") + key, g.model[key], "override model parameter")
                ->group("Model");
    }

    AnalyticOpts ao;
    CLI::App* analytic = app.add_subcommand("analytic", "closed-form boundary, value and HJB check");
    analytic->add_option("--x-min", ao.x_min, "smallest x of the HJB grid")->capture_default_str();
    analytic->add_option("--x-max", ao.x_max, "largest x")->capture_default_str();
    analytic->add_option("--nx", ao.nx, "HJB grid x points")->capture_default_str();
    analytic->add_option("--ny", ao.ny, "HJB grid y points")->capture_default_str();
    analytic->add_option("--n-curve", ao.n_curve, "points on the boundary curve")
        ->capture_default_str();

    PiOpts po;
    CLI::App* pi = app.add_subcommand("pi", "model-based policy iteration");
    po.grid.add(pi);
    pi->add_option("--nx", po.nx, "x intervals; overrides --grid-dx when positive")
        ->capture_default_str();
    pi->add_option("--max-iters", po.max_iters, "iteration cap")->capture_default_str();
    pi->add_option("--tol", po.tol, "sup-norm stopping tolerance")->capture_default_str();
    pi->add_option("--root-tol", po.root_tol, "y-root tolerance")->capture_default_str();
    pi->add_option("--init", po.init, "initial boundary")
        ->check(CLI::IsMember({"linear", "exponential"}))
        ->capture_default_str();
    pi->add_option("--zeta", po.zeta, "exponential initialization exponent")->capture_default_str();

    SpiOpts so;
    CLI::App* spi = app.add_subcommand("spi", "sample-based policy iteration");
    so.add_learning(spi);
    spi->add_option("--outer-iters", so.outer_iters, "outer iterations K")->capture_default_str();
    spi->add_option("--init", so.init, "initial boundary")
        ->check(CLI::IsMember({"linear", "exponential"}))
        ->capture_default_str();
    spi->add_option("--oracle", so.oracle, "use exact policy values instead of simulation")
        ->check(CLI::IsMember(kOnOff))
        ->capture_default_str();
    spi->add_option("--learn-y0", so.learn_y0, "learn g(0) by zeroth-order search first")
        ->check(CLI::IsMember(kOnOff))
        ->capture_default_str();
    spi->add_option("--eta0", so.eta0, "step scale for the g(0) search")->capture_default_str();
    spi->add_option("--c0", so.c0, "perturbation scale for the g(0) search")->capture_default_str();

    SimulateOpts mo;
    CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo policy evaluation");
    mo.sim.add(simulate);
    simulate->add_option("--policy", mo.policy, "analytic (g_lambda), file or never")
        ->check(CLI::IsMember({"analytic", "file", "never"}))
        ->capture_default_str();
    simulate->add_option("--boundary", mo.boundary, "boundary CSV (x,y); implies --policy file");
    simulate->add_flag_callback("--analytic", [&mo] { mo.policy = "analytic"; },
                                "same as --policy analytic");
    simulate->add_option("--x0", mo.x0, "starting states")->delimiter(',')->capture_default_str();
    simulate->add_option("--y0", mo.y0, "starting masses")->delimiter(',')->capture_default_str();
    simulate->add_option("--paths", mo.paths, "paths M")->capture_default_str();
    simulate->add_option("--dump-paths", mo.dump_paths, "write this many trajectories")
        ->capture_default_str();

    LearnY0Opts lo;
    CLI::App* learn = app.add_subcommand("learn-y0", "zeroth-order search for g(0)");
    lo.sim.add(learn);
    learn->add_option("--y-init", lo.y_init, "starting iterate")->capture_default_str();
    learn->add_option("--eta0", lo.eta0, "step scale")->capture_default_str();
    learn->add_option("--c0", lo.c0, "perturbation scale")->capture_default_str();
    learn->add_option("--iters", lo.iters, "iteration cap")->capture_default_str();
    learn->add_option("--grad-tol", lo.grad_tol, "gradient stopping tolerance")
        ->capture_default_str();

    VanishOpts vo;
    CLI::App* vanish = app.add_subcommand("vanish", "boundary gap as the temperature vanishes");
    vanish->add_option("--lambdas", vo.lambdas, "temperatures in (0,1]")
        ->delimiter(',')
        ->capture_default_str();
    vanish->add_option("--ys", vo.ys, "mass levels")->delimiter(',')->capture_default_str();

    SpiOpts ro;
    ro.outer_iters = 20;
    CLI::App* reproduce = app.add_subcommand("reproduce", "desk-scale learning experiment, both initializations");
    ro.add_learning(reproduce);
    reproduce->add_option("--outer-iters", ro.outer_iters, "outer iterations K")
        ->capture_default_str();

    std::string manifest_path;
    CLI::App* rep = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    rep->add_option("manifest", manifest_path, "manifest.json")->required();

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        set_default_threads(g.threads);
        if (!mo.boundary.empty()) mo.policy = "file";
        if (analytic->parsed()) cmd_analytic(g, ao);
        else if (pi->parsed()) cmd_pi(g, po);
        else if (spi->parsed()) cmd_spi(g, so);
        else if (simulate->parsed()) cmd_simulate(g, mo);
        else if (learn->parsed()) cmd_learn_y0(g, lo);
        else if (vanish->parsed()) cmd_vanish(g, vo);
        else if (reproduce->parsed()) cmd_reproduce(g, ro);
        else if (rep->parsed()) return replay(g, manifest_path);
        return kExitOk;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace stopflow
