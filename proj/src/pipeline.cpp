#include "ifp/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>

#include <json.hpp>

#include "ifp/csv.hpp"
#include "ifp/special.hpp"

namespace ifp {

namespace {

using nlohmann::json;
constexpr const char* kVersion = "0.1.0";
constexpr double kSqrt2 = 1.41421356237309504880;

InitialDensity build_density(const RunConfig& cfg) {
    const std::string& k = cfg.density_kind;
    if (k == "delta") return InitialDensity::delta(cfg.density_x0);
    if (k == "xexp") {
        double r = cfg.density_rate;
        if (!(r > 0)) throw SolverError(Errc::config_error, "density.rate must be positive");
        return InitialDensity::analytic(
            [r](double x) { return r * r * x * std::exp(-r * x); }, 0.0, 42.0 / r);
    }
    if (k == "bell")
        return InitialDensity::analytic(
            [](double x) { return 0.5 * x * x * std::exp(-x); }, 0.0, 48.0);
    if (k == "gauss") {
        double m = cfg.density_mean, s = cfg.density_sd;
        if (!(s > 0)) throw SolverError(Errc::config_error, "density.sd must be positive");
        return InitialDensity::analytic(
            [m, s](double x) { return norm_pdf((x - m) / s) / s; }, m - 8.5 * s, m + 8.5 * s);
    }
    if (k == "tabulated")
        return InitialDensity::tabulated(cfg.density_knots, cfg.density_values);
    throw SolverError(Errc::config_error, "unknown density.kind: " + k);
}

} // namespace

DiffusionSpec build_spec(const RunConfig& cfg) {
    DiffusionSpec s;
    const std::string& k = cfg.process_kind;
    if (k == "brownian") {
        double mu = cfg.mu, sg = cfg.sigma;
        if (!(sg > 0)) throw SolverError(Errc::config_error, "process.sigma must be positive");
        s.mu = [mu](double, double) { return mu; };
        s.sigma = [sg](double, double) { return sg; };
        s.sigma_floor = 0.5 * sg;
    } else if (k == "ou") {
        double rate = cfg.ou_rate, level = cfg.ou_level, sg = cfg.ou_sigma;
        if (!(sg > 0)) throw SolverError(Errc::config_error, "process.ou_sigma must be positive");
        s.mu = [rate, level](double x, double) { return -rate * (x - level); };
        s.sigma = [sg](double, double) { return sg; };
        s.sigma_floor = 0.5 * sg;
    } else if (k == "tabulated") {
        if (cfg.tab_x.size() < 2 || cfg.tab_x.size() != cfg.tab_mu.size()
            || cfg.tab_x.size() != cfg.tab_sigma.size())
            throw SolverError(Errc::config_error, "tabulated process needs matching tab_* lists");
        auto interp1 = [xs = cfg.tab_x](const std::vector<double>& vs, double x) {
            if (x <= xs.front()) return vs.front();
            if (x >= xs.back()) return vs.back();
            auto it = std::upper_bound(xs.begin(), xs.end(), x);
            std::size_t j = std::size_t(it - xs.begin()) - 1;
            double w = (x - xs[j]) / (xs[j + 1] - xs[j]);
            return (1 - w) * vs[j] + w * vs[j + 1];
        };
        s.mu = [interp1, vs = cfg.tab_mu](double x, double) { return interp1(vs, x); };
        s.sigma = [interp1, vs = cfg.tab_sigma](double x, double) { return interp1(vs, x); };
        double floor = *std::min_element(cfg.tab_sigma.begin(), cfg.tab_sigma.end());
        if (!(floor > 0)) throw SolverError(Errc::config_error, "tab_sigma must be positive");
        s.sigma_floor = 0.5 * floor;
    } else {
        throw SolverError(Errc::config_error, "unknown process.kind: " + k);
    }
    s.initial_density = build_density(cfg);
    s.x_lo_hint = cfg.x_lo_hint;
    s.x_hi_hint = cfg.x_hi_hint;
    return s;
}

SpaceTimeGrid build_grid(RunConfig& cfg, const ReducedSpec& reduced,
                         const Boundary* reduced_barrier) {
    const double T = cfg.t_end;
    const InitialDensity& u0 = reduced.reduced.initial_density;

    double t0;
    if (cfg.grid_t0) {
        t0 = *cfg.grid_t0;
    } else if (u0.is_delta()) {
        Boundary none{{0.0, T}, {kMinusInf, kMinusInf}};
        const Boundary& b = reduced_barrier ? *reduced_barrier : none;
        t0 = delta_warmstart_time(u0.delta_x0, b, 1e-12, std::min(0.05, T / 20.0));
    } else {
        t0 = 0.0;
    }

    double x_lo, x_hi;
    if (cfg.grid_x_min && cfg.grid_x_max) {
        x_lo = *cfg.grid_x_min;
        x_hi = *cfg.grid_x_max;
    } else {
        double top = u0.is_delta() ? u0.delta_x0 : u0.support_ceiling;
        double bot = u0.is_delta() ? u0.delta_x0 : u0.support_floor;
        double drift_max = 0.0;
        for (int i = 0; i <= 8; ++i) {
            double x = reduced.reduced.x_lo_hint
                     + (reduced.reduced.x_hi_hint - reduced.reduced.x_lo_hint) * i / 8.0;
            for (int k = 0; k <= 4; ++k)
                drift_max = std::max(drift_max, std::abs(reduced.reduced.mu(x, T * k / 4.0)));
        }
        // free-space tails: < 1e-10 above, < 1e-8-compatible below
        double hi = top + drift_max * T + 6.5 * std::sqrt(2.0 * T);
        double lo = bot - drift_max * T - 6.0 * std::sqrt(2.0 * T);
        if (reduced_barrier) {
            double bmin = reduced_barrier->min_finite();
            if (std::isfinite(bmin)) lo = std::min(lo, bmin - 1.0);
        }
        x_hi = cfg.grid_x_max ? *cfg.grid_x_max : std::ceil(hi * 2.0) / 2.0;
        x_lo = cfg.grid_x_min ? *cfg.grid_x_min : std::floor(lo * 2.0) / 2.0;
    }

    cfg.grid_t0 = t0;
    cfg.grid_x_min = x_lo;
    cfg.grid_x_max = x_hi;
    return SpaceTimeGrid::make(x_lo, x_hi, cfg.nx, t0, T, cfg.nt);
}

HodographStage run_hodograph_stage(const InverseSolution& sol, const SurvivalCurve& curve,
                                   const ReducedSpec& reduced, const SpaceTimeGrid& grid,
                                   const RunConfig& cfg) {
    HodographStage st;
    Field K = solve_scaling(reduced, grid);
    ScaledDensity sd = scaled_density(sol.u, K, reduced);

    const double t_hi = cfg.hod_window_hi ? *cfg.hod_window_hi : grid.t1;
    double t_lo = std::max(cfg.hod_window_lo, grid.t0 + 5 * grid.dt());
    int n_lo = std::max(0, int(std::ceil((t_lo - grid.t0) / grid.dt() - 1e-9)));
    int n_hi = std::min(grid.nt, int(std::floor((t_hi - grid.t0) / grid.dt() + 1e-9)));
    if (n_hi - n_lo < 8)
        throw SolverError(Errc::invalid_argument, "hodograph window too short");

    st.z_eps = cfg.z_eps ? *cfg.z_eps : choose_z_eps(sd.v, sol.b, n_lo, n_hi);
    st.X = invert_level_sets(sd.v, sol.b, st.z_eps, cfg.nz, n_lo, n_hi);

    Field vx = fd_derivative(sd.v, Axis::x, 1, StencilSide::central);
    const int nz = st.X.nz();
    std::vector<double> neumann(st.X.t.size());
    for (std::size_t i = 0; i < st.X.t.size(); ++i) {
        double slope = interp(vx, st.X.at(nz, int(i)), st.X.t[i]);
        if (!(slope > 0))
            throw SolverError(Errc::gradient_collapse,
                              "nonpositive level-set slope at the strip edge");
        neumann[i] = 1.0 / slope;
    }
    std::vector<double> profile(st.X.z.size());
    for (int zi = 0; zi <= nz; ++zi) profile[zi] = st.X.at(zi, 0);

    st.Y = solve_quasilinear(profile, curve, sd.scaling, sd.eff_drift, neumann,
                             st.X.z, st.X.t, {}, &st.band);

    st.b_window.resize(st.X.t.size());
    st.x_edge.resize(st.X.t.size());
    for (std::size_t i = 0; i < st.X.t.size(); ++i) {
        st.b_window[i] = sol.b(st.X.t[i]);
        st.x_edge[i] = st.X.at(nz, int(i));
    }

    st.sup_y_minus_x = 0.0;
    st.sup_y0_minus_b = 0.0;
    for (int ti = 0; ti <= st.Y.nt(); ++ti) {
        for (int zi = 0; zi <= nz; ++zi)
            st.sup_y_minus_x = std::max(st.sup_y_minus_x,
                                        std::abs(st.Y.at(zi, ti) - st.X.at(zi, ti)));
        st.sup_y0_minus_b = std::max(st.sup_y0_minus_b,
                                     std::abs(st.Y.at(0, ti) - st.b_window[ti]));
    }

    st.h_values = cfg.h_values;
    std::sort(st.h_values.begin(), st.h_values.end(), std::greater<>());
    for (double h : st.h_values) {
        if (!(h > 0))
            throw SolverError(Errc::invalid_argument, "h values must be positive");
        // the family members are independent; run the pair concurrently
        auto fut_up = std::async(std::launch::async, [&] {
            return solve_perturbed(+h, profile, curve, sd.scaling, sd.eff_drift,
                                   neumann, st.X.z, st.X.t);
        });
        auto fut_dn = std::async(std::launch::async, [&] {
            return solve_perturbed(-h, profile, curve, sd.scaling, sd.eff_drift,
                                   neumann, st.X.z, st.X.t);
        });
        st.y_up.push_back(fut_up.get());
        st.y_down.push_back(fut_dn.get());
        st.brackets.push_back(bracket_validate(st.b_window, st.x_edge,
                                               st.y_up.back(), st.y_down.back()));
    }

    MetricSeries all = sign_changes(sd.v, sol.b);
    st.sign_change_series.name = all.name;
    for (int n = n_lo; n <= n_hi; ++n) {
        st.sign_change_series.t.push_back(all.t[n]);
        st.sign_change_series.value.push_back(all.value[n]);
    }
    for (std::size_t i = 1; i < st.sign_change_series.value.size(); ++i)
        if (st.sign_change_series.value[i] > st.sign_change_series.value[i - 1])
            st.sign_changes_nonincreasing = false;
    return st;
}

namespace {

json metric_json(const Metric& m) {
    return json{{"name", m.name},     {"value", m.value},   {"tolerance", m.tolerance},
                {"pass", m.pass},     {"skipped", m.skipped}, {"note", m.note}};
}

json band_json(const BandConstants& b) {
    return json{{"M1", b.M1}, {"m1", b.m1}, {"M2", b.M2}, {"m2", b.m2},
                {"M3", b.M3}, {"m3", b.m3}, {"M", b.M},   {"m", b.m}};
}

json bracket_json(double h, const BracketReport& r) {
    return json{{"h", h},
                {"violations_boundary", r.violations_boundary},
                {"violations_edge", r.violations_edge},
                {"min_margin_boundary", r.min_margin_boundary},
                {"min_margin_edge", r.min_margin_edge},
                {"nonstrict", r.nonstrict}};
}

struct RunContext {
    RunConfig cfg;
    std::filesystem::path outdir;
    std::vector<std::string> artifacts;
    json extras;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    std::filesystem::path file(const std::string& name) {
        artifacts.push_back(name);
        return outdir / name;
    }

    void finish(const std::string& command) {
        std::ofstream ini(outdir / "resolved.ini");
        ini << cfg.canonical();
        artifacts.push_back("resolved.ini");

        double wall = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start).count();
        json man{{"command", command},
                 {"version", kVersion},
                 {"config_hash", cfg.hash()},
                 {"resolved_config", cfg.canonical()},
                 {"wall_time_s", wall},
                 {"artifacts", artifacts},
                 {"extras", extras}};
        std::ofstream out(outdir / "manifest.json");
        out << man.dump(2) << "\n";
    }
};

std::filesystem::path resolve_input(const RunConfig& cfg, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative()) path = cfg.base_dir / path;
    return path;
}

SurvivalCurve load_curve(const RunConfig& cfg) {
    if (cfg.survival_csv.empty())
        throw SolverError(Errc::config_error, "io.survival_csv is required for this command");
    auto samples = io::read_survival_csv(resolve_input(cfg, cfg.survival_csv));
    return validate_p0(samples.t, samples.p,
                       samples.has_pdot ? std::span<const double>(samples.pdot)
                                        : std::span<const double>{},
                       3);
}

PenaltyConfig penalty_from(const RunConfig& cfg) {
    PenaltyConfig pc = PenaltyConfig::with_schedule(cfg.eps0, cfg.eps_ratio, cfg.eps_min);
    pc.newton_tol = cfg.newton_tol;
    pc.max_newton = cfg.max_newton;
    pc.cont_tol = cfg.cont_tol;
    pc.theta = cfg.theta;
    return pc;
}

McOptions mc_from(const RunConfig& cfg) {
    McOptions mo;
    mo.n_paths = cfg.n_paths;
    mo.n_steps = cfg.n_steps;
    mo.seed = cfg.seed;
    mo.chunk_size = cfg.chunk;
    mo.threads = cfg.threads;
    return mo;
}

json convergence_json(const InverseSolution& sol) {
    json levels = json::array();
    for (const auto& l : sol.report.levels)
        levels.push_back(json{{"eps", l.eps},
                              {"newton_total", l.newton_total},
                              {"newton_worst_slice", l.newton_worst_slice},
                              {"worst_residual", l.worst_residual},
                              {"diff_prev", l.diff_prev}});
    return json{{"levels", levels},
                {"converged", sol.report.converged},
                {"schedule_exhausted", sol.report.schedule_exhausted},
                {"m", sol.report.m},
                {"theta", sol.report.theta},
                {"eps_final", sol.eps_final}};
}

int cmd_forward(RunContext& ctx, std::ostream&) {
    RunConfig& cfg = ctx.cfg;
    DiffusionSpec spec = build_spec(cfg);
    spec.validate(cfg.t_end);
    ReducedSpec reduced = sigma_reduce(spec, cfg.t_end);

    Boundary barrier;
    if (cfg.barrier_csv.empty()) {
        barrier = Boundary{{0.0, cfg.t_end}, {kMinusInf, kMinusInf}};
    } else {
        barrier = io::read_boundary_csv(resolve_input(cfg, cfg.barrier_csv));
    }
    Boundary mapped = reduced.map_boundary(barrier);

    SpaceTimeGrid grid = build_grid(cfg, reduced, &mapped);

    const bool want_pde = cfg.forward_method == "pde" || cfg.forward_method == "both";
    const bool want_mc = cfg.forward_method == "mc" || cfg.forward_method == "both";
    if (!want_pde && !want_mc)
        throw SolverError(Errc::config_error, "forward.method must be pde, mc or both");

    if (want_pde) {
        PdeOptions po;
        po.store_field = cfg.store_field;
        ForwardResult res = forward_pde(reduced, mapped, grid, po);
        io::write_survival_csv(ctx.file("p_hat_pde.csv"), res.t, res.p);
        if (res.density)
            io::write_field_csv(ctx.file("field_u.csv"), *res.density);
        ctx.extras["pde"] = json{{"normalization", res.normalization},
                                 {"warmstart_tail", res.warmstart_tail},
                                 {"min_density", res.min_density}};
    }
    if (want_mc) {
        ForwardResult res = forward_mc(spec, barrier, mc_from(cfg));
        io::write_survival_csv(ctx.file("p_hat_mc.csv"), res.t, res.p, res.se);
        ctx.extras["mc"] = json{{"n_paths", cfg.n_paths}, {"n_steps", cfg.n_steps}};
    }
    ctx.finish("forward");
    return exit_ok;
}

struct InverseOutputs {
    SurvivalCurve curve;
    DiffusionSpec spec;
    ReducedSpec reduced;
    SpaceTimeGrid grid;
    InverseSolution sol;
};

InverseOutputs run_inverse_core(RunConfig& cfg) {
    InverseOutputs out{load_curve(cfg), build_spec(cfg), {}, {}, {}};
    if (out.curve.t_back() < cfg.t_end - 1e-12)
        cfg.t_end = out.curve.t_back();
    out.spec.validate(cfg.t_end);
    out.reduced = sigma_reduce(out.spec, cfg.t_end);
    out.grid = build_grid(cfg, out.reduced, nullptr);
    out.sol = epsilon_continuation(out.curve, out.reduced, out.grid, penalty_from(cfg));
    return out;
}

int cmd_inverse(RunContext& ctx, std::ostream&) {
    InverseOutputs inv = run_inverse_core(ctx.cfg);
    Boundary original = inv.reduced.unmap_boundary(inv.sol.b);
    io::write_boundary_csv(ctx.file("boundary.csv"), original);
    if (ctx.cfg.store_field) {
        io::write_field_csv(ctx.file("field_w.csv"), inv.sol.w);
        io::write_field_csv(ctx.file("field_u.csv"), inv.sol.u);
    }
    std::ofstream conv(ctx.outdir / "convergence.json");
    conv << convergence_json(inv.sol).dump(2) << "\n";
    ctx.artifacts.push_back("convergence.json");
    ctx.finish("inverse");
    return exit_ok;
}

int cmd_hodograph(RunContext& ctx, std::ostream&) {
    InverseOutputs inv = run_inverse_core(ctx.cfg);
    HodographStage st = run_hodograph_stage(inv.sol, inv.curve, inv.reduced,
                                            inv.grid, ctx.cfg);
    io::write_hodograph_csv(ctx.file("y_strip.csv"), st.Y);
    io::write_boundary_csv(ctx.file("boundary.csv"),
                           inv.reduced.unmap_boundary(inv.sol.b));

    json brackets = json::array();
    for (std::size_t i = 0; i < st.h_values.size(); ++i)
        brackets.push_back(bracket_json(st.h_values[i], st.brackets[i]));
    json rep{{"z_eps", st.z_eps},
             {"h_values", st.h_values},
             {"band", band_json(st.band)},
             {"sup_y_minus_x", st.sup_y_minus_x},
             {"sup_y0_minus_b", st.sup_y0_minus_b},
             {"brackets", brackets}};
    std::ofstream bj(ctx.outdir / "bracket.json");
    bj << rep.dump(2) << "\n";
    ctx.artifacts.push_back("bracket.json");

    ctx.extras["z_eps"] = st.z_eps;
    ctx.extras["h_values"] = st.h_values;
    ctx.extras["band"] = band_json(st.band);
    ctx.finish("hodograph");
    return exit_ok;
}

int cmd_diagnose(RunContext& ctx, std::ostream& err, bool verify_mode) {
    RunConfig& cfg = ctx.cfg;
    SurvivalCurve curve = load_curve(cfg);
    if (curve.t_back() < cfg.t_end - 1e-12) cfg.t_end = curve.t_back();
    DiffusionSpec spec = build_spec(cfg);
    spec.validate(cfg.t_end);
    ReducedSpec reduced = sigma_reduce(spec, cfg.t_end);
    SpaceTimeGrid grid = build_grid(cfg, reduced, nullptr);

    RoundTripOptions opt;
    opt.penalty = penalty_from(cfg);
    opt.mc = mc_from(cfg);
    opt.run_mc = cfg.run_mc;
    opt.window_lo = cfg.diag_window_lo;
    opt.tol_roundtrip_pde = cfg.tol_roundtrip;
    opt.tol_fb_median = cfg.tol_fb_median;
    opt.tol_holder = cfg.tol_holder;

    RoundTripResult rt = round_trip(curve, spec, reduced, grid, opt);
    rt.report.provenance = cfg.hash();

    Boundary original = reduced.unmap_boundary(rt.inverse.b);
    io::write_boundary_csv(ctx.file("boundary.csv"), original);
    io::write_survival_csv(ctx.file("p_hat_pde.csv"), rt.pde.t, rt.pde.p);
    if (rt.mc)
        io::write_survival_csv(ctx.file("p_hat_mc.csv"), rt.mc->t, rt.mc->p, rt.mc->se);
    std::ofstream conv(ctx.outdir / "convergence.json");
    conv << convergence_json(rt.inverse).dump(2) << "\n";
    ctx.artifacts.push_back("convergence.json");

    // hodograph consistency metrics when a finite boundary exists
    const double dx = grid.dx();
    bool window_finite = !rt.inverse.b.all_infinite();
    if (window_finite) {
        double t_lo = std::max(cfg.hod_window_lo, grid.t0 + 5 * grid.dt());
        for (double t = t_lo; t <= grid.t1 + 1e-12; t += grid.dt())
            if (!std::isfinite(rt.inverse.b(t))) { window_finite = false; break; }
    }
    if (cfg.hodograph_enabled && window_finite) {
        HodographStage st = run_hodograph_stage(rt.inverse, curve, reduced, grid, cfg);
        rt.report.add({"hodograph_sup_y_minus_x", st.sup_y_minus_x, 2 * dx,
                       st.sup_y_minus_x <= 2 * dx, false, ""});
        rt.report.add({"hodograph_sup_y0_minus_b", st.sup_y0_minus_b, 2 * dx,
                       st.sup_y0_minus_b <= 2 * dx, false, ""});
        bool all_strict = true;
        double prev_width = std::numeric_limits<double>::infinity();
        bool widths_monotone = true;
        for (std::size_t i = 0; i < st.h_values.size(); ++i) {
            const auto& br = st.brackets[i];
            all_strict = all_strict && br.violations_boundary == 0
                      && br.violations_edge == 0 && !br.nonstrict;
            double width = 0.0;
            for (std::size_t k = 0; k < br.t.size(); ++k)
                width = std::max(width, br.hi_edge0[k] - br.lo_edge0[k]);
            if (width > prev_width + 1e-12) widths_monotone = false;
            prev_width = width;
        }
        rt.report.add({"bracket_strict", all_strict ? 1.0 : 0.0, 1.0, all_strict, false,
                       "strict bracketing for every tested h"});
        rt.report.add({"bracket_width_monotone", widths_monotone ? 1.0 : 0.0, 1.0,
                       widths_monotone, false, ""});
        rt.report.add({"sign_changes_nonincreasing",
                       st.sign_changes_nonincreasing ? 1.0 : 0.0, 1.0,
                       st.sign_changes_nonincreasing, false, ""});
        rt.report.series.push_back(st.sign_change_series);
        io::write_hodograph_csv(ctx.file("y_strip.csv"), st.Y);
        json brackets = json::array();
        for (std::size_t i = 0; i < st.h_values.size(); ++i)
            brackets.push_back(bracket_json(st.h_values[i], st.brackets[i]));
        std::ofstream bj(ctx.outdir / "bracket.json");
        bj << json{{"z_eps", st.z_eps}, {"band", band_json(st.band)},
                   {"brackets", brackets}}.dump(2) << "\n";
        ctx.artifacts.push_back("bracket.json");
        ctx.extras["z_eps"] = st.z_eps;
        ctx.extras["band"] = band_json(st.band);
    } else {
        rt.report.add({"hodograph_sup_y_minus_x", 0.0, 2 * dx, true, true,
                       "skipped: no finite boundary window"});
        rt.report.add({"hodograph_sup_y0_minus_b", 0.0, 2 * dx, true, true,
                       "skipped: no finite boundary window"});
    }

    json metrics = json::array();
    for (const auto& m : rt.report.metrics) metrics.push_back(metric_json(m));
    std::ofstream dj(ctx.outdir / "diagnostics.json");
    dj << json{{"provenance", rt.report.provenance},
               {"metrics", metrics},
               {"all_pass", rt.report.all_pass()}}.dump(2) << "\n";
    ctx.artifacts.push_back("diagnostics.json");

    // metric series as CSV
    {
        std::vector<io::PlotSeries> ps;
        for (const auto& s : rt.report.series)
            ps.push_back({s.name, s.t, s.value, {}});
        io::write_plotdata_csv(ctx.outdir / "metric_series.csv", ps);
        ctx.artifacts.push_back("metric_series.csv");
    }

    emit_plotdata(ctx.outdir, ctx.artifacts);
    ctx.artifacts.push_back("plotdata.csv");
    ctx.finish(verify_mode ? "verify" : "diagnose");

    for (const auto& m : rt.report.metrics) {
        std::ostream& os = err;
        os << (m.skipped ? "[SKIP] " : (m.pass ? "[PASS] " : "[FAIL] "))
           << m.name << " value=" << m.value << " tol=" << m.tolerance;
        if (!m.note.empty()) os << " (" << m.note << ")";
        os << "\n";
    }
    return rt.report.all_pass() ? exit_ok : exit_diagnostic;
}

} // namespace

void emit_plotdata(const std::filesystem::path& dir,
                   const std::vector<std::string>& artifacts,
                   const std::filesystem::path& out_name) {
    std::vector<io::PlotSeries> series;
    for (const auto& name : artifacts) {
        std::filesystem::path p = dir / name;
        if (name == "resolved.ini" || name == "manifest.json"
            || name == "convergence.json" || name == "diagnostics.json"
            || name == "bracket.json" || name == "metric_series.csv"
            || name.find("field_") == 0 || name == "y_strip.csv")
            continue;
        if (!std::filesystem::exists(p))
            throw SolverError(Errc::missing_artifact, "artifact not found: " + p.string());
        if (name == "boundary.csv") {
            Boundary b = io::read_boundary_csv(p);
            series.push_back({"boundary", b.t, b.b, {}});
        } else if (name.rfind("p_hat", 0) == 0) {
            std::ifstream in(p);
            std::string line;
            std::getline(in, line);
            bool has_se = line == "t,p_hat,se";
            io::PlotSeries s;
            s.name = (name == "p_hat_mc.csv") ? "p_mc" : "p_pde";
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                std::stringstream ss(line);
                std::string a, b2, c;
                std::getline(ss, a, ',');
                std::getline(ss, b2, ',');
                s.t.push_back(std::stod(a));
                s.value.push_back(std::stod(b2));
                if (has_se && std::getline(ss, c, ','))
                    s.se.push_back(std::stod(c));
            }
            series.push_back(std::move(s));
        }
    }
    io::write_plotdata_csv(dir / out_name, series);
}

int run_command_cfg(const std::string& command, RunConfig cfg, std::ostream& err) {
    try {
        if (const char* env = std::getenv("IFP_OUTPUT_DIR"))
            cfg.output_dir = env;
        RunContext ctx;
        ctx.outdir = cfg.output_dir;
        std::filesystem::create_directories(ctx.outdir);
        ctx.cfg = std::move(cfg);

        if (command == "forward") return cmd_forward(ctx, err);
        if (command == "inverse") return cmd_inverse(ctx, err);
        if (command == "hodograph") return cmd_hodograph(ctx, err);
        if (command == "diagnose") return cmd_diagnose(ctx, err, false);
        if (command == "verify") return cmd_diagnose(ctx, err, true);
        err << "unknown command: " << command << "\n";
        return exit_validation;
    } catch (const SolverError& e) {
        err << e.what() << "\n";
        return e.is_validation() ? exit_validation : exit_solver;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_solver;
    }
}

int run_command(const std::string& command, const std::string& config_path,
                const std::vector<std::string>& overrides, std::ostream& err) {
    RunConfig cfg;
    try {
        cfg = RunConfig::parse_file(config_path, overrides);
    } catch (const SolverError& e) {
        err << e.what() << "\n";
        return exit_validation;
    }
    return run_command_cfg(command, std::move(cfg), err);
}

} // namespace ifp
