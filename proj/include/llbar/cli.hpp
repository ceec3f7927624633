#pragma once

// Subcommand drivers behind the `llbar` executable. Every file a subcommand
// writes goes under cfg.output_dir:
//   effective_config.txt  always
//   simulate:         series.csv, final.snap, final.ckpt, summary.txt
//   verify:           verify.csv
//   converge:         study outputs (see experiments.hpp)
//   mollifier-check:  mollifier_check.csv
//   calibrate:        calibration.txt

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "llbar/config.hpp"
#include "llbar/diagnostics.hpp"
#include "llbar/experiments.hpp"
#include "llbar/integrator.hpp"
#include "llbar/mollifier.hpp"
#include "llbar/physics.hpp"
#include "llbar/snapshot.hpp"

namespace llbar {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitCheckFailed = 2, kExitBlowUp = 3, kExitIo = 4 };

struct CheckRow {
    std::string check;
    std::string grid;
    std::string epsilon;
    double residual = 0.0;
    double bound = 0.0;
    bool pass = false;
};

inline void write_check_csv(std::ostream& os, const std::vector<CheckRow>& rows) {
    os << "check,grid,epsilon,residual,bound,pass\n";
    for (const auto& r : rows)
        os << r.check << ',' << r.grid << ',' << r.epsilon << ',' << format_double(r.residual) << ','
           << format_double(r.bound) << ',' << (r.pass ? 1 : 0) << '\n';
}

inline void print_check_table(std::ostream& os, const std::vector<CheckRow>& rows) {
    os << std::left << std::setw(30) << "check" << std::setw(10) << "epsilon" << std::setw(14) << "residual"
       << std::setw(12) << "bound" << "result\n";
    for (const auto& r : rows) {
        std::ostringstream res, bnd;
        res << std::setprecision(3) << std::scientific << r.residual;
        bnd << std::setprecision(1) << std::scientific << r.bound;
        os << std::left << std::setw(30) << r.check << std::setw(10) << r.epsilon << std::setw(14) << res.str()
           << std::setw(12) << bnd.str() << (r.pass ? "PASS" : "FAIL") << '\n';
    }
}

namespace detail {

inline std::string short_number(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

inline double verify_epsilon(const RunConfig& c) {
    if (c.epsilon) return *c.epsilon;
    return std::max(0.1, MollifierSymbol::min_epsilon(c.grid()));
}

inline std::vector<CheckRow> mollifier_rows(const MollifierReport& rep, const Grid& g) {
    std::vector<CheckRow> rows;
    for (const auto& c : rep.checks) {
        if (c.informational) continue;
        rows.push_back({"mollifier_" + c.id, g.describe(), short_number(rep.epsilon), c.measured, c.bound, c.pass});
    }
    return rows;
}

}  // namespace detail

/// The identity and property suite run by `verify`. Fields are band limited
/// so that the dealiased cubic products are exact.
inline std::vector<CheckRow> verification_suite(const RunConfig& c) {
    const Grid g = c.grid();
    const auto family = resolved_family(g, static_cast<std::size_t>(c.samples), c.initial_spec.seed);
    const MollifierSymbol J(g, detail::verify_epsilon(c), c.kernel);
    const auto& p = c.physics;
    const std::string eps = detail::short_number(J.epsilon());
    const std::string grid = g.describe();
    constexpr double tol = 1e-10;

    std::vector<CheckRow> rows;
    auto add_max = [&](const std::string& name, const std::string& e, auto&& fn) {
        double worst = 0.0;
        for (const auto& u : family) worst = std::max(worst, fn(u));
        rows.push_back({name, grid, e, worst, tol, worst <= tol});
    };
    add_max("identity_l2", "limit", [&](const Field& u) { return identity_l2(u, nullptr, p).residual; });
    add_max("identity_l2_mollified", eps, [&](const Field& u) { return identity_l2(u, &J, p).residual; });
    add_max("identity_h1", "limit", [&](const Field& u) { return identity_h1(u, nullptr, p).residual; });
    add_max("identity_h1_mollified", eps, [&](const Field& u) { return identity_h1(u, &J, p).residual; });
    add_max("h1_orthogonality", "limit", [&](const Field& u) { return identity_h1(u, nullptr, p).orthogonality; });
    add_max("h1_orthogonality_mollified", eps, [&](const Field& u) { return identity_h1(u, &J, p).orthogonality; });
    add_max("cubic_expansion", "limit", [&](const Field& u) { return identity_cubic_expansion(u, nullptr); });
    add_max("cubic_expansion_mollified", eps, [&](const Field& u) { return identity_cubic_expansion(u, &J); });
    add_max("rhs_consistency", "limit", [&](const Field& u) { return rhs_consistency_with_heff(u, p); });
    add_max("energy_rate", "limit", [&](const Field& u) {
        const double d = dissipation(u, p);
        return std::abs(energy_rate(u, p) + d) / std::max(1.0, d);
    });

    auto mrep = verify_mollifier_properties(J, family);
    for (auto& r : detail::mollifier_rows(mrep, g)) rows.push_back(r);
    return rows;
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path out_path(const RunConfig& c, const std::string& name) {
    return std::filesystem::path(c.output_dir) / name;
}

inline std::ofstream open_output(const RunConfig& c, const std::string& name) {
    ensure_dir(c.output_dir);
    std::ofstream os(out_path(c, name), std::ios::trunc);
    if (!os) throw IoError("cannot write " + out_path(c, name).string());
    return os;
}

inline int run_simulate(const RunConfig& c, std::ostream& out) {
    const Grid g = c.grid();
    std::optional<MollifierSymbol> J;
    if (c.epsilon) J.emplace(g, *c.epsilon, c.kernel);

    IntegrateOptions opts;
    opts.report_every = c.cadence;
    opts.metadata = {g.describe(), c.epsilon ? format_double(*c.epsilon) : "limit", to_string(c.scheme.scheme),
                     c.initial_spec.seed};
    Field u0(g);
    if (!c.resume.empty()) {
        Checkpoint ck = load_checkpoint(c.resume, g);
        u0 = ck.field;
        opts.t_start = ck.state.t;
        opts.step_start = ck.state.steps;
        opts.previous = ck.previous;
    } else {
        if (!c.snapshot.empty()) u0 = load_snapshot(c.snapshot, g);
        else if (c.initial == "uniform") u0 = Field::constant(g, c.uniform_value);
        else u0 = random_field(g, c.initial_spec);
        if (J) u0 = mollify(*J, u0);
    }
    // Spectral state throughout, so a checkpoint resumes bit-exactly.
    u0 = to_representation(u0, Representation::spectral);

    // Rows are flushed as they arrive so a blow-up leaves a partial CSV.
    auto csv = open_output(c, "series.csv");
    TimeSeries(opts.metadata).write_metadata(csv);
    opts.on_report = [&](const EnergyReport& r) { csv << TimeSeries::csv_row(r) << '\n' << std::flush; };

    const double t_end = opts.t_start + c.t_end;
    auto res = integrate(u0, t_end, c.scheme, c.physics, J ? &*J : nullptr, opts);

    auto summary = open_output(c, "summary.txt");
    int code = kExitOk;
    if (!res.series.empty()) {
        const double threshold = c.threshold ? *c.threshold : default_blowup_threshold(res.series[0].grad_l2);
        auto v = blowup_monitor(res.series, threshold);
        summary << "verdict " << to_string(v.verdict) << '\n';
        if (v.verdict == Verdict::blown_up) {
            out << "blow-up: |grad u| exceeded " << format_double(threshold) << " or became non-finite at t = "
                << format_double(v.t) << '\n';
            summary << "first_offense_t " << format_double(v.t) << '\n';
            code = kExitBlowUp;
        }
        if (res.series.size() >= 2 && !res.blown_up) {
            auto audit = monotonicity_audit(res.series, c.physics);
            summary << "energy_max_jump " << format_double(audit.max_jump) << "\nenergy_audit "
                    << (audit.pass() ? "pass" : "fail") << '\n';
        }
    }
    if (res.blown_up) {
        out << "integration stopped: " << res.message << '\n';
        summary << "stopped " << res.message << '\n';
        code = kExitBlowUp;
    }
    if (code == kExitOk) {
        save_snapshot(to_representation(res.final_state, Representation::physical), out_path(c, "final.snap"),
                      res.state.t);
        save_checkpoint(out_path(c, "final.ckpt"), res.final_state, res.state, res.previous);
    }
    summary << "t " << format_double(res.state.t) << "\nsteps " << res.state.steps << '\n';
    if (!res.series.empty())
        summary << "energy_initial " << format_double(res.series[0].energy) << "\nenergy_final "
                << format_double(res.series.back().energy) << '\n';
    out << "simulate: " << res.series.size() << " reports, t = " << format_double(res.state.t) << ", "
        << res.state.steps << " steps\n";
    return code;
}

inline int report_rows(const std::vector<CheckRow>& rows, std::ostream& out) {
    print_check_table(out, rows);
    int failed = 0;
    for (const auto& r : rows)
        if (!r.pass) {
            out << "FAILED: " << r.check << '\n';
            ++failed;
        }
    out << rows.size() - failed << " of " << rows.size() << " checks passed\n";
    return failed ? kExitCheckFailed : kExitOk;
}

inline int run_verify(const RunConfig& c, std::ostream& out) {
    auto rows = verification_suite(c);
    auto csv = open_output(c, "verify.csv");
    write_check_csv(csv, rows);
    return report_rows(rows, out);
}

inline int run_mollifier_check(const RunConfig& c, std::ostream& out) {
    const Grid g = c.grid();
    const MollifierSymbol J(g, verify_epsilon(c), c.kernel);
    const auto family = resolved_family(g, static_cast<std::size_t>(c.samples), c.initial_spec.seed);
    auto rep = verify_mollifier_properties(J, family);
    auto csv = open_output(c, "mollifier_check.csv");
    csv << "id,measured,bound,pass,informational\n";
    for (const auto& ch : rep.checks)
        csv << ch.id << ',' << format_double(ch.measured) << ',' << format_double(ch.bound) << ',' << (ch.pass ? 1 : 0)
            << ',' << (ch.informational ? 1 : 0) << '\n';
    if (c.write_calibration) {
        CalibrationFile file;
        for (const auto& r : rep.calibration) file.set(r);
        file.save(out_path(c, "mollifier_calibration.txt"));
    }
    out << "kernel " << to_string(rep.kind) << ", eps " << format_double(rep.epsilon) << ", clipped lattice points "
        << rep.clipped << '\n';
    for (const auto& ch : rep.checks)
        if (ch.informational)
            out << "  " << ch.id << " = " << format_double(ch.measured) << "  (" << ch.description << ")\n";
    return report_rows(mollifier_rows(rep, g), out);
}

inline int run_converge(const RunConfig& c, std::ostream& out) {
    StudySpec s = to_study_spec(c);
    std::vector<CheckRow> rows;
    const std::string grid = s.grid().describe();
    switch (s.kind) {
    case StudyKind::eps_cauchy:
    case StudyKind::eps_limit: {
        auto rep = s.kind == StudyKind::eps_cauchy ? run_eps_cauchy(s) : run_eps_limit(s);
        if (rep.aborted) {
            out << "study aborted: " << rep.abort_reason << " (verdict " << to_string(rep.verdict.verdict) << " at t = "
                << format_double(rep.verdict.t) << ")\n";
            return kExitBlowUp;
        }
        for (const auto& pd : rep.pairs)
            out << "eps " << format_double(pd.eps_a) << " vs " << (pd.eps_b > 0 ? format_double(pd.eps_b) : "limit")
                << ": sup_t L2 difference " << format_double(pd.sup_l2) << '\n';
        const bool trivial = rep.max_difference <= 1e-12;
        rows.push_back({"slope", grid, list_to_string(rep.eps), rep.fit.slope, 0.9,
                        trivial || (rep.fit_valid && rep.fit.slope >= 0.9)});
        rows.push_back({"h2_spread", grid, list_to_string(rep.eps), rep.h2_spread, 0.1, rep.h2_spread <= 0.1});
        if (s.kind == StudyKind::eps_limit)
            rows.push_back({"monotone", grid, list_to_string(rep.eps), rep.monotone ? 0.0 : 1.0, 0.0,
                            trivial || rep.monotone});
        break;
    }
    case StudyKind::uniqueness: {
        auto rep = run_uniqueness(s);
        out << "etd1 dt " << format_double(rep.dt_etd1) << " est " << format_double(rep.est_etd1) << "; etd_rk2 dt "
            << format_double(rep.dt_rk2) << " est " << format_double(rep.est_rk2) << '\n';
        rows.push_back({"scheme_agreement", grid, "limit", rep.difference, rep.bound, rep.pass});
        rows.push_back({"kernel_difference_shrinks", grid, list_to_string(rep.kernel_eps),
                        rep.kernel_difference.empty() ? 0.0 : rep.kernel_difference.back(), 0.0, rep.kernel_shrinks});
        break;
    }
    case StudyKind::linear_growth: {
        auto rep = run_linear_growth(s);
        for (const auto& m : rep.modes)
            out << "|k|^2 = " << format_double(m.k2) << ": predicted " << format_double(m.predicted) << ", measured "
                << format_double(m.measured) << '\n';
        rows.push_back({"growth_rates", grid, "limit", rep.max_error, 1e-6, rep.pass()});
        break;
    }
    case StudyKind::gn_calibration: {
        auto rep = run_gn_calibration(s);
        rows.push_back({"gn_linf", grid, "none", rep.linf_max, 0.0, rep.linf_max > 0.0 && std::isfinite(rep.linf_max)});
        rows.push_back(
            {"gn_grad_l4", grid, "none", rep.grad_l4_max, 0.0, rep.grad_l4_max > 0.0 && std::isfinite(rep.grad_l4_max)});
        break;
    }
    }
    return report_rows(rows, out);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationOptions {
    std::vector<double> dt_ladder{0.2, 0.1, 0.05, 0.025, 0.0125};
    double stability_amplitude = 3.0;
    double stability_t_end = 5.0;
    int lipschitz_pairs = 50;
    double lipschitz_epsilon = 0.2;
};

/// Largest ladder step whose large-amplitude run passes the energy audit
/// without blowing up. 0 when none does.
inline double calibrate_dt_stable(const Grid& g, const SchemeConfig& base, const EffectiveFieldParams& p,
                                  std::uint64_t seed, const CalibrationOptions& o = {}) {
    InitialDataSpec spec;
    spec.seed = seed;
    spec.amplitude = o.stability_amplitude;
    const Field u0 = random_field(g, spec);
    for (double dt : o.dt_ladder) {
        SchemeConfig c = base;
        c.adaptive = false;
        c.dt = dt;
        c.dt_max = std::max(c.dt_max, dt);
        c.dt_min = std::min(c.dt_min, dt);
        IntegrateOptions io;
        io.report_every = 1;
        auto r = integrate(u0, o.stability_t_end, c, p, nullptr, io);
        if (r.blown_up || r.series.size() < 2) continue;
        if (blowup_monitor(r.series).verdict == Verdict::blown_up) continue;
        if (monotonicity_audit(r.series, p).pass()) return dt;
    }
    return 0.0;
}

/// Constants consumed by the regression tests: mollifier rate constants,
/// interpolation ratios, the Lipschitz ratio of F^eps and dt_stable.
inline CalibrationFile calibrate(const RunConfig& c, const CalibrationOptions& o = {}) {
    const Grid g = c.grid();
    CalibrationFile file;
    const auto family = resolved_family(g, static_cast<std::size_t>(c.samples), c.initial_spec.seed);
    for (auto kind : {KernelKind::gaussian, KernelKind::bump}) {
        const MollifierSymbol J(g, detail::verify_epsilon(c), kind);
        const auto rep = verify_mollifier_properties(J, family);
        for (const auto& r : rep.calibration) file.set(r);
    }

    std::vector<Field> gn_family;
    for (std::size_t i = 0; i < c.family_size; ++i) {
        InitialDataSpec s = c.initial_spec;
        s.seed = c.initial_spec.seed + i;
        gn_family.push_back(random_field(g, s));
    }
    const GnReport gn = gn_ratios(gn_family, g.dim());
    for (const auto& r : gn.records.records()) file.set(r);

    const MollifierSymbol Jl(g, o.lipschitz_epsilon, KernelKind::gaussian);
    double lip = 0.0;
    for (int i = 0; i < o.lipschitz_pairs; ++i) {
        InitialDataSpec a = c.initial_spec, b = c.initial_spec;
        a.amplitude = b.amplitude = 1.0;
        a.seed = c.initial_spec.seed + 1000 + 2 * i;
        b.seed = a.seed + 1;
        lip = std::max(lip, lipschitz_probe(random_field(g, a), random_field(g, b), Jl, c.physics, 1.0));
    }
    file.set({"lipschitz_h1", "gaussian", o.lipschitz_epsilon, lip});
    file.set({"dt_stable", "none", 0.0, calibrate_dt_stable(g, c.scheme, c.physics, c.initial_spec.seed, o)});
    return file;
}

// ---------------------------------------------------------------------------

inline int run_subcommand(const RunConfig& c, std::ostream& out) {
    detail::ensure_dir(c.output_dir);
    {
        auto echo = detail::open_output(c, "effective_config.txt");
        write_effective_config(echo, c);
    }
    switch (c.subcommand) {
    case Subcommand::simulate: return detail::run_simulate(c, out);
    case Subcommand::verify: return detail::run_verify(c, out);
    case Subcommand::converge: return detail::run_converge(c, out);
    case Subcommand::mollifier_check: return detail::run_mollifier_check(c, out);
    case Subcommand::calibrate: {
        auto file = calibrate(c);
        file.save(detail::out_path(c, "calibration.txt"));
        out << "wrote " << file.records().size() << " records to " << detail::out_path(c, "calibration.txt").string()
            << '\n';
        return kExitOk;
    }
    }
    return kExitUsage;
}

/// Parse + run with exceptions mapped to exit codes.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                   const std::function<const char*(const char*)>& getenv = std::getenv) {
    try {
        RunConfig c = parse_config(args, getenv);
        return run_subcommand(c, out);
    } catch (const HelpRequested& h) {
        out << h.text;
        return kExitOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParameterError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const GridMismatch& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const BlowUp& e) {
        err << "blow-up: " << e.what() << '\n';
        return kExitBlowUp;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
}

}  // namespace llbar
