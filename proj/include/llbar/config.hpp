#pragma once

// Run configuration. Precedence, lowest first: built-in defaults, config
// file (--config), environment (LLBAR_OUTPUT_DIR, LLBAR_THREADS only),
// command-line flags.

#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "llbar/experiments.hpp"
#include "llbar/keyvalue.hpp"

namespace llbar {

enum class Subcommand { simulate, verify, converge, mollifier_check, calibrate };

inline const char* to_string(Subcommand s) {
    switch (s) {
    case Subcommand::simulate: return "simulate";
    case Subcommand::verify: return "verify";
    case Subcommand::converge: return "converge";
    case Subcommand::mollifier_check: return "mollifier-check";
    case Subcommand::calibrate: return "calibrate";
    }
    return "?";
}

struct RunConfig {
    Subcommand subcommand = Subcommand::verify;

    int dim = 2;
    int n = 64;  // 32 when dim = 3 and n is not given
    double box_length = 2.0 * std::numbers::pi;

    EffectiveFieldParams physics;
    SchemeConfig scheme;

    std::optional<double> epsilon;  // unset: limit system
    KernelKind kernel = KernelKind::gaussian;

    std::string initial = "random";  // random | uniform
    InitialDataSpec initial_spec{0, 3.0, 0.5, -1, true};
    Vec3 uniform_value{0.0, 0.0, 1.0};
    std::string snapshot;  // initial data from a snapshot file
    std::string resume;    // initial data and scheme state from a checkpoint

    std::string output_dir = "llbar_out";
    int cadence = 10;
    double t_end = 1.0;
    std::optional<double> threshold;  // blow-up threshold on |grad u|

    StudyKind study = StudyKind::eps_cauchy;
    std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05};
    int threads = 1;
    int samples = 10;            // fields per verify check
    std::size_t family_size = 100;
    bool write_calibration = false;  // mollifier-check: also save the measured constants

    std::set<std::string> explicit_keys;  // set by file, env or flag

    Grid grid() const { return Grid(dim, n, box_length); }
};

struct HelpRequested {
    std::string text;
};

namespace detail {

struct KeySpec {
    std::string name;
    std::string help;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline std::string vec3_to_string(const Vec3& v) {
    return format_double(v[0]) + "," + format_double(v[1]) + "," + format_double(v[2]);
}

inline const std::vector<KeySpec>& config_keys() {
    using C = RunConfig;
    auto fd = [](double v) { return format_double(v); };
    static const std::vector<KeySpec> keys = {
        {"dim", "spatial dimension (1, 2, 3)", [](C& c, auto& v) { c.dim = int(value_as_int("dim", v)); },
         [](const C& c) { return std::to_string(c.dim); }},
        {"n", "grid points per axis (even, >= 8)", [](C& c, auto& v) { c.n = int(value_as_int("n", v)); },
         [](const C& c) { return std::to_string(c.n); }},
        {"box_length", "periodic box side", [](C& c, auto& v) { c.box_length = value_as_double("box_length", v); },
         [=](const C& c) { return fd(c.box_length); }},
        {"chi", "susceptibility chi", [](C& c, auto& v) { c.physics.chi = value_as_double("chi", v); },
         [=](const C& c) { return fd(c.physics.chi); }},
        {"lambda_r", "relativistic damping", [](C& c, auto& v) { c.physics.lambda_r = value_as_double("lambda_r", v); },
         [=](const C& c) { return fd(c.physics.lambda_r); }},
        {"lambda_e", "exchange damping", [](C& c, auto& v) { c.physics.lambda_e = value_as_double("lambda_e", v); },
         [=](const C& c) { return fd(c.physics.lambda_e); }},
        {"gamma", "precession coefficient", [](C& c, auto& v) { c.physics.gamma = value_as_double("gamma", v); },
         [=](const C& c) { return fd(c.physics.gamma); }},
        {"scheme", "etd1 | etd_rk2 | imex_bdf2", [](C& c, auto& v) { c.scheme.scheme = parse_scheme(v); },
         [](const C& c) { return std::string(to_string(c.scheme.scheme)); }},
        {"dt", "time step", [](C& c, auto& v) { c.scheme.dt = value_as_double("dt", v); },
         [=](const C& c) { return fd(c.scheme.dt); }},
        {"adaptive", "step-doubling error control", [](C& c, auto& v) { c.scheme.adaptive = value_as_bool("adaptive", v); },
         [](const C& c) { return std::string(c.scheme.adaptive ? "true" : "false"); }},
        {"dt_min", "adaptive lower step bound", [](C& c, auto& v) { c.scheme.dt_min = value_as_double("dt_min", v); },
         [=](const C& c) { return fd(c.scheme.dt_min); }},
        {"dt_max", "adaptive upper step bound", [](C& c, auto& v) { c.scheme.dt_max = value_as_double("dt_max", v); },
         [=](const C& c) { return fd(c.scheme.dt_max); }},
        {"safety", "adaptive safety factor", [](C& c, auto& v) { c.scheme.safety = value_as_double("safety", v); },
         [=](const C& c) { return fd(c.scheme.safety); }},
        {"tolerance", "adaptive local error tolerance",
         [](C& c, auto& v) { c.scheme.tolerance = value_as_double("tolerance", v); },
         [=](const C& c) { return fd(c.scheme.tolerance); }},
        {"epsilon", "mollifier scale (omit for the limit system)",
         [](C& c, auto& v) { c.epsilon = value_as_double("epsilon", v); },
         [=](const C& c) { return c.epsilon ? fd(*c.epsilon) : std::string("limit"); }},
        {"kernel", "gaussian | bump", [](C& c, auto& v) { c.kernel = parse_kernel_kind(v); },
         [](const C& c) { return std::string(to_string(c.kernel)); }},
        {"initial", "random | uniform",
         [](C& c, auto& v) {
             if (v != "random" && v != "uniform") throw UsageError("initial: expected random or uniform, got '" + v + "'");
             c.initial = v;
         },
         [](const C& c) { return c.initial; }},
        {"seed", "random initial data seed",
         [](C& c, auto& v) { c.initial_spec.seed = static_cast<std::uint64_t>(value_as_int("seed", v)); },
         [](const C& c) { return std::to_string(c.initial_spec.seed); }},
        {"profile_r", "spectrum decay exponent r", [](C& c, auto& v) { c.initial_spec.profile_r = value_as_double("profile_r", v); },
         [=](const C& c) { return fd(c.initial_spec.profile_r); }},
        {"amplitude", "sup norm of random initial data",
         [](C& c, auto& v) { c.initial_spec.amplitude = value_as_double("amplitude", v); },
         [=](const C& c) { return fd(c.initial_spec.amplitude); }},
        {"max_mode", "largest mode index of random data (-1: dealiased set)",
         [](C& c, auto& v) { c.initial_spec.max_mode = int(value_as_int("max_mode", v)); },
         [](const C& c) { return std::to_string(c.initial_spec.max_mode); }},
        {"uniform_value", "constant initial vector x,y,z",
         [](C& c, auto& v) {
             auto l = value_as_list("uniform_value", v);
             if (l.size() != 3) throw UsageError("uniform_value: expected three components");
             c.uniform_value = {l[0], l[1], l[2]};
         },
         [](const C& c) { return vec3_to_string(c.uniform_value); }},
        {"snapshot", "initial data snapshot file", [](C& c, auto& v) { c.snapshot = v; },
         [](const C& c) { return c.snapshot; }},
        {"resume", "checkpoint to resume from", [](C& c, auto& v) { c.resume = v; },
         [](const C& c) { return c.resume; }},
        {"output_dir", "output directory", [](C& c, auto& v) { c.output_dir = v; },
         [](const C& c) { return c.output_dir; }},
        {"cadence", "report every k steps", [](C& c, auto& v) { c.cadence = int(value_as_int("cadence", v)); },
         [](const C& c) { return std::to_string(c.cadence); }},
        {"t_end", "final time", [](C& c, auto& v) { c.t_end = value_as_double("t_end", v); },
         [=](const C& c) { return fd(c.t_end); }},
        {"threshold", "blow-up threshold on |grad u|_2 (default 1e3 |grad u0|)",
         [](C& c, auto& v) { c.threshold = value_as_double("threshold", v); },
         [=](const C& c) { return c.threshold ? fd(*c.threshold) : std::string("default"); }},
        {"study", "eps_cauchy | eps_limit | uniqueness | linear_growth | gn_calibration",
         [](C& c, auto& v) { c.study = parse_study_kind(v); },
         [](const C& c) { return std::string(to_string(c.study)); }},
        {"eps_list", "comma-separated decreasing eps values",
         [](C& c, auto& v) { c.eps_list = value_as_list("eps_list", v); },
         [](const C& c) { return list_to_string(c.eps_list); }},
        {"threads", "worker threads for study runs", [](C& c, auto& v) { c.threads = int(value_as_int("threads", v)); },
         [](const C& c) { return std::to_string(c.threads); }},
        {"samples", "random fields per verify check", [](C& c, auto& v) { c.samples = int(value_as_int("samples", v)); },
         [](const C& c) { return std::to_string(c.samples); }},
        {"family_size", "fields in the calibration family",
         [](C& c, auto& v) { c.family_size = static_cast<std::size_t>(value_as_int("family_size", v)); },
         [](const C& c) { return std::to_string(c.family_size); }},
        {"write_calibration", "mollifier-check: write mollifier_calibration.txt",
         [](C& c, auto& v) { c.write_calibration = value_as_bool("write_calibration", v); },
         [](const C& c) { return std::string(c.write_calibration ? "true" : "false"); }},
    };
    return keys;
}

inline const KeySpec* find_key(const std::string& name) {
    for (const auto& k : config_keys())
        if (k.name == name) return &k;
    return nullptr;
}

// "epsilon" / "threshold" accept the words used in the echo.
inline void apply_key(RunConfig& c, const std::string& key, const std::string& value) {
    const KeySpec* k = find_key(key);
    if (!k) throw UsageError("unknown key '" + key + "'");
    if (key == "epsilon" && value == "limit") {
        c.epsilon.reset();
    } else if (key == "threshold" && value == "default") {
        c.threshold.reset();
    } else if ((key == "snapshot" || key == "resume") && value.empty()) {
        k->set(c, value);
        return;
    } else {
        k->set(c, value);
    }
    c.explicit_keys.insert(key);
}

}  // namespace detail

/// Range and consistency checks; errors name the offending key.
inline void validate(const RunConfig& c) {
    auto fail = [](const std::string& key, const std::string& why) { throw UsageError(key + ": " + why); };
    if (c.dim < 1 || c.dim > 3) fail("dim", "must be 1, 2 or 3");
    if (c.n % 2 != 0) fail("n", "n_per_axis must be even");
    if (c.n < 8) fail("n", "n_per_axis must be >= 8");
    if (!(c.box_length > 0.0) || !std::isfinite(c.box_length)) fail("box_length", "must be positive");
    for (auto [key, v] : {std::pair{"chi", c.physics.chi}, {"lambda_r", c.physics.lambda_r},
                          {"lambda_e", c.physics.lambda_e}, {"gamma", c.physics.gamma}})
        if (!(v > 0.0) || !std::isfinite(v)) fail(key, "must be positive");
    if (!(c.scheme.dt > 0.0)) fail("dt", "must be positive");
    if (!(c.scheme.dt_min > 0.0)) fail("dt_min", "must be positive");
    if (c.scheme.dt_max < c.scheme.dt_min) fail("dt_max", "must be >= dt_min");
    if (c.scheme.dt < c.scheme.dt_min || c.scheme.dt > c.scheme.dt_max) fail("dt", "must lie in [dt_min, dt_max]");
    if (!(c.scheme.safety > 0.0 && c.scheme.safety <= 1.0)) fail("safety", "must lie in (0, 1]");
    if (!(c.scheme.tolerance > 0.0)) fail("tolerance", "must be positive");
    if (c.scheme.adaptive && c.scheme.scheme == Scheme::imex_bdf2)
        fail("adaptive", "not available with scheme imex_bdf2");
    if (c.epsilon) {
        const double lo = MollifierSymbol::min_epsilon(c.grid());
        if (!(*c.epsilon >= lo * (1.0 - 1e-12) && *c.epsilon <= 1.0))
            fail("epsilon", "must lie in [" + format_double(lo) + ", 1] on this grid");
    }
    if (!(c.initial_spec.amplitude >= 0.0)) fail("amplitude", "must be nonnegative");
    if (!(c.initial_spec.profile_r >= 0.0)) fail("profile_r", "must be nonnegative");
    if (c.initial_spec.max_mode > c.n / 2) fail("max_mode", "exceeds n/2");
    const int sources = (c.explicit_keys.count("initial") || c.explicit_keys.count("uniform_value") ? 1 : 0) +
                        (c.snapshot.empty() ? 0 : 1) + (c.resume.empty() ? 0 : 1);
    if (sources > 1) {
        const char* key = !c.snapshot.empty() ? "snapshot" : "resume";
        fail(key, "conflicts with another initial-data source (initial, snapshot, resume)");
    }
    if (c.output_dir.empty()) fail("output_dir", "must not be empty");
    if (c.cadence < 1) fail("cadence", "must be >= 1");
    if (!(c.t_end >= 0.0) || !std::isfinite(c.t_end)) fail("t_end", "must be nonnegative");
    if (c.threshold && !(*c.threshold > 0.0)) fail("threshold", "must be positive");
    if (c.threads < 1) fail("threads", "must be >= 1");
    if (c.samples < 1) fail("samples", "must be >= 1");
    if (c.family_size < 1) fail("family_size", "must be >= 1");
    const bool uses_eps = c.subcommand == Subcommand::converge && c.study != StudyKind::linear_growth &&
                          c.study != StudyKind::gn_calibration;
    for (std::size_t i = 0; uses_eps && i < c.eps_list.size(); ++i) {
        const double e = c.eps_list[i];
        if (!(e >= MollifierSymbol::min_epsilon(c.grid()) * (1.0 - 1e-12) && e <= 1.0))
            fail("eps_list", "value " + format_double(e) + " outside the valid eps range");
        if (i && !(e < c.eps_list[i - 1])) fail("eps_list", "must be strictly decreasing");
    }
}

/// Flags (with or without a config file) to a validated RunConfig. The first
/// non-option argument selects the subcommand. Throws HelpRequested for
/// --help and UsageError for everything else that is wrong.
inline RunConfig parse_config(const std::vector<std::string>& args,
                              const std::function<const char*(const char*)>& getenv = std::getenv) {
    CLI::App app{"llbar: pseudo-spectral LLBar lab"};
    app.set_help_flag("-h,--help", "show help");
    app.require_subcommand(1);
    std::string config_file;
    app.add_option("--config", config_file, "key = value configuration file");
    std::vector<std::pair<std::string, std::string>> flag_values;
    std::vector<std::string> storage(detail::config_keys().size());
    std::vector<CLI::Option*> options;
    for (std::size_t i = 0; i < detail::config_keys().size(); ++i) {
        const auto& k = detail::config_keys()[i];
        options.push_back(app.add_option("--" + k.name, storage[i], k.help));
    }
    const std::pair<Subcommand, const char*> subcommands[] = {
        {Subcommand::simulate, "integrate one run, write series.csv, summary.txt, final.snap, final.ckpt"},
        {Subcommand::verify, "identity and mollifier checks on seeded fields"},
        {Subcommand::converge, "run the study selected by --study"},
        {Subcommand::mollifier_check, "mollifier property report"},
        {Subcommand::calibrate, "regenerate the calibration records"},
    };
    for (auto [s, what] : subcommands) app.add_subcommand(to_string(s), what)->fallthrough();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested{app.help()};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    RunConfig c;
    for (auto s : {Subcommand::simulate, Subcommand::verify, Subcommand::converge, Subcommand::mollifier_check,
                   Subcommand::calibrate})
        if (app.got_subcommand(to_string(s))) c.subcommand = s;

    if (!config_file.empty())
        for (const auto& [k, v] : load_key_values(config_file)) detail::apply_key(c, k, v);
    if (const char* v = getenv("LLBAR_OUTPUT_DIR"); v && *v) detail::apply_key(c, "output_dir", v);
    if (const char* v = getenv("LLBAR_THREADS"); v && *v) detail::apply_key(c, "threads", v);
    for (std::size_t i = 0; i < options.size(); ++i)
        if (options[i]->count()) detail::apply_key(c, detail::config_keys()[i].name, storage[i]);

    if (c.dim == 3 && !c.explicit_keys.count("n")) c.n = 32;
    validate(c);
    return c;
}

/// One `key = value` line per key; reading it back reproduces the config.
inline void write_effective_config(std::ostream& os, const RunConfig& c) {
    os << "# subcommand " << to_string(c.subcommand) << '\n';
    for (const auto& k : detail::config_keys()) {
        std::string v = k.get(c);
        if ((k.name == "snapshot" || k.name == "resume") && v.empty()) continue;
        if (k.name == "initial" && (!c.snapshot.empty() || !c.resume.empty())) continue;
        if (k.name == "uniform_value" && (!c.snapshot.empty() || !c.resume.empty())) continue;
        os << k.name << " = " << v << '\n';
    }
}

inline StudySpec to_study_spec(const RunConfig& c) {
    StudySpec s;
    s.kind = c.study;
    s.dim = c.dim;
    s.n = c.n;
    s.box_length = c.box_length;
    s.initial = c.initial_spec;
    s.stationary = c.initial == "uniform";
    s.eps_list = c.eps_list;
    s.t_end = c.t_end;
    s.scheme = c.scheme;
    s.kernel = c.kernel;
    s.cadence = c.cadence;
    s.physics = c.physics;
    s.output_dir = c.output_dir;
    s.threads = c.threads;
    s.family_size = c.family_size;
    return s;
}

}  // namespace llbar
