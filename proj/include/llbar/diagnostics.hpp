#pragma once

// Time-series CSV layout (column order is fixed):
//
//   # key=value            run metadata lines (grid, epsilon, scheme, seed)
//   t,l2,l4,linf,h1,h2,grad_l2,energy,dissipation,heff_l2,flags
//   <17-significant-digit rows>
//
// flags is a bitmask: 1 = non-finite field.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "llbar/calibration.hpp"
#include "llbar/physics.hpp"

namespace llbar {

inline constexpr unsigned kFlagNonFinite = 1u;

struct EnergyReport {
    double t = 0.0;
    double l2 = 0.0;
    double l4 = 0.0;
    double linf = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    double grad_l2 = 0.0;
    double energy = 0.0;
    double dissipation = 0.0;
    double heff_l2 = 0.0;
    unsigned flags = 0;

    bool finite() const { return (flags & kFlagNonFinite) == 0; }
};

/// Scalar observables of one field. Non-finite input yields a flagged report
/// with NaN entries instead of an exception.
inline EnergyReport report(const Field& u, double t, const EffectiveFieldParams& p = {}) {
    EnergyReport r;
    r.t = t;
    if (!u.all_finite()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        r.l2 = r.l4 = r.linf = r.h1 = r.h2 = r.grad_l2 = r.energy = r.dissipation = r.heff_l2 = nan;
        r.flags = kFlagNonFinite;
        return r;
    }
    Field up = to_representation(u, Representation::physical);
    Field spec = to_spectral(up);
    r.l2 = l2_norm(spec);
    r.l4 = l4_norm(up);
    r.linf = linf_norm(up);
    r.h1 = sobolev_norm(spec, 1.0);
    r.h2 = sobolev_norm(spec, 2.0);
    r.grad_l2 = std::sqrt(gradient_norm_squared(spec));
    r.energy = energy(up, p);
    Field h = effective_field(up, p);
    r.heff_l2 = l2_norm(h);
    Field hs = to_spectral(h);
    const Grid& g = u.grid();
    r.dissipation = detail::spectral_energy(hs, [&](std::size_t q) { return p.lambda_r + p.lambda_e * g.k2(q); });
    return r;
}

struct RunMetadata {
    std::string grid;
    std::string epsilon = "limit";
    std::string scheme;
    std::uint64_t seed = 0;
};

class TimeSeries {
public:
    TimeSeries() = default;
    explicit TimeSeries(RunMetadata meta) : meta_(std::move(meta)) {}

    const RunMetadata& metadata() const { return meta_; }
    const std::vector<EnergyReport>& reports() const { return reports_; }
    std::size_t size() const { return reports_.size(); }
    bool empty() const { return reports_.empty(); }
    const EnergyReport& operator[](std::size_t i) const { return reports_[i]; }
    const EnergyReport& back() const { return reports_.back(); }

    void append(const EnergyReport& r) {
        if (!reports_.empty() && !(r.t > reports_.back().t))
            throw UsageError("TimeSeries::append: times must be strictly increasing");
        reports_.push_back(r);
    }

    static const char* header() { return "t,l2,l4,linf,h1,h2,grad_l2,energy,dissipation,heff_l2,flags"; }

    static std::string csv_row(const EnergyReport& r) {
        std::string s;
        for (double v : {r.t, r.l2, r.l4, r.linf, r.h1, r.h2, r.grad_l2, r.energy, r.dissipation, r.heff_l2}) {
            s += format_double(v);
            s += ',';
        }
        s += std::to_string(r.flags);
        return s;
    }

    void write_metadata(std::ostream& os) const {
        os << "# grid=" << meta_.grid << "\n# epsilon=" << meta_.epsilon << "\n# scheme=" << meta_.scheme
           << "\n# seed=" << meta_.seed << '\n'
           << header() << '\n';
    }

    void write_csv(std::ostream& os) const {
        write_metadata(os);
        for (const auto& r : reports_) os << csv_row(r) << '\n';
    }

    static TimeSeries read_csv(std::istream& is) {
        TimeSeries ts;
        std::string line;
        bool header_seen = false;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            if (line[0] == '#') {
                auto eq = line.find('=');
                if (eq == std::string::npos) continue;
                auto key = line.substr(2, eq - 2), val = line.substr(eq + 1);
                if (key == "grid") ts.meta_.grid = val;
                else if (key == "epsilon") ts.meta_.epsilon = val;
                else if (key == "scheme") ts.meta_.scheme = val;
                else if (key == "seed") ts.meta_.seed = std::stoull(val);
                continue;
            }
            if (!header_seen) {
                if (line != header()) throw FormatError("unexpected time-series header: " + line);
                header_seen = true;
                continue;
            }
            std::vector<std::string> cells;
            std::stringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            if (cells.size() != 11) throw FormatError("time-series row has " + std::to_string(cells.size()) + " columns");
            EnergyReport r;
            double* dst[] = {&r.t, &r.l2, &r.l4, &r.linf, &r.h1, &r.h2, &r.grad_l2, &r.energy, &r.dissipation, &r.heff_l2};
            for (int i = 0; i < 10; ++i) *dst[i] = parse_double(cells[i], "time-series cell");
            r.flags = static_cast<unsigned>(std::stoul(cells[10]));
            ts.append(r);
        }
        return ts;
    }

private:
    RunMetadata meta_;
    std::vector<EnergyReport> reports_;
};

// ---------------------------------------------------------------------------
// Blow-up monitoring on |grad u|_{L2}

enum class Verdict { healthy, warning, blown_up };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::healthy: return "healthy";
    case Verdict::warning: return "warning";
    case Verdict::blown_up: return "blown-up";
    }
    return "?";
}

struct BlowupVerdict {
    Verdict verdict = Verdict::healthy;
    std::optional<std::size_t> index;  // first offending report
    double t = 0.0;
};

// Finite proxy for divergence of |grad u|_{L2}.
inline double default_blowup_threshold(double grad_l2_initial) { return 1e3 * std::max(grad_l2_initial, 1.0); }

/// blown-up: first report that is non-finite or exceeds `threshold`;
/// warning: |grad u| has grown by more than 10x over its initial value.
/// Scans from the start, so extending a series never reverts a blow-up.
inline BlowupVerdict blowup_monitor(const TimeSeries& series, double threshold) {
    if (series.empty()) throw UsageError("blowup_monitor: empty series");
    BlowupVerdict v;
    const double g0 = series[0].grad_l2;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& r = series[i];
        if (!r.finite() || !std::isfinite(r.grad_l2) || r.grad_l2 > threshold) {
            return {Verdict::blown_up, i, r.t};
        }
        if (v.verdict == Verdict::healthy && g0 > 0.0 && r.grad_l2 > 10.0 * g0) v = {Verdict::warning, i, r.t};
    }
    return v;
}

inline BlowupVerdict blowup_monitor(const TimeSeries& series) {
    if (series.empty()) throw UsageError("blowup_monitor: empty series");
    return blowup_monitor(series, default_blowup_threshold(series[0].grad_l2));
}

// ---------------------------------------------------------------------------
// Energy monotonicity audit

struct AuditReport {
    double max_jump = 0.0;            // largest E(t_{i+1}) - E(t_i), >= 0
    std::optional<std::size_t> worst;  // index i+1 of that jump
    bool energy_pass = true;
    double growth_constant = 0.0;
    double max_l2_excess = 0.0;  // max of |u|^2 / (|u0|^2 e^{Ct}) - 1, clipped at 0
    bool l2_bound_pass = true;

    bool pass() const { return energy_pass && l2_bound_pass; }
};

// d/dt |u|_2^2 <= C |u|_2^2 with C = 2 sup sigma: the nonlinear terms pair
// nonpositively with u and the cross term vanishes.
inline double l2_growth_constant(const EffectiveFieldParams& p = {}) { return 2.0 * p.max_linear_symbol(); }

inline AuditReport monotonicity_audit(const TimeSeries& series, double growth_constant) {
    if (series.size() < 2) throw UsageError("monotonicity_audit needs at least two reports");
    AuditReport a;
    a.growth_constant = growth_constant;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double prev = series[i - 1].energy, cur = series[i].energy;
        const double jump = cur - prev;
        const bool ok = std::isfinite(jump) && jump <= 1e-8 * std::max(1.0, std::abs(prev));
        if (!ok) a.energy_pass = false;
        if (!std::isfinite(jump) || jump > a.max_jump) {
            a.max_jump = std::isfinite(jump) ? jump : std::numeric_limits<double>::infinity();
            a.worst = i;
        }
    }
    const double l20 = series[0].l2 * series[0].l2;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double dt = series[i].t - series[0].t;
        const double bound = l20 * std::exp(growth_constant * dt);
        const double l2 = series[i].l2 * series[i].l2;
        const double excess = bound > 0.0 ? l2 / bound - 1.0 : (l2 > 0.0 ? INFINITY : 0.0);
        if (!std::isfinite(l2) || excess > 1e-8) a.l2_bound_pass = false;
        if (std::isfinite(excess)) a.max_l2_excess = std::max(a.max_l2_excess, excess);
        else a.max_l2_excess = INFINITY;
    }
    return a;
}

inline AuditReport monotonicity_audit(const TimeSeries& series, const EffectiveFieldParams& p = {}) {
    return monotonicity_audit(series, l2_growth_constant(p));
}

}  // namespace llbar
