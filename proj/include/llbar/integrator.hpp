#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "llbar/diagnostics.hpp"
#include "llbar/physics.hpp"
#include "llbar/snapshot.hpp"
#include "llbar/stats.hpp"

namespace llbar {

enum class Scheme { etd1, etd_rk2, imex_bdf2 };

// full: the whole linear symbol -|xi|^4 + |xi|^2 + 2 is propagated exactly.
// biharmonic: only -|xi|^4; the lower-order linear terms join the explicit part.
enum class Splitting { full, biharmonic };

inline const char* to_string(Scheme s) {
    switch (s) {
    case Scheme::etd1: return "etd1";
    case Scheme::etd_rk2: return "etd_rk2";
    case Scheme::imex_bdf2: return "imex_bdf2";
    }
    return "?";
}

inline Scheme parse_scheme(const std::string& s) {
    if (s == "etd1") return Scheme::etd1;
    if (s == "etd_rk2") return Scheme::etd_rk2;
    if (s == "imex_bdf2") return Scheme::imex_bdf2;
    throw UsageError("unknown scheme '" + s + "' (expected etd1, etd_rk2 or imex_bdf2)");
}

struct SchemeConfig {
    Scheme scheme = Scheme::etd_rk2;
    double dt = 1e-3;
    bool adaptive = false;
    double dt_min = 1e-9;
    double dt_max = 10.0;
    double safety = 0.9;
    double tolerance = 1e-8;  // adaptive local error, relative to max(1, |u|_2)
    Splitting splitting = Splitting::full;
    bool nonlinear = true;  // false drops every nonlinear term

    int order() const { return scheme == Scheme::etd1 ? 1 : 2; }

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be positive");
        if (!(dt_min > 0.0) || !(dt_max >= dt_min)) throw ParameterError("need 0 < dt_min <= dt_max");
        if (dt < dt_min || dt > dt_max) throw ParameterError("dt must lie in [dt_min, dt_max]");
        if (!(safety > 0.0 && safety <= 1.0)) throw ParameterError("safety must lie in (0, 1]");
        if (!(tolerance > 0.0)) throw ParameterError("tolerance must be positive");
        if (adaptive && scheme == Scheme::imex_bdf2)
            throw ParameterError("adaptive step control is not available for imex_bdf2");
    }
};

namespace detail {

inline double phi1(double z) { return z == 0.0 ? 1.0 : std::expm1(z) / z; }

inline double phi2(double z) {
    if (std::abs(z) < 0.5) {
        // sum_k z^k / (k+2)!
        double term = 0.5, sum = 0.5;
        for (int k = 1; k <= 16; ++k) {
            term *= z / (k + 2);
            sum += term;
        }
        return sum;
    }
    return (std::expm1(z) - z) / (z * z);
}

}  // namespace detail

/// Exact propagator of the linear part over one step: exp(dt L), with L the
/// (mollified) linear symbol, plus the phi-function tables of the ETD schemes.
class LinearPropagator {
public:
    LinearPropagator(const Grid& g, const EffectiveFieldParams& p, double dt, Splitting splitting,
                     const MollifierSymbol* J)
        : dt_(dt), splitting_(splitting) {
        const std::size_t n = g.size();
        symbol_.resize(n);
        exp_.resize(n);
        phi1_.resize(n);
        phi2_.resize(n);
        for (std::size_t q = 0; q < n; ++q) {
            const double k2 = g.k2(q);
            double s = splitting == Splitting::full ? p.linear_symbol(k2) : -p.lambda_e * k2 * k2;
            if (J) s *= J->values()[q] * J->values()[q];
            const double z = dt * s;
            symbol_[q] = s;
            exp_[q] = std::exp(z);
            phi1_[q] = detail::phi1(z);
            phi2_[q] = detail::phi2(z);
        }
    }

    double dt() const { return dt_; }
    Splitting splitting() const { return splitting_; }
    const std::vector<double>& symbol() const { return symbol_; }
    const std::vector<double>& exp() const { return exp_; }
    const std::vector<double>& phi1() const { return phi1_; }
    const std::vector<double>& phi2() const { return phi2_; }

private:
    double dt_;
    Splitting splitting_;
    std::vector<double> symbol_, exp_, phi1_, phi2_;
};

/// One-step and multistep advancement of u_t = F(u) (or F^eps(u) when a
/// mollifier is attached). Holds the BDF2 history; otherwise stateless.
class Stepper {
public:
    Stepper(SchemeConfig cfg, EffectiveFieldParams p = {}, std::optional<MollifierSymbol> J = std::nullopt)
        : cfg_(cfg), p_(p), J_(std::move(J)) {
        cfg_.validate();
        p_.validate();
        if (cfg_.scheme == Scheme::imex_bdf2 && 2.0 * cfg_.dt * p_.max_linear_symbol() >= 3.0)
            throw ParameterError("imex_bdf2 needs 3 - 2 dt sup(sigma) > 0");
    }

    const SchemeConfig& config() const { return cfg_; }
    const EffectiveFieldParams& params() const { return p_; }
    const MollifierSymbol* mollifier() const { return J_ ? &*J_ : nullptr; }
    long steps_taken() const { return steps_; }

    void reset_history() {
        prev_u_.reset();
        prev_n_.reset();
    }

    // Seeds the BDF2 history with the state one step before the current one.
    void set_history(const Field& previous) {
        prev_u_ = to_representation(previous, Representation::spectral);
        prev_n_ = nonlinear(*prev_u_);
    }
    const std::optional<Field>& history() const { return prev_u_; }

    /// Explicit part N(u) = F(u) - L u, spectral in and out.
    Field nonlinear(const Field& u_in) const {
        const Grid& g = u_in.grid();
        Field u = to_representation(u_in, Representation::spectral);
        Field out(g, Representation::spectral);
        if (!cfg_.nonlinear && cfg_.splitting == Splitting::full) return out;

        const double a = p_.coupling();
        const auto* rho = J_ ? &J_->values() : nullptr;

        Field w = u;  // J u
        if (rho) scale_spectral(w, *rho);
        auto od = out.data();
        auto wd = w.data();

        if (cfg_.splitting == Splitting::biharmonic) {
            for (std::size_t q = 0; q < g.size(); ++q) {
                const double lin = -(p_.lambda_r - p_.lambda_e * a) * g.k2(q) + p_.lambda_r * a;
                for (int c = 0; c < 3; ++c) od[3 * q + c] = lin * wd[3 * q + c];
            }
        }

        if (cfg_.nonlinear) {
            Field wd_spec = w;  // 2/3-rule input projection
            Field lap_spec(g, Representation::spectral);
            auto a_in = wd_spec.data();
            auto l_in = lap_spec.data();
            for (std::size_t q = 0; q < g.size(); ++q) {
                for (int c = 0; c < 3; ++c) {
                    if (!g.dealiased(q)) a_in[3 * q + c] = 0.0;
                    l_in[3 * q + c] = -g.k2(q) * a_in[3 * q + c];
                }
            }
            Field wp = to_physical(wd_spec);
            Field lp = to_physical(lap_spec);
            Field cub(g), crs(g);
            for (std::size_t q = 0; q < g.size(); ++q) {
                auto x = wp.value(q);
                auto l = lp.value(q);
                const double m = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                cub.set(q, {m * x[0], m * x[1], m * x[2]});
                crs.set(q, {x[1] * l[2] - x[2] * l[1], x[2] * l[0] - x[0] * l[2], x[0] * l[1] - x[1] * l[0]});
            }
            Field cs = to_spectral(cub);
            Field xs = to_spectral(crs);
            auto cd = cs.data();
            auto xd = xs.data();
            for (std::size_t q = 0; q < g.size(); ++q) {
                if (!g.dealiased(q)) continue;
                const double cubic_coef = -p_.lambda_r * a - p_.lambda_e * a * g.k2(q);
                for (int c = 0; c < 3; ++c) od[3 * q + c] += cubic_coef * cd[3 * q + c] - p_.gamma * xd[3 * q + c];
            }
        }
        if (rho) scale_spectral(out, *rho);
        return out;
    }

    Field step(const Field& u) { return step(u, cfg_.dt); }

    /// Advances by dt. Throws BlowUp when the result is not finite.
    Field step(const Field& u_in, double dt) {
        Field u = to_representation(u_in, Representation::spectral);
        const LinearPropagator& lp = propagator(u.grid(), dt);
        Field next(u.grid(), Representation::spectral);
        switch (cfg_.scheme) {
        case Scheme::etd1:
            next = etd1(u, nonlinear(u), lp);
            break;
        case Scheme::etd_rk2:
            next = etd_rk2(u, nonlinear(u), lp);
            break;
        case Scheme::imex_bdf2:
            next = bdf2(u, lp);
            break;
        }
        ++steps_;
        check_finite(next);
        return to_representation(next, u_in.representation());
    }

private:
    const LinearPropagator& propagator(const Grid& g, double dt) {
        if (!prop_ || prop_->dt() != dt || !(prop_grid_ && *prop_grid_ == g)) {
            prop_.emplace(g, p_, dt, cfg_.splitting, mollifier());
            prop_grid_ = g;
        }
        return *prop_;
    }

    static Field etd1(const Field& u, const Field& n, const LinearPropagator& lp) {
        Field out(u.grid(), Representation::spectral);
        auto o = out.data();
        auto ud = u.data();
        auto nd = n.data();
        const double h = lp.dt();
        for (std::size_t q = 0; q < u.points(); ++q)
            for (int c = 0; c < 3; ++c) o[3 * q + c] = lp.exp()[q] * ud[3 * q + c] + h * lp.phi1()[q] * nd[3 * q + c];
        return out;
    }

    // two-stage exponential RK, predictor at the ETD1 point.
    Field etd_rk2(const Field& u, const Field& n, const LinearPropagator& lp) const {
        Field a = etd1(u, n, lp);
        Field na = nonlinear(a);
        auto o = a.data();
        auto nd = n.data();
        auto nad = na.data();
        const double h = lp.dt();
        for (std::size_t q = 0; q < u.points(); ++q)
            for (int c = 0; c < 3; ++c) o[3 * q + c] += h * lp.phi2()[q] * (nad[3 * q + c] - nd[3 * q + c]);
        return a;
    }

    // (3u+ - 4u + u-)/(2h) = L u+ + 2N(u) - N(u-); started by one ETD2RK step.
    Field bdf2(const Field& u, const LinearPropagator& lp) {
        Field n = nonlinear(u);
        if (!prev_u_) {
            Field next = etd_rk2(u, n, lp);
            prev_u_ = u;
            prev_n_ = std::move(n);
            return next;
        }
        Field out(u.grid(), Representation::spectral);
        auto o = out.data();
        auto ud = u.data();
        auto pd = prev_u_->data();
        auto nd = n.data();
        auto pnd = prev_n_->data();
        const double h = lp.dt();
        for (std::size_t q = 0; q < u.points(); ++q) {
            const double den = 3.0 - 2.0 * h * lp.symbol()[q];
            for (int c = 0; c < 3; ++c) {
                const std::size_t i = 3 * q + c;
                o[i] = (4.0 * ud[i] - pd[i] + 2.0 * h * (2.0 * nd[i] - pnd[i])) / den;
            }
        }
        prev_u_ = u;
        prev_n_ = std::move(n);
        return out;
    }

    void check_finite(const Field& f) const {
        const double limit = 1e100 * static_cast<double>(f.points());
        for (const auto& z : f.data())
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z) > limit)
                throw BlowUp(steps_, 0.0, "state became non-finite at step " + std::to_string(steps_));
    }

    SchemeConfig cfg_;
    EffectiveFieldParams p_;
    std::optional<MollifierSymbol> J_;
    std::optional<LinearPropagator> prop_;
    std::optional<Grid> prop_grid_;
    std::optional<Field> prev_u_, prev_n_;
    long steps_ = 0;
};

/// One step of the regularized flow (J given) or the limit system (no J).
/// For imex_bdf2 without history this is the ETD2RK start-up step.
inline Field step(const Field& u, const SchemeConfig& cfg, const EffectiveFieldParams& p = {},
                  const MollifierSymbol* J = nullptr) {
    Stepper s(cfg, p, J ? std::optional<MollifierSymbol>(*J) : std::nullopt);
    return s.step(u);
}

// ---------------------------------------------------------------------------

struct IntegrateOptions {
    int report_every = 10;  // plus the first and last state
    bool reports = true;
    double t_start = 0.0;
    long step_start = 0;
    std::optional<Field> previous;  // BDF2 history when resuming
    RunMetadata metadata;
    std::function<void(const EnergyReport&)> on_report;
    std::function<void(const Field&, double, long)> on_step;  // after each accepted step
};

struct IntegrationResult {
    Field final_state;
    TimeSeries series = {};
    SchemeState state = {};
    std::optional<Field> previous = std::nullopt;  // BDF2 history at the end, for checkpoints
    bool blown_up = false;
    long blowup_step = -1;
    double blowup_t = 0.0;
    std::string message = {};
    long rejected = 0;
};

/// Integrates from opts.t_start to t_end. The returned field has u0's
/// representation. Blow-up does not throw: the result carries the partial
/// series and the offending step.
inline IntegrationResult integrate(const Field& u0, double t_end, const SchemeConfig& cfg,
                                   const EffectiveFieldParams& p = {}, const MollifierSymbol* J = nullptr,
                                   IntegrateOptions opts = {}) {
    if (!(t_end >= 0.0)) throw UsageError("t_end must be nonnegative");
    if (opts.report_every < 1) throw UsageError("report cadence must be >= 1");
    Stepper stepper(cfg, p, J ? std::optional<MollifierSymbol>(*J) : std::nullopt);
    if (opts.previous) stepper.set_history(*opts.previous);

    IntegrationResult res{to_representation(u0, Representation::spectral)};
    res.series = TimeSeries(opts.metadata);
    res.state = {opts.t_start, cfg.dt, opts.step_start};
    Field& u = res.final_state;
    double t = opts.t_start;
    long n = opts.step_start;

    auto emit = [&](const Field& f, double time) {
        if (!opts.reports) return;
        EnergyReport r = report(f, time, p);
        res.series.append(r);
        if (opts.on_report) opts.on_report(r);
    };
    auto finish = [&]() {
        res.state = {t, cfg.dt, n};
        res.previous = stepper.history();
        if (res.previous) *res.previous = to_representation(*res.previous, u0.representation());
        u = to_representation(u, u0.representation());
        return std::move(res);
    };

    const double eps_t = 1e-12 * std::max(1.0, std::abs(t_end));
    if (t_end - t <= eps_t) {
        u = u0;
        return finish();
    }

    emit(u, t);
    bool last_reported = true;
    double h = cfg.dt;
    const double err_norm = std::pow(2.0, cfg.order()) - 1.0;
    try {
        while (t_end - t > eps_t) {
            // A remainder within roundoff of h is taken as h, so segmented runs
            // reuse the same propagator as an uninterrupted one.
            const double rest = t_end - t;
            if (std::abs(rest - h) > 1e-9 * h) h = std::min(h, rest);
            if (!cfg.adaptive) {
                u = stepper.step(u, h);
                t += h;
                h = cfg.dt;
            } else {
                Field big = stepper.step(u, h);
                Field half = stepper.step(stepper.step(u, 0.5 * h), 0.5 * h);
                const double err = l2_norm(big - half) / err_norm / std::max(1.0, l2_norm(half));
                const double factor =
                    err > 0.0 ? cfg.safety * std::pow(cfg.tolerance / err, 1.0 / (cfg.order() + 1)) : 2.0;
                if (err > cfg.tolerance) {
                    ++res.rejected;
                    h *= std::clamp(factor, 0.2, 0.9);
                    if (h < cfg.dt_min)
                        throw BlowUp(n, t, "step size fell below dt_min at t = " + format_double(t));
                    continue;
                }
                u = std::move(half);
                t += h;
                h = std::min(cfg.dt_max, h * std::clamp(factor, 0.2, 2.0));
            }
            ++n;
            if (opts.on_step) opts.on_step(u, t, n);
            last_reported = (n - opts.step_start) % opts.report_every == 0;
            if (last_reported) emit(u, t);
        }
        if (!last_reported) emit(u, t);
    } catch (const BlowUp& b) {
        res.blown_up = true;
        res.blowup_step = n + 1;
        res.blowup_t = t;
        res.message = b.what();
        if (opts.reports) {
            // Record the non-finite state so the monitor sees it.
            EnergyReport r;
            r.t = std::nextafter(t + h, INFINITY);
            r.flags = kFlagNonFinite;
            r.l2 = r.l4 = r.linf = r.h1 = r.h2 = r.grad_l2 = r.energy = r.dissipation = r.heff_l2 = std::nan("");
            res.series.append(r);
            if (opts.on_report) opts.on_report(r);
        }
    }
    return finish();
}

// ---------------------------------------------------------------------------

struct OrderReport {
    std::vector<double> dts;     // coarse step sizes (finest excluded)
    std::vector<double> errors;  // |u_dt - u_finest|_2 at t_end
    double order = 0.0;
    bool reliable = true;  // errors strictly decrease with dt
    bool exact = false;    // all errors at roundoff level
};

/// Self-convergence order at t_end against the finest step size in `dts`.
inline OrderReport measure_temporal_order(const Field& u0, const SchemeConfig& cfg, std::vector<double> dts,
                                          double t_end, const EffectiveFieldParams& p = {},
                                          const MollifierSymbol* J = nullptr) {
    if (dts.size() < 3) throw UsageError("measure_temporal_order needs at least three step sizes");
    std::sort(dts.begin(), dts.end(), std::greater<>());
    IntegrateOptions opts;
    opts.reports = false;
    auto run = [&](double dt) {
        SchemeConfig c = cfg;
        c.dt = dt;
        c.dt_min = std::min(c.dt_min, dt);
        c.adaptive = false;
        auto r = integrate(u0, t_end, c, p, J, opts);
        if (r.blown_up) throw BlowUp(r.blowup_step, r.blowup_t, "order study run blew up: " + r.message);
        return to_representation(r.final_state, Representation::spectral);
    };
    Field ref = run(dts.back());
    const double scale = std::max(l2_norm(ref), 1e-300);
    OrderReport rep;
    for (std::size_t i = 0; i + 1 < dts.size(); ++i) {
        rep.dts.push_back(dts[i]);
        rep.errors.push_back(l2_norm(run(dts[i]) - ref));
    }
    rep.exact = std::all_of(rep.errors.begin(), rep.errors.end(), [&](double e) { return e <= 1e-13 * scale; });
    for (std::size_t i = 1; i < rep.errors.size(); ++i)
        if (!(rep.errors[i] < rep.errors[i - 1])) rep.reliable = false;
    if (rep.exact) {
        rep.reliable = false;
        rep.order = INFINITY;
        return rep;
    }
    std::vector<double> errs = rep.errors;
    for (auto& e : errs) e = std::max(e, 1e-300);
    rep.order = fit_loglog(rep.dts, errs).slope;
    return rep;
}

}  // namespace llbar
