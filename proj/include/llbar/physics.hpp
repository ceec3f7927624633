#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "llbar/mollifier.hpp"
#include "llbar/spectral.hpp"

namespace llbar {

/// Constants of u_t = lr H - le Lap H - g u x H, H = Lap u + (1-|u|^2) u / (2 chi).
/// The defaults are the normalized system (chi = 1/4, unit damping and
/// gyromagnetic constants).
struct EffectiveFieldParams {
    double chi = 0.25;
    double lambda_r = 1.0;
    double lambda_e = 1.0;
    double gamma = 1.0;

    double coupling() const { return 1.0 / (2.0 * chi); }

    void validate() const {
        auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
        if (!positive(chi)) throw ParameterError("chi must be positive");
        if (!positive(lambda_r)) throw ParameterError("lambda_r must be positive");
        if (!positive(lambda_e)) throw ParameterError("lambda_e must be positive");
        if (!positive(gamma)) throw ParameterError("gamma must be positive");
    }

    // Symbol of the linearization about u = 0:
    //   -le |xi|^4 + (le a - lr) |xi|^2 + lr a,  a = 1/(2 chi)
    double linear_symbol(double k2) const {
        const double a = coupling();
        return -lambda_e * k2 * k2 + (lambda_e * a - lambda_r) * k2 + lambda_r * a;
    }

    // sup over xi of linear_symbol.
    double max_linear_symbol() const {
        const double a = coupling();
        const double b = lambda_e * a - lambda_r;
        return b > 0.0 ? lambda_r * a + b * b / (4.0 * lambda_e) : lambda_r * a;
    }
};

namespace detail {

inline void require_finite_field(const Field& f, const char* what) {
    if (!f.all_finite()) throw DataError(std::string(what) + ": non-finite values in field");
}

}  // namespace detail

/// |u|^2 u with the 2/3 rule applied to the input and to the product.
inline Field cubic(const Field& u) {
    Field w = dealias(to_representation(u, Representation::physical));
    return dealias(scale_pointwise(dot(w, w), w));
}

/// u x v with the 2/3 rule applied to inputs and product.
inline Field dealiased_cross(const Field& u, const Field& v) {
    return dealias(cross(dealias(to_representation(u, Representation::physical)),
                         dealias(to_representation(v, Representation::physical))));
}

inline Field effective_field(const Field& u, const EffectiveFieldParams& p = {}) {
    detail::require_finite_field(u, "effective_field");
    const double a = p.coupling();
    Field up = to_representation(u, Representation::physical);
    Field h = laplacian(up);
    h.axpy(a, up);
    h.axpy(-a, cubic(up));
    return h;
}

/// The five addends of the right-hand side F(u), all in physical space.
struct RhsTerms {
    Field bilaplacian_term;      // -le Lap^2 u
    Field laplacian_term;        // (lr - le a) Lap u
    Field cubic_term;            // lr a (1 - |u|^2) u
    Field cubic_laplacian_term;  // le a Lap(|u|^2 u)
    Field cross_term;            // -g u x Lap u

    Field total() const {
        Field f = bilaplacian_term;
        f += laplacian_term;
        f += cubic_term;
        f += cubic_laplacian_term;
        f += cross_term;
        return f;
    }
};

inline RhsTerms rhs_terms(const Field& u, const EffectiveFieldParams& p = {}) {
    detail::require_finite_field(u, "rhs");
    const double a = p.coupling();
    Field up = to_representation(u, Representation::physical);
    Field spec = to_spectral(up);
    Field lap_spec = apply_multiplier(MultiplierOp::laplacian(), spec);
    Field lap = to_physical(lap_spec);
    Field c = cubic(up);

    RhsTerms t{to_physical(apply_multiplier(MultiplierOp::bilaplacian(), spec)), lap, up, laplacian(c),
               dealiased_cross(up, lap)};
    t.bilaplacian_term *= -p.lambda_e;
    t.laplacian_term *= (p.lambda_r - p.lambda_e * a);
    t.cubic_term *= p.lambda_r * a;
    t.cubic_term.axpy(-p.lambda_r * a, c);
    t.cubic_laplacian_term *= p.lambda_e * a;
    t.cross_term *= -p.gamma;
    return t;
}

inline Field rhs(const Field& u, const EffectiveFieldParams& p = {}) { return rhs_terms(u, p).total(); }

inline double relative_or_absolute(double residual, double scale) {
    return scale < 1e-14 ? residual : residual / scale;
}

/// |F(u) - (lr H - le Lap H - g u x H)|_2 / |F(u)|_2, absolute when |F| < 1e-14.
inline double rhs_consistency_with_heff(const Field& u, const EffectiveFieldParams& p = {}) {
    Field f = rhs(u, p);
    Field h = effective_field(u, p);
    Field other = p.lambda_r * h;
    other.axpy(-p.lambda_e, laplacian(h));
    other.axpy(-p.gamma, dealiased_cross(u, h));
    return relative_or_absolute(l2_norm(f - other), l2_norm(f));
}

/// F^eps(u) = J[F(J u)]: mollify, evaluate every term, mollify again.
inline Field rhs_mollified(const Field& u, const MollifierSymbol& J, const EffectiveFieldParams& p = {}) {
    if (!(J.grid() == u.grid())) throw GridMismatch("mollifier and field grids differ");
    Field w = mollify(J, to_representation(u, Representation::physical));
    return mollify(J, rhs(w, p));
}

// F^eps when J is given, F otherwise.
inline Field rhs_maybe_mollified(const Field& u, const MollifierSymbol* J, const EffectiveFieldParams& p) {
    return J ? rhs_mollified(u, *J, p) : rhs(u, p);
}

/// |F^eps(u) - F^eps(v)|_{H^s} / |u - v|_{H^s}. Throws DegenerateRatio for u == v.
inline double lipschitz_probe(const Field& u, const Field& v, const MollifierSymbol& J, const EffectiveFieldParams& p,
                              double s) {
    require_same_grid(u, v);
    const double den = sobolev_norm(u - v, s);
    if (den == 0.0) throw DegenerateRatio("lipschitz_probe: u and v coincide");
    return sobolev_norm(rhs_mollified(u, J, p) - rhs_mollified(v, J, p), s) / den;
}

// ---------------------------------------------------------------------------
// Energy identities, instantaneous form: d/dt |.|^2 replaced by the pairing
// with F^eps(u). Left and right sides use separate code paths: the left goes
// through rhs_mollified and an L2 pairing, the right through physical-space
// quadrature of pointwise products.

struct IdentityResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    double orthogonality = 0.0;  // identity_h1 only
};

namespace detail {

inline double identity_residual(double lhs, double rhs) {
    return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0});
}

// Pointwise quantities of w = J u needed on the quadrature side.
struct MollifiedState {
    Field w;                   // physical
    std::array<Field, 3> dw;   // physical gradient components
    Field lap;                 // physical Lap w
};

inline MollifiedState mollified_state(const Field& u, const MollifierSymbol* J) {
    Field up = to_representation(u, Representation::physical);
    Field w = J ? mollify(*J, up) : up;
    auto dw = gradient(w);
    Field lap = laplacian(w);
    return {std::move(w), std::move(dw), std::move(lap)};
}

// sum_p sum_j (w . d_j w)^2 and sum_p |w|^2 |grad w|^2, both times cell volume.
inline std::pair<double, double> gradient_quartics(const MollifiedState& s) {
    const Grid& g = s.w.grid();
    double a = 0.0, b = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        auto w = s.w.value(p);
        const double w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        for (int j = 0; j < g.dim(); ++j) {
            auto d = s.dw[j].value(p);
            const double wd = w[0] * d[0] + w[1] * d[1] + w[2] * d[2];
            a += wd * wd;
            b += w2 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        }
    }
    return {a * g.cell_volume(), b * g.cell_volume()};
}

inline double quartic_integral(const Field& w) {
    double acc = 0.0;
    for (std::size_t p = 0; p < w.points(); ++p) {
        auto v = w.value(p);
        const double m = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        acc += m * m;
    }
    return acc * w.grid().cell_volume();
}

// Right side of the cubic-Laplacian expansion,
//   4|w.Lw|^2 + 2||w||Lw||^2 + 8(grad w (w.grad w)^T, Lw) + 4(|grad w|^2 w, Lw),
// which equals 2(Lap(|w|^2 w), Lap w).
inline double cubic_expansion_quadrature(const MollifiedState& s) {
    const Grid& g = s.w.grid();
    double acc = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        auto w = s.w.value(p);
        auto l = s.lap.value(p);
        const double wl = w[0] * l[0] + w[1] * l[1] + w[2] * l[2];
        const double w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        const double l2 = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
        double mixed = 0.0, grad2 = 0.0;
        for (int j = 0; j < g.dim(); ++j) {
            auto d = s.dw[j].value(p);
            const double wd = w[0] * d[0] + w[1] * d[1] + w[2] * d[2];
            mixed += wd * (d[0] * l[0] + d[1] * l[1] + d[2] * l[2]);
            grad2 += d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        }
        acc += 4.0 * wl * wl + 2.0 * w2 * l2 + 8.0 * mixed + 4.0 * grad2 * wl;
    }
    return acc * g.cell_volume();
}

}  // namespace detail

/// (F^eps(u), u) + le|Lw|^2 + lr a|w|_4^4 + le a(2|w.grad w|^2 + ||w||grad w||^2)
///   = (le a - lr)|grad w|^2 + lr a|w|^2,  w = J u.
/// At default constants: the L2 energy identity of the regularized flow.
inline IdentityResult identity_l2(const Field& u, const MollifierSymbol* J, const EffectiveFieldParams& p = {}) {
    const double a = p.coupling();
    const double pairing = inner_product(rhs_maybe_mollified(u, J, p), u);

    auto s = detail::mollified_state(u, J);
    auto [wdw, wgrad] = detail::gradient_quartics(s);
    const double lap2 = l2_norm(s.lap) * l2_norm(s.lap);
    const double grad2 = gradient_norm_squared(s.w);
    const double w2 = sobolev_norm_squared(s.w, 0.0);

    IdentityResult r;
    r.lhs = pairing + p.lambda_e * lap2 + p.lambda_r * a * detail::quartic_integral(s.w) +
            p.lambda_e * a * (2.0 * wdw + wgrad);
    r.rhs = (p.lambda_e * a - p.lambda_r) * grad2 + p.lambda_r * a * w2;
    r.residual = detail::identity_residual(r.lhs, r.rhs);
    return r;
}

/// (F^eps(u), -Lap u) + le|grad Lw|^2 + lr a(2|w.grad w|^2 + ||w||grad w||^2)
///   = (le a - lr)|Lw|^2 + lr a|grad w|^2 - le a (Lap(|w|^2 w), Lw).
/// The last pairing is evaluated by the cubic-expansion quadrature. Also
/// reports |(J(Ju x L Ju), Lap u)| relative to the Cauchy-Schwarz scale.
inline IdentityResult identity_h1(const Field& u, const MollifierSymbol* J, const EffectiveFieldParams& p = {}) {
    const double a = p.coupling();
    Field up = to_representation(u, Representation::physical);
    Field lap_u = laplacian(up);
    const double pairing = -inner_product(rhs_maybe_mollified(up, J, p), lap_u);

    auto s = detail::mollified_state(up, J);
    auto [wdw, wgrad] = detail::gradient_quartics(s);
    const double grad_lap2 = gradient_norm_squared(s.lap);
    const double lap2 = sobolev_norm_squared(s.lap, 0.0);
    const double grad2 = gradient_norm_squared(s.w);
    const double cubic_lap = 0.5 * detail::cubic_expansion_quadrature(s);

    IdentityResult r;
    r.lhs = pairing + p.lambda_e * grad_lap2 + p.lambda_r * a * (2.0 * wdw + wgrad);
    r.rhs = (p.lambda_e * a - p.lambda_r) * lap2 + p.lambda_r * a * grad2 - p.lambda_e * a * cubic_lap;
    r.residual = detail::identity_residual(r.lhs, r.rhs);

    Field c = dealiased_cross(s.w, s.lap);
    if (J) c = mollify(*J, c);
    const double scale = l2_norm(c) * l2_norm(lap_u);
    r.orthogonality = relative_or_absolute(std::abs(inner_product(c, lap_u)), scale);
    return r;
}

/// Residual of 2(Lap(|w|^2 w), Lap w) against its product-rule expansion,
/// with the left side formed spectrally from the collocated cubic.
inline double identity_cubic_expansion(const Field& u, const MollifierSymbol* J) {
    auto s = detail::mollified_state(u, J);
    const double lhs = 2.0 * inner_product(laplacian(scale_pointwise(dot(s.w, s.w), s.w)), s.lap);
    const double rhs = detail::cubic_expansion_quadrature(s);
    return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0});
}

// ---------------------------------------------------------------------------
// Energy and dissipation

/// E(u) = 1/2|grad u|^2 + a/4 |u|_4^4 - a/2 |u|_2^2; at chi = 1/4 this is
/// 1/2|u|_4^4 + 1/2|grad u|^2 - |u|^2.
inline double energy(const Field& u, const EffectiveFieldParams& p = {}) {
    detail::require_finite_field(u, "energy");
    const double a = p.coupling();
    Field up = to_representation(u, Representation::physical);
    return 0.5 * gradient_norm_squared(up) + 0.25 * a * detail::quartic_integral(up) -
           0.5 * a * sobolev_norm_squared(up, 0.0);
}

/// D(u) = lr|H|^2 + le|grad H|^2 (= |H|_{H^1}^2 at default constants).
inline double dissipation(const Field& u, const EffectiveFieldParams& p = {}) {
    Field h = to_spectral(effective_field(u, p));
    const Grid& g = h.grid();
    return detail::spectral_energy(h, [&](std::size_t q) { return p.lambda_r + p.lambda_e * g.k2(q); });
}

/// dE/dt along F assembled from the pairings (F,-Lap u), (F, a|u|^2 u),
/// (F, a u); should equal -D(u).
inline double energy_rate(const Field& u, const EffectiveFieldParams& p = {}) {
    const double a = p.coupling();
    Field up = to_representation(u, Representation::physical);
    Field f = rhs(up, p);
    return -inner_product(f, laplacian(up)) + a * inner_product(f, scale_pointwise(dot(up, up), up)) -
           a * inner_product(f, up);
}

// ---------------------------------------------------------------------------
// Interpolation-inequality probes

/// |f|_inf / (|f|_{H^1}^{1/2} |f|_{H^2}^{1/2})
inline double gn_linf_ratio(const Field& f) {
    const double den = std::sqrt(sobolev_norm(f, 1.0) * sobolev_norm(f, 2.0));
    return den > 0.0 ? linf_norm(f) / den : std::nan("");
}

/// |grad f|_{L4}^4 / (|grad Lap f|^{3/2} |grad f|^{5/2}); NaN for constants.
inline double gn_grad_l4_ratio(const Field& f) {
    auto df = gradient(f);
    double quartic = 0.0;
    const Grid& g = f.grid();
    for (std::size_t p = 0; p < g.size(); ++p) {
        double m = 0.0;
        for (int j = 0; j < g.dim(); ++j) {
            auto d = df[j].value(p);
            m += d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        }
        quartic += m * m;
    }
    quartic *= g.cell_volume();
    const double grad = std::sqrt(gradient_norm_squared(f));
    const double grad_lap = std::sqrt(gradient_norm_squared(laplacian(f)));
    const double den = std::pow(grad_lap, 1.5) * std::pow(grad, 2.5);
    return den > 0.0 ? quartic / den : std::nan("");
}

}  // namespace llbar
