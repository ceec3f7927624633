#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "llbar/field.hpp"

namespace llbar {

/// Fourier multiplier whose symbol depends on |xi|^2 only.
struct MultiplierOp {
    std::string name;
    std::function<double(double)> symbol;  // argument: |xi|^2

    static MultiplierOp identity() {
        return {"identity", [](double) { return 1.0; }};
    }
    static MultiplierOp laplacian() {
        return {"laplacian", [](double k2) { return -k2; }};
    }
    static MultiplierOp bilaplacian() {
        return {"bilaplacian", [](double k2) { return k2 * k2; }};
    }
    // Bessel potential (1 - Lap)^{s/2}.
    static MultiplierOp bessel(double s) {
        return {"bessel(" + std::to_string(s) + ")", [s](double k2) { return std::pow(1.0 + k2, 0.5 * s); }};
    }
};

// Multiplies every component of a spectral field by table[p] in place.
inline void scale_spectral(Field& f, const std::vector<double>& table) {
    auto d = f.data();
    for (std::size_t p = 0; p < f.points(); ++p) {
        const double s = table[p];
        d[3 * p] *= s;
        d[3 * p + 1] *= s;
        d[3 * p + 2] *= s;
    }
}

inline std::vector<double> tabulate(const Grid& g, const std::function<double(double)>& symbol) {
    std::vector<double> t(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) t[p] = symbol(g.k2(p));
    return t;
}

/// Applies `table` (one real value per lattice point) and returns the result
/// in the caller's representation.
inline Field apply_table(const std::vector<double>& table, const Field& f) {
    Field s = to_representation(f, Representation::spectral);
    scale_spectral(s, table);
    return to_representation(s, f.representation());
}

inline Field apply_multiplier(const MultiplierOp& op, const Field& f) {
    return apply_table(tabulate(f.grid(), op.symbol), f);
}

inline Field laplacian(const Field& f) { return apply_multiplier(MultiplierOp::laplacian(), f); }

// i*xi_axis in spectral space; the Nyquist mode is zeroed so the result of a
// real field stays real.
inline Field partial_spectral(const Field& spec, int axis) {
    const Grid& g = spec.grid();
    Field out(g, Representation::spectral);
    if (axis >= g.dim()) return out;
    auto in = spec.data();
    auto d = out.data();
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (g.is_nyquist(p, axis)) continue;
        const cplx ik(0.0, g.k_at(p, axis));
        for (int c = 0; c < 3; ++c) d[3 * p + c] = ik * in[3 * p + c];
    }
    return out;
}

inline Field partial(const Field& f, int axis) {
    return to_representation(partial_spectral(to_representation(f, Representation::spectral), axis),
                             f.representation());
}

/// (d_1 f, d_2 f, d_3 f); axes beyond the grid dimension give zero fields.
inline std::array<Field, 3> gradient(const Field& f) {
    Field s = to_representation(f, Representation::spectral);
    std::array<Field, 3> out{Field(f.grid(), f.representation()), Field(f.grid(), f.representation()),
                             Field(f.grid(), f.representation())};
    for (int a = 0; a < f.grid().dim(); ++a)
        out[a] = to_representation(partial_spectral(s, a), f.representation());
    return out;
}

// d_i d_j f with the symbol -xi_i xi_j. For i == j the Nyquist mode is
// kept (even symbol); for i != j it is zeroed, since the symbol is odd in
// each factor there and would make the result of a real field complex.
inline Field second_partial(const Field& f, int i, int j) {
    const Grid& g = f.grid();
    Field s = to_representation(f, Representation::spectral);
    if (i >= g.dim() || j >= g.dim()) return Field(g, f.representation());
    auto d = s.data();
    for (std::size_t p = 0; p < g.size(); ++p) {
        const bool odd_nyquist = i != j && (g.is_nyquist(p, i) || g.is_nyquist(p, j));
        const double sym = odd_nyquist ? 0.0 : -g.k_at(p, i) * g.k_at(p, j);
        for (int c = 0; c < 3; ++c) d[3 * p + c] *= sym;
    }
    return to_representation(s, f.representation());
}

/// 2/3-rule projection: zero every mode with some |m_j| > n/3.
inline Field dealias(const Field& f) {
    const Grid& g = f.grid();
    Field s = to_representation(f, Representation::spectral);
    auto d = s.data();
    for (std::size_t p = 0; p < g.size(); ++p)
        if (!g.dealiased(p)) d[3 * p] = d[3 * p + 1] = d[3 * p + 2] = 0.0;
    return to_representation(s, f.representation());
}

// ---------------------------------------------------------------------------
// Norms and pairings

enum class NormKind { L2, L4, Linf, Hs };

struct NormSpec {
    NormKind kind = NormKind::L2;
    double s = 0.0;

    static NormSpec l2() { return {NormKind::L2, 0.0}; }
    static NormSpec l4() { return {NormKind::L4, 0.0}; }
    static NormSpec linf() { return {NormKind::Linf, 0.0}; }
    static NormSpec sobolev(double s) { return {NormKind::Hs, s}; }
};

namespace detail {

inline void require_finite(const Field& f, const char* what) {
    if (!f.all_finite()) throw DataError(std::string(what) + ": field contains non-finite values");
}

// sum_p weight(k2_p) |f_hat(p)|^2 * V / N^2
template <class Weight>
double spectral_energy(const Field& spec, Weight&& weight) {
    const Grid& g = spec.grid();
    auto d = spec.data();
    double acc = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double m = std::norm(d[3 * p]) + std::norm(d[3 * p + 1]) + std::norm(d[3 * p + 2]);
        if (m != 0.0) acc += weight(p) * m;
    }
    const double n = static_cast<double>(g.size());
    return acc * g.volume() / (n * n);
}

}  // namespace detail

/// Parseval sums, computed on the spectral representation.
inline double sobolev_norm_squared(const Field& f, double s) {
    detail::require_finite(f, "norm");
    Field spec = to_representation(f, Representation::spectral);
    const Grid& g = f.grid();
    if (s == 0.0) return detail::spectral_energy(spec, [](std::size_t) { return 1.0; });
    return detail::spectral_energy(spec, [&](std::size_t p) { return std::pow(1.0 + g.k2(p), s); });
}

// |grad f|_{L2}^2 via the spectral symbol |xi|^2 (consistent with -Lap).
inline double gradient_norm_squared(const Field& f) {
    detail::require_finite(f, "norm");
    Field spec = to_representation(f, Representation::spectral);
    const Grid& g = f.grid();
    return detail::spectral_energy(spec, [&](std::size_t p) { return g.k2(p); });
}

inline double norm(const Field& f, NormSpec spec) {
    detail::require_finite(f, "norm");
    switch (spec.kind) {
    case NormKind::L2:
        return std::sqrt(sobolev_norm_squared(f, 0.0));
    case NormKind::Hs:
        return std::sqrt(sobolev_norm_squared(f, spec.s));
    case NormKind::L4: {
        Field ph = to_representation(f, Representation::physical);
        double acc = 0.0;
        for (std::size_t p = 0; p < ph.points(); ++p) {
            auto v = ph.value(p);
            const double m2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            acc += m2 * m2;
        }
        return std::pow(acc * f.grid().cell_volume(), 0.25);
    }
    case NormKind::Linf: {
        Field ph = to_representation(f, Representation::physical);
        double mx = 0.0;
        for (std::size_t p = 0; p < ph.points(); ++p) {
            auto v = ph.value(p);
            mx = std::max(mx, std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
        }
        return mx;
    }
    }
    return 0.0;
}

inline double l2_norm(const Field& f) { return norm(f, NormSpec::l2()); }
inline double l4_norm(const Field& f) { return norm(f, NormSpec::l4()); }
inline double linf_norm(const Field& f) { return norm(f, NormSpec::linf()); }
inline double sobolev_norm(const Field& f, double s) { return norm(f, NormSpec::sobolev(s)); }

/// (f, g)_{L2} by collocation quadrature.
inline double inner_product(const Field& f, const Field& g) {
    require_same_grid(f, g);
    Field a = to_representation(f, Representation::physical);
    Field b = to_representation(g, Representation::physical);
    auto da = a.data();
    auto db = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) acc += da[i].real() * db[i].real();
    return acc * f.grid().cell_volume();
}

// ---------------------------------------------------------------------------
// Pointwise algebra (physical space)

inline Field cross(const Field& a, const Field& b) {
    require_same_grid(a, b);
    Field pa = to_representation(a, Representation::physical);
    Field pb = to_representation(b, Representation::physical);
    Field out(a.grid());
    for (std::size_t p = 0; p < out.points(); ++p) {
        auto x = pa.value(p);
        auto y = pb.value(p);
        out.set(p, {x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]});
    }
    return out;
}

// Scalar field helpers: one real sample per grid point.
using Scalars = std::vector<double>;

inline Scalars dot(const Field& a, const Field& b) {
    require_same_grid(a, b);
    Field pa = to_representation(a, Representation::physical);
    Field pb = to_representation(b, Representation::physical);
    Scalars out(a.points());
    for (std::size_t p = 0; p < out.size(); ++p) {
        auto x = pa.value(p);
        auto y = pb.value(p);
        out[p] = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    }
    return out;
}

inline Field scale_pointwise(const Scalars& s, const Field& f) {
    Field pf = to_representation(f, Representation::physical);
    for (std::size_t p = 0; p < pf.points(); ++p) {
        auto v = pf.value(p);
        pf.set(p, {s[p] * v[0], s[p] * v[1], s[p] * v[2]});
    }
    return pf;
}

inline double integrate(const Grid& g, const Scalars& s) {
    double acc = 0.0;
    for (double v : s) acc += v;
    return acc * g.cell_volume();
}

}  // namespace llbar
