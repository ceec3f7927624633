#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "llbar/spectral.hpp"

namespace llbar {

/// Random band-limited data with |u_hat(xi)| proportional to (1+|xi|^2)^(-r)
/// and uniform random phases, scaled so that |u|_{Linf} equals `amplitude`.
struct InitialDataSpec {
    std::uint64_t seed = 0;
    double profile_r = 3.0;
    double amplitude = 0.5;
    // Largest |m_j| kept; negative selects the 2/3-rule dealiased set.
    int max_mode = -1;
    bool include_mean = true;
};

// Largest per-axis mode for which cubic products of the field stay inside
// the dealiased set, so the 2/3 projection acts exactly on them.
inline int resolved_band_limit(const Grid& g) { return g.dealias_cutoff() / 3; }

namespace detail {

// Uniform double in [0,1) built from the top 53 bits; the std distributions
// are implementation-defined, this keeps seeds portable.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

inline Field random_field(const Grid& g, const InitialDataSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    const int limit = spec.max_mode < 0 ? g.dealias_cutoff() : spec.max_mode;
    Field s(g, Representation::spectral);
    auto d = s.data();
    for (std::size_t p = 0; p < g.size(); ++p) {
        const std::size_t q = g.partner(p);
        bool inside = true;
        for (int a = 0; a < g.dim(); ++a)
            if (std::abs(g.mode_at(p, a)) > limit || g.is_nyquist(p, a)) inside = false;
        if (p == 0 && !spec.include_mean) inside = false;
        for (int c = 0; c < 3; ++c) {
            // Draw for every point so the stream does not depend on the mask.
            const double phase = 2.0 * std::numbers::pi * detail::unit_uniform(rng);
            if (!inside || q < p) continue;
            const double amp = std::pow(1.0 + g.k2(p), -spec.profile_r);
            if (q == p) {
                d[3 * p + c] = amp * (std::cos(phase) >= 0.0 ? 1.0 : -1.0);
            } else {
                d[3 * p + c] = std::polar(amp, phase);
                d[3 * q + c] = std::polar(amp, -phase);
            }
        }
    }
    Field u = to_physical(s);
    if (spec.amplitude > 0.0) {
        const double m = linf_norm(u);
        if (m > 0.0) u *= spec.amplitude / m;
    }
    return u;
}

// Seeded family of band-limited fields whose cubic products are resolved.
inline std::vector<Field> resolved_family(const Grid& g, std::size_t count, std::uint64_t seed, double amplitude = 0.8,
                                          double profile_r = 1.0) {
    std::vector<Field> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        InitialDataSpec spec;
        spec.seed = seed + i;
        spec.profile_r = profile_r;
        spec.amplitude = amplitude;
        spec.max_mode = resolved_band_limit(g);
        out.push_back(random_field(g, spec));
    }
    return out;
}

}  // namespace llbar
