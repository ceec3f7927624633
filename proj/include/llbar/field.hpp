#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "llbar/error.hpp"
#include "llbar/fft.hpp"
#include "llbar/grid.hpp"

namespace llbar {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

enum class Representation { physical, spectral };

inline const char* to_string(Representation r) {
    return r == Representation::physical ? "physical" : "spectral";
}

/// R^3-valued field on a Grid, three complex samples per point with the
/// component index innermost.
///
/// Physical data is real; the imaginary parts are kept at zero by every
/// public operation. Spectral data is the unnormalized forward DFT, the
/// inverse carries the 1/N factor.
class Field {
public:
    explicit Field(Grid grid, Representation rep = Representation::physical)
        : grid_(std::move(grid)), rep_(rep), data_(3 * grid_.size()) {}

    static Field constant(const Grid& grid, const Vec3& value) {
        Field f(grid);
        for (std::size_t p = 0; p < f.points(); ++p) f.set(p, value);
        return f;
    }

    // fn(position) -> Vec3, sampled at the collocation points.
    template <class Fn>
    static Field sample(const Grid& grid, Fn&& fn) {
        Field f(grid);
        for (std::size_t p = 0; p < f.points(); ++p) f.set(p, fn(grid.position(p)));
        return f;
    }

    const Grid& grid() const { return grid_; }
    Representation representation() const { return rep_; }
    bool is_physical() const { return rep_ == Representation::physical; }
    bool is_spectral() const { return rep_ == Representation::spectral; }
    std::size_t points() const { return grid_.size(); }

    cplx& at(std::size_t point, int comp) { return data_[3 * point + comp]; }
    const cplx& at(std::size_t point, int comp) const { return data_[3 * point + comp]; }

    Vec3 value(std::size_t point) const {
        return {data_[3 * point].real(), data_[3 * point + 1].real(), data_[3 * point + 2].real()};
    }
    void set(std::size_t point, const Vec3& v) {
        for (int c = 0; c < 3; ++c) data_[3 * point + c] = v[c];
    }

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
    }

    Field& operator+=(const Field& o) { return axpy(1.0, o); }
    Field& operator-=(const Field& o) { return axpy(-1.0, o); }
    Field& operator*=(double s) {
        for (auto& z : data_) z *= s;
        return *this;
    }

    // this += a * o, converting o to this field's representation if needed.
    Field& axpy(double a, const Field& o);

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double s, Field f) { return f *= s; }
    friend Field operator*(Field f, double s) { return f *= s; }

private:
    friend Field to_spectral(const Field&);
    friend Field to_physical(const Field&);

    Grid grid_;
    Representation rep_;
    std::vector<cplx> data_;
};

inline void require_same_grid(const Field& a, const Field& b) {
    if (!(a.grid() == b.grid())) throw GridMismatch();
}

inline Field to_spectral(const Field& f) {
    if (!f.is_physical()) throw UsageError("to_spectral: field is already in spectral representation");
    Field out(f.grid(), Representation::spectral);
    detail::PlanCache::instance().forward(f.grid(), f.data_.data(), out.data_.data());
    return out;
}

/// Inverse transform. Rejects spectra that are not conjugate symmetric, i.e.
/// whose inverse has an imaginary part above 1e-12 of the field magnitude.
inline Field to_physical(const Field& f) {
    if (!f.is_spectral()) throw UsageError("to_physical: field is already in physical representation");
    Field out(f.grid(), Representation::physical);
    detail::PlanCache::instance().backward(f.grid(), f.data_.data(), out.data_.data());
    const double inv = 1.0 / static_cast<double>(f.points());
    double max_abs = 0.0;
    double max_imag = 0.0;
    for (auto& z : out.data_) {
        z *= inv;
        max_abs = std::max(max_abs, std::abs(z));
        max_imag = std::max(max_imag, std::abs(z.imag()));
    }
    if (!(max_imag <= 1e-12 * max_abs + 1e-300) && max_abs > 0.0) {
        if (std::isfinite(max_abs))
            throw DataError("to_physical: spectrum is not conjugate symmetric (imaginary part " +
                            std::to_string(max_imag / max_abs) + " of magnitude)");
    }
    for (auto& z : out.data_) z = z.real();
    return out;
}

inline Field to_representation(const Field& f, Representation rep) {
    if (f.representation() == rep) return f;
    return rep == Representation::spectral ? to_spectral(f) : to_physical(f);
}

inline Field& Field::axpy(double a, const Field& o) {
    require_same_grid(*this, o);
    if (o.rep_ != rep_) return axpy(a, to_representation(o, rep_));
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * o.data_[i];
    return *this;
}

}  // namespace llbar
