#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "llbar/error.hpp"

namespace llbar {

/// Periodic grid on the torus [0, L)^dim with n points per axis.
///
/// Points are flattened row-major with axis 0 slowest. Along an axis the
/// index i carries the signed DFT mode m = i for i < n/2 and m = i - n
/// otherwise, so the single Nyquist mode is m = -n/2. Axes beyond `dim`
/// are degenerate (mode 0, coordinate 0).
class Grid {
public:
    Grid(int dim, int n, double box_length = 2.0 * std::numbers::pi)
        : dim_(dim), n_(n), box_length_(box_length) {
        if (dim < 1 || dim > 3)
            throw ParameterError("grid dimension must be 1, 2 or 3");
        if (n < 8 || n % 2 != 0)
            throw ParameterError("n_per_axis must be even and >= 8");
        if (!(box_length > 0.0) || !std::isfinite(box_length))
            throw ParameterError("box_length must be positive and finite");
        build_lattice();
    }

    int dim() const { return dim_; }
    int n() const { return n_; }
    double box_length() const { return box_length_; }
    std::size_t size() const { return lattice_->size; }

    double spacing() const { return box_length_ / n_; }
    double cell_volume() const { return std::pow(spacing(), dim_); }
    double volume() const { return std::pow(box_length_, dim_); }
    double fundamental() const { return 2.0 * std::numbers::pi / box_length_; }
    double nyquist_wavenumber() const { return fundamental() * (n_ / 2); }

    int mode(int index) const { return index < n_ / 2 ? index : index - n_; }
    double wavenumber(int index) const { return fundamental() * mode(index); }

    int mode_at(std::size_t point, int axis) const { return lattice_->modes[axis][point]; }
    double k_at(std::size_t point, int axis) const { return fundamental() * mode_at(point, axis); }
    double k2(std::size_t point) const { return lattice_->k2[point]; }
    const std::vector<double>& k2_table() const { return lattice_->k2; }

    bool is_nyquist(std::size_t point, int axis) const {
        return axis < dim_ && mode_at(point, axis) == -n_ / 2;
    }

    // 2/3-rule mask: every |m_j| <= n/3.
    bool dealiased(std::size_t point) const { return lattice_->keep[point] != 0; }
    int dealias_cutoff() const { return n_ / 3; }

    // Index of the lattice point carrying -xi.
    std::size_t partner(std::size_t point) const { return lattice_->partner[point]; }

    std::array<int, 3> coords(std::size_t point) const {
        std::array<int, 3> c{0, 0, 0};
        for (int a = dim_ - 1; a >= 0; --a) {
            c[a] = static_cast<int>(point % n_);
            point /= n_;
        }
        return c;
    }

    std::size_t flat(const std::array<int, 3>& c) const {
        std::size_t p = 0;
        for (int a = 0; a < dim_; ++a) p = p * n_ + static_cast<std::size_t>((c[a] % n_ + n_) % n_);
        return p;
    }

    std::array<double, 3> position(std::size_t point) const {
        auto c = coords(point);
        return {c[0] * spacing(), c[1] * spacing(), c[2] * spacing()};
    }

    std::string describe() const {
        std::ostringstream os;
        for (int a = 0; a < dim_; ++a) os << (a ? "x" : "") << n_;
        os.precision(17);
        os << " L=" << box_length_;
        return os.str();
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim_ == b.dim_ && a.n_ == b.n_ && a.box_length_ == b.box_length_;
    }

private:
    struct Lattice {
        std::size_t size = 0;
        std::vector<double> k2;
        std::array<std::vector<int>, 3> modes;
        std::vector<std::size_t> partner;
        std::vector<unsigned char> keep;
    };

    void build_lattice() {
        auto lat = std::make_shared<Lattice>();
        std::size_t total = 1;
        for (int a = 0; a < dim_; ++a) total *= static_cast<std::size_t>(n_);
        lat->size = total;
        lat->k2.resize(total);
        lat->partner.resize(total);
        lat->keep.resize(total);
        for (auto& m : lat->modes) m.assign(total, 0);
        const double k0 = fundamental();
        const int cut = n_ / 3;
        for (std::size_t p = 0; p < total; ++p) {
            auto c = coords(p);
            double k2 = 0.0;
            bool keep = true;
            std::array<int, 3> neg{0, 0, 0};
            for (int a = 0; a < dim_; ++a) {
                int m = mode(c[a]);
                lat->modes[a][p] = m;
                k2 += (k0 * m) * (k0 * m);
                if (std::abs(m) > cut) keep = false;
                neg[a] = (n_ - c[a]) % n_;
            }
            lat->k2[p] = k2;
            lat->keep[p] = keep ? 1 : 0;
            lat->partner[p] = flat(neg);
        }
        lattice_ = std::move(lat);
    }

    int dim_;
    int n_;
    double box_length_;
    std::shared_ptr<const Lattice> lattice_;
};

}  // namespace llbar
