#pragma once

// Binary field snapshot, little-endian:
//
//   offset  size  content
//        0     8  magic "LLBAR1" followed by two NUL bytes
//        8     4  int32  dim
//       12     4  int32  n_per_axis
//       16     8  float64 box_length
//       24     4  int32  representation (0 = physical, 1 = spectral)
//       28     4  int32  reserved, 0
//       32     8  float64 timestamp (simulation time)
//       40     .  samples, row-major over grid points (axis 0 slowest),
//                 component innermost. Physical: 3 float64 per point.
//                 Spectral: 3 (re, im) float64 pairs per point.
//
// A checkpoint is a snapshot followed by a scheme-state trailer:
//
//        0     8  magic "LLBSTATE"
//        8     8  float64 t
//       16     8  float64 dt
//       24     8  int64  step count
//       32     4  int32  has_previous (1 if a previous state follows)
//       36     4  int32  reserved, 0
//       40     .  previous state samples (same layout as above), if any

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "llbar/field.hpp"

namespace llbar {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

inline constexpr std::array<char, 8> kSnapshotMagic{'L', 'L', 'B', 'A', 'R', '1', '\0', '\0'};
inline constexpr std::array<char, 8> kStateMagic{'L', 'L', 'B', 'S', 'T', 'A', 'T', 'E'};
inline constexpr std::size_t kSnapshotHeaderBytes = 40;

struct Snapshot {
    Field field;
    double timestamp = 0.0;
};

struct SchemeState {
    double t = 0.0;
    double dt = 0.0;
    std::int64_t steps = 0;
};

struct Checkpoint {
    Field field;
    SchemeState state;
    std::optional<Field> previous;
};

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const char* what) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw FormatError(std::string("snapshot truncated while reading ") + what);
    return v;
}

inline void write_samples(std::ostream& os, const Field& f) {
    for (const cplx& z : f.data()) {
        put(os, z.real());
        if (f.is_spectral()) put(os, z.imag());
    }
}

inline void read_samples(std::istream& is, Field& f) {
    const std::size_t per = f.is_spectral() ? 2 : 1;
    std::vector<double> buf(per * f.data().size());
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double))))
        throw FormatError("snapshot truncated in sample data");
    auto d = f.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = per == 2 ? cplx(buf[2 * i], buf[2 * i + 1]) : cplx(buf[i], 0.0);
}

}  // namespace detail

inline void write_snapshot(std::ostream& os, const Field& f, double timestamp = 0.0) {
    os.write(kSnapshotMagic.data(), kSnapshotMagic.size());
    detail::put<std::int32_t>(os, f.grid().dim());
    detail::put<std::int32_t>(os, f.grid().n());
    detail::put<double>(os, f.grid().box_length());
    detail::put<std::int32_t>(os, f.is_spectral() ? 1 : 0);
    detail::put<std::int32_t>(os, 0);
    detail::put<double>(os, timestamp);
    detail::write_samples(os, f);
}

/// Reads one snapshot. With `expected` set, a grid that differs from it is a
/// format error (dimension mismatch against the run configuration).
inline Snapshot read_snapshot(std::istream& is, const std::optional<Grid>& expected = std::nullopt) {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size())) throw FormatError("snapshot truncated in header");
    if (magic != kSnapshotMagic) throw FormatError("bad snapshot magic");
    const auto dim = detail::get<std::int32_t>(is, "dim");
    const auto n = detail::get<std::int32_t>(is, "n_per_axis");
    const auto box = detail::get<double>(is, "box_length");
    const auto rep = detail::get<std::int32_t>(is, "representation");
    detail::get<std::int32_t>(is, "reserved");
    const auto ts = detail::get<double>(is, "timestamp");
    if (rep != 0 && rep != 1) throw FormatError("bad representation tag " + std::to_string(rep));

    std::optional<Grid> grid;
    try {
        grid.emplace(dim, n, box);
    } catch (const ParameterError& e) {
        throw FormatError(std::string("snapshot header describes an invalid grid: ") + e.what());
    }
    if (expected && !(*expected == *grid))
        throw FormatError("snapshot grid " + grid->describe() + " does not match configured grid " +
                          expected->describe());
    Field f(*grid, rep == 1 ? Representation::spectral : Representation::physical);
    detail::read_samples(is, f);
    return {std::move(f), ts};
}

inline void save_snapshot(const Field& f, const std::filesystem::path& path, double timestamp = 0.0) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_snapshot(os, f, timestamp);
    if (!os) throw IoError("write failed for " + path.string());
}

inline Field load_snapshot(const std::filesystem::path& path, const std::optional<Grid>& expected = std::nullopt) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return read_snapshot(is, expected).field;
}

inline void save_checkpoint(const std::filesystem::path& path, const Field& u, const SchemeState& state,
                            const std::optional<Field>& previous = std::nullopt) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_snapshot(os, u, state.t);
    os.write(kStateMagic.data(), kStateMagic.size());
    detail::put<double>(os, state.t);
    detail::put<double>(os, state.dt);
    detail::put<std::int64_t>(os, state.steps);
    detail::put<std::int32_t>(os, previous ? 1 : 0);
    detail::put<std::int32_t>(os, 0);
    if (previous) {
        require_same_grid(u, *previous);
        Field prev = to_representation(*previous, u.representation());
        detail::write_samples(os, prev);
    }
    if (!os) throw IoError("write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<Grid>& expected = std::nullopt) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    Snapshot snap = read_snapshot(is, expected);
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size())) throw FormatError("checkpoint has no scheme-state record");
    if (magic != kStateMagic) throw FormatError("bad scheme-state magic");
    SchemeState st;
    st.t = detail::get<double>(is, "t");
    st.dt = detail::get<double>(is, "dt");
    st.steps = detail::get<std::int64_t>(is, "step count");
    const auto has_prev = detail::get<std::int32_t>(is, "has_previous");
    detail::get<std::int32_t>(is, "reserved");
    Checkpoint ck{std::move(snap.field), st, std::nullopt};
    if (has_prev == 1) {
        Field prev(ck.field.grid(), ck.field.representation());
        detail::read_samples(is, prev);
        ck.previous = std::move(prev);
    }
    return ck;
}

}  // namespace llbar
