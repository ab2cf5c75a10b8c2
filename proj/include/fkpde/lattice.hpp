#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fkpde {

/// Thrown for bad inputs to library calls (maps to the config-error exit code in the CLI).
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Non-finite state or field; carries where it happened.
struct BlowUp : std::runtime_error {
    double time = 0.0;
    explicit BlowUp(const std::string& what, double t = 0.0) : std::runtime_error(what), time(t) {}
};

/// Periodic lattice on the unit torus; node i on an axis sits at i/n.
/// Linear node index runs axis 0 fastest.
struct Lattice {
    int dim = 1;
    std::array<int, 3> per_axis{64, 1, 1};

    Lattice() = default;
    Lattice(int d, int nodes_per_axis);

    std::size_t size() const;
    double spacing(int axis) const { return 1.0 / per_axis[axis]; }
    double coord(std::size_t node, int axis) const;
    std::array<int, 3> multi_index(std::size_t node) const;
    std::size_t linear(const std::array<int, 3>& idx) const;
    /// Neighbour along `axis` shifted by `step` with periodic wrap.
    std::size_t shifted(std::size_t node, int axis, int step) const;
    /// Node coordinates, axis-major (coords[axis*size + node]).
    std::vector<double> coordinates() const;

    bool operator==(const Lattice&) const = default;
};

/// Uniform grid on [0,T]; knot k is computed as k*T/n so the last knot is T exactly.
struct TimeGrid {
    double horizon = 1.0;
    int n_steps = 200;

    double step_size() const { return horizon / n_steps; }
    double knot(int k) const { return k == n_steps ? horizon : static_cast<double>(k) * horizon / n_steps; }
    std::vector<double> slice_times() const;
};

/// Batch of points in structure-of-arrays layout: coordinate `axis` of point i is data[axis*count + i].
struct Points {
    std::span<const double> data;
    std::size_t count = 0;
    int dim = 1;

    double operator()(int axis, std::size_t i) const { return data[axis * count + i]; }
    std::span<const double> axis(int a) const { return data.subspan(a * count, count); }
};

/// Field sampled on (time slice x node) in PDE time; values[(slice*nodes + node)*m + c].
struct GridSeries {
    std::vector<double> times;
    Lattice lattice{};
    int m = 1;
    std::vector<double> values;

    std::size_t nodes() const { return lattice.size(); }
    double at(std::size_t s, std::size_t node, int c = 0) const { return values[(s * nodes() + node) * m + c]; }
};

}  // namespace fkpde
