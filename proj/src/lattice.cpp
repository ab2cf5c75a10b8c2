#include "fkpde/lattice.hpp"

namespace fkpde {

Lattice::Lattice(int d, int nodes_per_axis) : dim(d) {
    if (d < 1 || d > 3) throw InvalidInput("lattice dimension must be 1..3");
    if (nodes_per_axis < 1) throw InvalidInput("lattice needs at least one node per axis");
    per_axis = {1, 1, 1};
    for (int a = 0; a < d; ++a) per_axis[a] = nodes_per_axis;
}

std::size_t Lattice::size() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(per_axis[a]);
    return n;
}

std::array<int, 3> Lattice::multi_index(std::size_t node) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
        idx[a] = static_cast<int>(node % per_axis[a]);
        node /= per_axis[a];
    }
    return idx;
}

std::size_t Lattice::linear(const std::array<int, 3>& idx) const {
    std::size_t node = 0;
    for (int a = dim - 1; a >= 0; --a) node = node * per_axis[a] + static_cast<std::size_t>(idx[a]);
    return node;
}

double Lattice::coord(std::size_t node, int axis) const {
    return static_cast<double>(multi_index(node)[axis]) / per_axis[axis];
}

std::size_t Lattice::shifted(std::size_t node, int axis, int step) const {
    auto idx = multi_index(node);
    const int n = per_axis[axis];
    idx[axis] = ((idx[axis] + step) % n + n) % n;
    return linear(idx);
}

std::vector<double> Lattice::coordinates() const {
    const std::size_t n = size();
    std::vector<double> out(n * dim);
    for (std::size_t i = 0; i < n; ++i)
        for (int a = 0; a < dim; ++a) out[a * n + i] = coord(i, a);
    return out;
}

std::vector<double> TimeGrid::slice_times() const {
    std::vector<double> t(n_steps + 1);
    for (int k = 0; k <= n_steps; ++k) t[k] = knot(k);
    return t;
}

}  // namespace fkpde
