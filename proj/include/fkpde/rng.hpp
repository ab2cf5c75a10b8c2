#pragma once

#include <cstdint>
#include <span>

#include "fkpde/kernels.hpp"

namespace fkpde {

/// Counter-based normal stream. A draw is a pure function of
/// (seed, slice, node, particle, step, channel); nothing is stateful, so any
/// partition of the work reproduces the same numbers.
///
/// Channel c of a step yields the normals for axes 2c and 2c+1.
struct RngStream {
    std::uint64_t seed = 0;

    /// Fills out[axis*count + i] with the normal for particle first+i, axes 0..dim-1.
    void normals(std::uint32_t slice, std::uint32_t node, std::uint32_t step, std::uint32_t first, std::size_t count,
                 int dim, std::span<double> out, std::span<double> scratch, const kernels::Table& k) const;

    kernels::PhiloxBatch batch(std::uint32_t slice, std::uint32_t node, std::uint32_t step,
                               std::uint32_t channel) const;
};

}  // namespace fkpde
