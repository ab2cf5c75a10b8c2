#include "fkpde/rng.hpp"

#include "fkpde/lattice.hpp"

namespace fkpde {

kernels::PhiloxBatch RngStream::batch(std::uint32_t slice, std::uint32_t node, std::uint32_t step,
                                      std::uint32_t channel) const {
    if (step >= (1u << 24) || channel >= 256u) throw InvalidInput("rng key out of range");
    kernels::PhiloxBatch b;
    b.key0 = static_cast<std::uint32_t>(seed);
    b.key1 = static_cast<std::uint32_t>(seed >> 32);
    b.word1 = step | (channel << 24);
    b.word2 = node;
    b.word3 = slice;
    return b;
}

void RngStream::normals(std::uint32_t slice, std::uint32_t node, std::uint32_t step, std::uint32_t first,
                        std::size_t count, int dim, std::span<double> out, std::span<double> scratch,
                        const kernels::Table& k) const {
    for (int axis = 0; axis < dim; axis += 2) {
        const auto b = batch(slice, node, step, static_cast<std::uint32_t>(axis / 2));
        double* z0 = out.data() + axis * count;
        // The odd axis lands in place; a lone last axis dumps its partner into scratch.
        double* z1 = (axis + 1 < dim) ? out.data() + (axis + 1) * count : scratch.data();
        k.normal_pairs(b, first, count, z0, z1);
    }
}

}  // namespace fkpde
