#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "fkpde/feynman_kac.hpp"

namespace fkpde {

struct SnapshotError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// PSIF v1, little-endian:
///   "PSIF" | u16 version | u16 d | u16 m | u32 slices | u32 nodes per axis (x d)
///   | f64 times | f64 coordinates (axis-major) | f64 values
///   | u64 count + f64 gradients | u64 count + f64 stderr | u32 CRC32 of everything after the magic.
/// Provenance and particle_sup are not stored.
std::vector<unsigned char> encode_snapshot(const PsiField& f);
PsiField decode_snapshot(const std::vector<unsigned char>& bytes);

void write_snapshot(const PsiField& f, const std::string& path);
PsiField read_snapshot(const std::string& path);

/// Wraps an FD series (PDE times, no gradients or stderr) for the same format.
PsiField field_from_series(const GridSeries& u);

}  // namespace fkpde
