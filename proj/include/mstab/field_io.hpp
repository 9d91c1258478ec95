#pragma once

#include "mstab/grid.hpp"

#include <cstdint>
#include <string>

namespace mstab {

inline constexpr std::uint32_t kCgofVersion = 1;

/**
 * Writes a field in the CGOF binary layout: magic "CGOF", u32 version,
 * u8 kind (form degree), u32 N, f64 L, then (re, im) pairs with
 * components outermost and axis 3 fastest. All little endian.
 */
void save_field(const std::string& path, const Field& u);

/// Reads a CGOF file; reuses @p grid when its (L, N) match the header.
Field load_field(const std::string& path, const GridPtr& grid = nullptr);

/// Raw complex matrix blob, used to persist Cauchy data.
void save_matrix(const std::string& path, int rows, int cols, const std::vector<cplx>& data);
std::vector<cplx> load_matrix(const std::string& path, int& rows, int& cols);

} // namespace mstab
