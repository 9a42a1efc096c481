#pragma once
#include <string>

#include "tfns/grid.hpp"

namespace tfns {

// Shortest exact decimal rendering of a double (printf %.17g byte-stable).
std::string format_double(double v);

// CSV snapshot: comment header lines (each prefixed "# "), then
// "s,x,y,value" rows in row-major grid order, %.17g formatting.
void write_field_csv(const Field& f, const std::string& path, const std::string& header);

// Compact binary dump, little-endian:
//   magic "TFNSFLD1" (8 bytes), int64 n_s, int64 n_y,
//   f64 s_min, s_max, y_period, time, then n_s*n_y row-major f64 values.
void write_field_binary(const Field& f, const std::string& path);
Field read_field_binary(const std::string& path);

}  // namespace tfns
