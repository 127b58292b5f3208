#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "emq/grid.hpp"

namespace emq {

// Columnar text format shared by every field artifact:
//
//   # emq-field kind=<scalar|complex|vector> dims=K axis0=lo,hi,n,bc [axis1=...] [time=t]
//   # q0 [q1 q2] value...
//   <one row per grid point, axis 0 fastest, values printed with 17 significant digits>

std::string grid_header(const Grid& grid);
Grid parse_grid_header(const std::string& header_line);

void write_field(std::ostream& os, const ScalarField& f, std::optional<double> time = std::nullopt);
void write_field(std::ostream& os, const ComplexField& f, std::optional<double> time = std::nullopt);
void write_field(std::ostream& os, const VectorField& f, std::optional<double> time = std::nullopt);

struct ScalarRecord {
  ScalarField field;
  std::optional<double> time;
};

struct ComplexRecord {
  ComplexField field;
  std::optional<double> time;
};

/// Reads one field block; the stream is left positioned after its last row.
ScalarRecord read_scalar_field(std::istream& is);
ComplexRecord read_complex_field(std::istream& is);

}  // namespace emq
