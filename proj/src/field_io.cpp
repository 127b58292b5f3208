#include "emq/field_io.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "emq/errors.hpp"

namespace emq {

namespace {

constexpr const char* kMagic = "# emq-field";

void write_header(std::ostream& os, const Grid& grid, const char* kind, std::optional<double> time,
                  const std::vector<std::string>& value_columns) {
  os << kMagic << " kind=" << kind << ' ' << grid_header(grid);
  if (time) os << " time=" << std::setprecision(17) << *time;
  os << "\n#";
  for (std::size_t k = 0; k < grid.dims(); ++k) os << " q" << k;
  for (const auto& c : value_columns) os << ' ' << c;
  os << '\n';
}

void write_coordinates(std::ostream& os, const Grid& grid, std::size_t flat) {
  const Point3 q = grid.position(flat);
  for (std::size_t k = 0; k < grid.dims(); ++k) os << q[k] << ' ';
}

struct Header {
  std::string kind;
  Grid grid;
  std::optional<double> time;
};

Header read_header(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind(kMagic, 0) == 0) break;
    if (!line.empty()) throw InvalidArgument("expected field header, got: " + line);
  }
  if (line.rfind(kMagic, 0) != 0) throw InvalidArgument("no field header found");
  Header h;
  h.grid = parse_grid_header(line);
  std::istringstream tokens(line.substr(std::string(kMagic).size()));
  std::string tok;
  while (tokens >> tok) {
    if (tok.rfind("kind=", 0) == 0) h.kind = tok.substr(5);
    if (tok.rfind("time=", 0) == 0) h.time = std::stod(tok.substr(5));
  }
  std::string columns;
  std::getline(is, columns);  // column names
  return h;
}

}  // namespace

std::string grid_header(const Grid& grid) {
  std::ostringstream os;
  os << std::setprecision(17) << "dims=" << grid.dims();
  for (std::size_t k = 0; k < grid.dims(); ++k) {
    const AxisSpec& a = grid.axis(k);
    os << " axis" << k << '=' << a.lower << ',' << a.upper << ',' << a.points << ',' << to_string(a.boundary);
  }
  return os.str();
}

Grid parse_grid_header(const std::string& header_line) {
  std::istringstream tokens(header_line);
  std::string tok;
  std::size_t dims = 0;
  std::vector<AxisSpec> axes;
  while (tokens >> tok) {
    if (tok.rfind("dims=", 0) == 0) {
      dims = std::stoul(tok.substr(5));
    } else if (tok.rfind("axis", 0) == 0) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw InvalidArgument("malformed axis token: " + tok);
      std::istringstream parts(tok.substr(eq + 1));
      std::string lo, hi, n, bc;
      std::getline(parts, lo, ',');
      std::getline(parts, hi, ',');
      std::getline(parts, n, ',');
      std::getline(parts, bc, ',');
      axes.push_back({std::stod(lo), std::stod(hi), std::stoul(n), boundary_from_string(bc)});
    }
  }
  if (dims == 0 || axes.size() != dims) throw InvalidArgument("grid header has inconsistent axis count");
  return Grid(axes);
}

void write_field(std::ostream& os, const ScalarField& f, std::optional<double> time) {
  const Grid& g = f.grid();
  write_header(os, g, "scalar", time, {"value"});
  os << std::setprecision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    write_coordinates(os, g, i);
    os << f[i] << '\n';
  }
}

void write_field(std::ostream& os, const ComplexField& f, std::optional<double> time) {
  const Grid& g = f.grid();
  write_header(os, g, "complex", time, {"real", "imag"});
  os << std::setprecision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    write_coordinates(os, g, i);
    os << f[i].real() << ' ' << f[i].imag() << '\n';
  }
}

void write_field(std::ostream& os, const VectorField& f, std::optional<double> time) {
  const Grid& g = f.grid();
  std::vector<std::string> cols;
  for (std::size_t k = 0; k < g.dims(); ++k) cols.push_back("v" + std::to_string(k));
  write_header(os, g, "vector", time, cols);
  os << std::setprecision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    write_coordinates(os, g, i);
    for (std::size_t k = 0; k < g.dims(); ++k) os << f.component(k)[i] << (k + 1 < g.dims() ? ' ' : '\n');
  }
}

ScalarRecord read_scalar_field(std::istream& is) {
  Header h = read_header(is);
  if (h.kind != "scalar") throw InvalidArgument("expected scalar field, found kind=" + h.kind);
  ScalarField f(h.grid);
  std::string line;
  for (std::size_t i = 0; i < h.grid.size(); ++i) {
    if (!std::getline(is, line)) throw InvalidArgument("truncated field data");
    std::istringstream row(line);
    double q = 0.0;
    for (std::size_t k = 0; k < h.grid.dims(); ++k) row >> q;
    if (!(row >> f[i])) throw InvalidArgument("malformed field row: " + line);
  }
  return {std::move(f), h.time};
}

ComplexRecord read_complex_field(std::istream& is) {
  Header h = read_header(is);
  if (h.kind != "complex") throw InvalidArgument("expected complex field, found kind=" + h.kind);
  ComplexField f(h.grid);
  std::string line;
  for (std::size_t i = 0; i < h.grid.size(); ++i) {
    if (!std::getline(is, line)) throw InvalidArgument("truncated field data");
    std::istringstream row(line);
    double q = 0.0, re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < h.grid.dims(); ++k) row >> q;
    if (!(row >> re >> im)) throw InvalidArgument("malformed field row: " + line);
    f[i] = {re, im};
  }
  return {std::move(f), h.time};
}

}  // namespace emq
