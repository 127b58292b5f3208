#include "emq/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "emq/errors.hpp"

namespace emq {

std::string to_string(Boundary b) {
  switch (b) {
    case Boundary::periodic: return "periodic";
    case Boundary::reflecting: return "reflecting";
    case Boundary::absorbing: return "absorbing";
  }
  return "unknown";
}

Boundary boundary_from_string(const std::string& name) {
  if (name == "periodic") return Boundary::periodic;
  if (name == "reflecting") return Boundary::reflecting;
  if (name == "absorbing") return Boundary::absorbing;
  throw InvalidArgument("unknown boundary kind '" + name + "'");
}

Grid::Grid(std::initializer_list<AxisSpec> axes) : Grid(std::span<const AxisSpec>(axes.begin(), axes.size())) {}

Grid::Grid(std::span<const AxisSpec> axes) {
  if (axes.empty() || axes.size() > kMaxDims) {
    throw InvalidArgument("grid must have between 1 and 3 dimensions");
  }
  dims_ = axes.size();
  size_ = 1;
  for (std::size_t k = 0; k < dims_; ++k) {
    const AxisSpec& a = axes[k];
    if (!(a.upper > a.lower)) {
      std::ostringstream msg;
      msg << "degenerate extent on axis " << k << ": upper (" << a.upper << ") <= lower (" << a.lower << ")";
      throw InvalidArgument(msg.str());
    }
    if (a.points < kMinPoints) {
      std::ostringstream msg;
      msg << "axis " << k << " has " << a.points << " points; at least " << kMinPoints << " required";
      throw InvalidArgument(msg.str());
    }
    axes_[k] = a;
    const double n = static_cast<double>(a.points);
    spacing_[k] = a.boundary == Boundary::periodic ? (a.upper - a.lower) / n : (a.upper - a.lower) / (n - 1.0);
    stride_[k] = size_;
    size_ *= a.points;
  }
}

Grid build_grid(std::span<const AxisSpec> axes) { return Grid(axes); }

double Grid::extent(std::size_t k) const {
  return axes_[k].boundary == Boundary::periodic ? spacing_[k] * static_cast<double>(axes_[k].points)
                                                 : spacing_[k] * static_cast<double>(axes_[k].points - 1);
}

bool Grid::fully_periodic() const {
  for (std::size_t k = 0; k < dims_; ++k)
    if (axes_[k].boundary != Boundary::periodic) return false;
  return true;
}

bool Grid::any_periodic() const {
  for (std::size_t k = 0; k < dims_; ++k)
    if (axes_[k].boundary == Boundary::periodic) return true;
  return false;
}

Index3 Grid::unflatten(std::size_t flat) const {
  Index3 idx{0, 0, 0};
  for (std::size_t k = 0; k < dims_; ++k) {
    idx[k] = flat % axes_[k].points;
    flat /= axes_[k].points;
  }
  return idx;
}

std::size_t Grid::flatten(const Index3& idx) const {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < dims_; ++k) flat += idx[k] * stride_[k];
  return flat;
}

Point3 Grid::position(std::size_t flat) const {
  const Index3 idx = unflatten(flat);
  Point3 q{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < dims_; ++k) q[k] = coordinate(k, idx[k]);
  return q;
}

std::optional<std::size_t> Grid::neighbor(std::size_t flat, std::size_t k, int dir) const {
  const std::size_t n = axes_[k].points;
  const std::size_t i = (flat / stride_[k]) % n;
  const std::size_t base = flat - i * stride_[k];
  if (dir > 0) {
    if (i + 1 < n) return base + (i + 1) * stride_[k];
    if (axes_[k].boundary == Boundary::periodic) return base;
    return std::nullopt;
  }
  if (i > 0) return base + (i - 1) * stride_[k];
  if (axes_[k].boundary == Boundary::periodic) return base + (n - 1) * stride_[k];
  return std::nullopt;
}

double Grid::axis_weight(std::size_t k, std::size_t i) const {
  if (axes_[k].boundary == Boundary::periodic) return spacing_[k];
  return (i == 0 || i + 1 == axes_[k].points) ? 0.5 * spacing_[k] : spacing_[k];
}

double Grid::weight(std::size_t flat) const {
  double w = 1.0;
  for (std::size_t k = 0; k < dims_; ++k) {
    w *= axis_weight(k, flat % axes_[k].points);
    flat /= axes_[k].points;
  }
  return w;
}

double Grid::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < dims_; ++k) v *= extent(k);
  return v;
}

bool Grid::operator==(const Grid& other) const {
  if (dims_ != other.dims_) return false;
  for (std::size_t k = 0; k < dims_; ++k)
    if (!(axes_[k] == other.axes_[k])) return false;
  return true;
}

template <class T>
BasicField<T>::BasicField(const Grid& grid, std::vector<T> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw InvalidArgument("field has " + std::to_string(values_.size()) + " values for a grid of " +
                          std::to_string(grid_.size()) + " points");
  }
}

template class BasicField<double>;
template class BasicField<std::complex<double>>;

VectorField::VectorField(const Grid& grid) : grid_(grid) {
  components_.reserve(grid.dims());
  for (std::size_t k = 0; k < grid.dims(); ++k) components_.emplace_back(grid);
}

double VectorField::norm_at(std::size_t flat) const {
  double s = 0.0;
  for (const auto& c : components_) s += c[flat] * c[flat];
  return std::sqrt(s);
}

double VectorField::max_norm() const {
  double m = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i) m = std::max(m, norm_at(i));
  return m;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw InvalidArgument(std::string("mismatched grid in ") + what);
}

namespace {

template <class T>
BasicField<T> axis_derivative(const BasicField<T>& f, std::size_t k, int order) {
  const Grid& g = f.grid();
  if (k >= g.dims()) throw InvalidArgument("derivative axis out of range");
  const std::size_t n = g.points(k);
  const std::size_t s = g.stride(k);
  const double h = g.spacing(k);
  const Boundary bc = g.boundary(k);
  BasicField<T> out(g);
  const auto v = f.values();

  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    const std::size_t i = (flat / s) % n;
    const std::size_t base = flat - i * s;
    auto at = [&](std::size_t j) -> const T& { return v[base + j * s]; };
    T result{};
    if (i > 0 && i + 1 < n) {
      result = order == 1 ? (at(i + 1) - at(i - 1)) / (2.0 * h) : (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h);
    } else if (bc == Boundary::periodic) {
      const std::size_t ip = (i + 1) % n;
      const std::size_t im = (i + n - 1) % n;
      result = order == 1 ? (at(ip) - at(im)) / (2.0 * h) : (at(ip) - 2.0 * at(i) + at(im)) / (h * h);
    } else if (bc == Boundary::reflecting) {
      // mirror ghost: value at -1 equals value at +1
      const std::size_t in = i == 0 ? 1 : n - 2;
      result = order == 1 ? T{} : 2.0 * (at(in) - at(i)) / (h * h);
    } else {
      const bool left = i == 0;
      const std::size_t i1 = left ? 1 : n - 2;
      const std::size_t i2 = left ? 2 : n - 3;
      const std::size_t i3 = left ? 3 : n - 4;
      // written in differences from at(i) so constants differentiate to exactly zero
      const T d1 = at(i1) - at(i), d2 = at(i2) - at(i), d3 = at(i3) - at(i);
      if (order == 1) {
        const double sign = left ? 1.0 : -1.0;
        result = sign * (4.0 * d1 - d2) / (2.0 * h);
      } else {
        result = (-5.0 * d1 + 4.0 * d2 - d3) / (h * h);
      }
    }
    out[flat] = result;
  }
  return out;
}

template <class T>
BasicField<T> axis_sum_laplacian(const BasicField<T>& f) {
  BasicField<T> out(f.grid());
  for (std::size_t k = 0; k < f.grid().dims(); ++k) {
    const auto d2 = axis_derivative(f, k, 2);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d2[i];
  }
  return out;
}

template <class T>
T quadrature(const BasicField<T>& f) {
  const Grid& g = f.grid();
  T sum{};
  for (std::size_t i = 0; i < g.size(); ++i) sum += g.weight(i) * f[i];
  return sum;
}

}  // namespace

ScalarField partial(const ScalarField& f, std::size_t k) { return axis_derivative(f, k, 1); }
ComplexField partial(const ComplexField& f, std::size_t k) { return axis_derivative(f, k, 1); }
ScalarField second_partial(const ScalarField& f, std::size_t k) { return axis_derivative(f, k, 2); }
ComplexField second_partial(const ComplexField& f, std::size_t k) { return axis_derivative(f, k, 2); }

VectorField gradient(const ScalarField& f) {
  VectorField out(f.grid());
  for (std::size_t k = 0; k < f.grid().dims(); ++k) out.component(k) = partial(f, k);
  return out;
}

ScalarField laplacian(const ScalarField& f) { return axis_sum_laplacian(f); }
ComplexField laplacian(const ComplexField& f) { return axis_sum_laplacian(f); }

ScalarField divergence(const VectorField& v) {
  ScalarField out(v.grid());
  for (std::size_t k = 0; k < v.dims(); ++k) {
    const auto d = partial(v.component(k), k);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  return out;
}

ScalarField curl_magnitude(const VectorField& v) {
  const Grid& g = v.grid();
  ScalarField out(g);
  if (g.dims() == 2) {
    const auto a = partial(v.component(1), 0);
    const auto b = partial(v.component(0), 1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  } else if (g.dims() == 3) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t j = (c + 1) % 3;
      const std::size_t k = (c + 2) % 3;
      const auto a = partial(v.component(k), j);
      const auto b = partial(v.component(j), k);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], std::abs(a[i] - b[i]));
    }
  }
  return out;
}

double integrate(const ScalarField& f) { return quadrature(f); }
std::complex<double> integrate(const ComplexField& f) { return quadrature(f); }

double integrate_product(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "integrate_product");
  const Grid& g = a.grid();
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) sum += g.weight(i) * a[i] * b[i];
  return sum;
}

namespace {
template <class Op>
ScalarField zip(const ScalarField& a, const ScalarField& b, Op op, const char* what) {
  require_same_grid(a.grid(), b.grid(), what);
  ScalarField out(a.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}
}  // namespace

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, std::plus<>{}, "operator+");
}
ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, std::minus<>{}, "operator-");
}
ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, std::multiplies<>{}, "operator*");
}
ScalarField operator*(double s, const ScalarField& a) {
  ScalarField out(a.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * a[i];
  return out;
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double x : f.values()) m = std::max(m, std::abs(x));
  return m;
}

double l1_distance(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "l1_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.grid().weight(i) * std::abs(a[i] - b[i]);
  return s;
}

double l2_distance(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "l2_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += a.grid().weight(i) * d * d;
  }
  return std::sqrt(s);
}

void normalize_density(ScalarField& p) {
  const double mass = integrate(p);
  if (!(mass > 0.0) || !std::isfinite(mass)) throw NumericalError("density has non-positive or non-finite mass");
  for (double& x : p.values()) x /= mass;
}

}  // namespace emq
