#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emq {

enum class Boundary { periodic, reflecting, absorbing };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& name);

struct AxisSpec {
  double lower = 0.0;
  double upper = 1.0;
  std::size_t points = 0;
  Boundary boundary = Boundary::periodic;

  bool operator==(const AxisSpec&) const = default;
};

using Index3 = std::array<std::size_t, 3>;
using Point3 = std::array<double, 3>;

/// Regular tensor-product grid over K <= 3 configuration coordinates.
///
/// Periodic axes hold n points with spacing (upper - lower) / n; the point at
/// `upper` is identified with index 0 and is not stored. Non-periodic axes
/// include both endpoints, spacing (upper - lower) / (n - 1).
/// Points are flattened with axis 0 varying fastest.
class Grid {
 public:
  static constexpr std::size_t kMaxDims = 3;
  static constexpr std::size_t kMinPoints = 4;

  Grid() = default;
  explicit Grid(std::span<const AxisSpec> axes);
  Grid(std::initializer_list<AxisSpec> axes);

  std::size_t dims() const { return dims_; }
  std::size_t size() const { return size_; }
  const AxisSpec& axis(std::size_t k) const { return axes_[k]; }
  std::size_t points(std::size_t k) const { return axes_[k].points; }
  double spacing(std::size_t k) const { return spacing_[k]; }
  Boundary boundary(std::size_t k) const { return axes_[k].boundary; }
  std::size_t stride(std::size_t k) const { return stride_[k]; }
  /// Length of the axis as seen by the quadrature (periodic: n*h).
  double extent(std::size_t k) const;
  bool fully_periodic() const;
  bool any_periodic() const;

  double coordinate(std::size_t k, std::size_t i) const {
    return axes_[k].lower + static_cast<double>(i) * spacing_[k];
  }
  Index3 unflatten(std::size_t flat) const;
  std::size_t flatten(const Index3& idx) const;
  Point3 position(std::size_t flat) const;

  /// Neighbor one step along axis k in direction `dir` (+1 or -1); empty when
  /// the step leaves a non-periodic axis.
  std::optional<std::size_t> neighbor(std::size_t flat, std::size_t k, int dir) const;

  /// Trapezoid weight per axis (rectangle on periodic axes).
  double axis_weight(std::size_t k, std::size_t i) const;
  double weight(std::size_t flat) const;
  /// Total quadrature volume of the domain.
  double volume() const;

  bool operator==(const Grid& other) const;

 private:
  std::size_t dims_ = 0;
  std::size_t size_ = 0;
  std::array<AxisSpec, kMaxDims> axes_{};
  std::array<double, kMaxDims> spacing_{};
  std::array<std::size_t, kMaxDims> stride_{};
};

Grid build_grid(std::span<const AxisSpec> axes);

template <class T>
class BasicField {
 public:
  using value_type = T;

  BasicField() = default;
  explicit BasicField(const Grid& grid, T fill = T{}) : grid_(grid), values_(grid.size(), fill) {}
  BasicField(const Grid& grid, std::vector<T> values);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const T> values() const { return values_; }
  std::span<T> values() { return values_; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& operator[](std::size_t i) { return values_[i]; }

  /// Fills with f(position) for every grid point.
  template <class Fn>
  static BasicField from_function(const Grid& grid, Fn&& f) {
    BasicField out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out.values_[i] = f(grid.position(i));
    return out;
  }

 private:
  Grid grid_;
  std::vector<T> values_;
};

using ScalarField = BasicField<double>;
using ComplexField = BasicField<std::complex<double>>;

/// One scalar component per grid axis.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Grid& grid);

  const Grid& grid() const { return grid_; }
  std::size_t dims() const { return components_.size(); }
  const ScalarField& component(std::size_t k) const { return components_[k]; }
  ScalarField& component(std::size_t k) { return components_[k]; }
  double norm_at(std::size_t flat) const;
  double max_norm() const;

 private:
  Grid grid_;
  std::vector<ScalarField> components_;
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);

/// Second-order central derivative along one axis. Periodic axes wrap,
/// reflecting axes mirror (zero derivative at the wall), absorbing axes use
/// one-sided second-order stencils.
ScalarField partial(const ScalarField& f, std::size_t k);
ComplexField partial(const ComplexField& f, std::size_t k);
ScalarField second_partial(const ScalarField& f, std::size_t k);
ComplexField second_partial(const ComplexField& f, std::size_t k);

VectorField gradient(const ScalarField& f);
ScalarField laplacian(const ScalarField& f);
ComplexField laplacian(const ComplexField& f);
ScalarField divergence(const VectorField& v);
/// z-component of the discrete curl for K = 2; maximum |curl| over all
/// components for K = 3. Zero for K = 1.
ScalarField curl_magnitude(const VectorField& v);

double integrate(const ScalarField& f);
std::complex<double> integrate(const ComplexField& f);

/// Sum-of-products quadrature, avoids building the product field.
double integrate_product(const ScalarField& a, const ScalarField& b);

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double s, const ScalarField& a);

double max_abs(const ScalarField& f);
double l1_distance(const ScalarField& a, const ScalarField& b);
double l2_distance(const ScalarField& a, const ScalarField& b);

/// Normalizes in place so that integrate(p) == 1; throws if the mass is not positive.
void normalize_density(ScalarField& p);

}  // namespace emq
