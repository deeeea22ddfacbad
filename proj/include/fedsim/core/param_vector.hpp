#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fedsim::core {

// Flat parameter vector; the unit every aggregation rule operates on.
// Arithmetic between vectors of different dimension throws ShapeError.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const std::vector<double>& raw() const { return values_; }

  ParamVector& operator+=(const ParamVector& other);
  ParamVector& operator-=(const ParamVector& other);
  ParamVector& operator*=(double scale);

  // this += scale * other
  ParamVector& axpy(double scale, const ParamVector& other);

  double dot(const ParamVector& other) const;
  double norm() const;
  bool all_finite() const;

  bool operator==(const ParamVector&) const = default;

 private:
  void require_same_dim(const ParamVector& other) const;

  std::vector<double> values_;
};

ParamVector operator+(ParamVector lhs, const ParamVector& rhs);
ParamVector operator-(ParamVector lhs, const ParamVector& rhs);
ParamVector operator*(double scale, ParamVector v);

// True when every coordinate has the same bit pattern (distinguishes -0.0).
bool bitwise_equal(const ParamVector& a, const ParamVector& b);

}  // namespace fedsim::core
