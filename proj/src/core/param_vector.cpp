#include "fedsim/core/param_vector.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "fedsim/error.hpp"

namespace fedsim::core {

void ParamVector::require_same_dim(const ParamVector& other) const {
  if (other.dim() != dim()) {
    throw ShapeError("parameter dimension mismatch: " + std::to_string(dim()) + " vs " +
                     std::to_string(other.dim()));
  }
}

ParamVector& ParamVector::operator+=(const ParamVector& other) {
  require_same_dim(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
  require_same_dim(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

ParamVector& ParamVector::axpy(double scale, const ParamVector& other) {
  require_same_dim(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other.values_[i];
  return *this;
}

double ParamVector::dot(const ParamVector& other) const {
  require_same_dim(other);
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other.values_[i];
  return s;
}

double ParamVector::norm() const { return std::sqrt(dot(*this)); }

bool ParamVector::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

ParamVector operator+(ParamVector lhs, const ParamVector& rhs) { return lhs += rhs; }
ParamVector operator-(ParamVector lhs, const ParamVector& rhs) { return lhs -= rhs; }
ParamVector operator*(double scale, ParamVector v) { return v *= scale; }

bool bitwise_equal(const ParamVector& a, const ParamVector& b) {
  if (a.dim() != b.dim()) return false;
  return a.dim() == 0 ||
         std::memcmp(a.raw().data(), b.raw().data(), a.dim() * sizeof(double)) == 0;
}

}  // namespace fedsim::core
