#pragma once

namespace fedsim::tol {

// Finite-difference gradient checks.
inline constexpr double kFiniteDiffStep = 1e-5;
inline constexpr double kGradRelative = 1e-4;
inline constexpr double kGradAbsoluteFloor = 1e-6;

// Algebraic identities that only differ by rounding.
inline constexpr double kIdentity = 1e-12;
inline constexpr double kControlVariate = 1e-10;

// Minimum eigenvalue accepted for a generated quadratic component.
inline constexpr double kSpdEpsilon = 1e-6;

// Optimality of the closed-form quadratic optimum.
inline constexpr double kQpStationarity = 1e-8;

}  // namespace fedsim::tol
