#pragma once

#include <stdexcept>
#include <string>

namespace mechmix {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed arguments: shape mismatches, non-finite values, off-simplex
// weights, bad windows or grids.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Requested more mechanisms than the latent dimension supports (K > d + 1).
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Basis matrix is rank deficient (smallest singular value below the floor).
class DegenerateBasisError : public Error {
 public:
  DegenerateBasisError(const std::string& what, double sigma_min)
      : Error(what), sigma_min_(sigma_min) {}
  double sigma_min() const { return sigma_min_; }

 private:
  double sigma_min_;
};

// Encoder warp parameters violate strict monotonicity.
class InvalidDistortionError : public Error {
 public:
  using Error::Error;
};

// Observation lies off the image manifold of the mixing map.
class InversionError : public Error {
 public:
  InversionError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// A correlation was requested on a zero-variance column.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

// Two-point calibration got coincident boundary conditions.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

// Quantity is undefined for the given inputs (e.g. zero denominator in a
// ratio diagnostic).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Bad experiment configuration (unknown key, out-of-range field).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mechmix
