#pragma once

#include <cstdint>
#include <vector>

#include "mechmix/generator.hpp"
#include "mechmix/linalg.hpp"

namespace mechmix {

// Per-dimension strictly monotone warp plus index permutation — the
// indeterminacy class a perfectly identifying first stage leaves behind:
//   zhat_i = h_i(z_{perm[i]}) + eta_i,   h_i(z) = a_i z + b_i tanh(c_i z) + s_i.
// Strict monotonicity requires |a_i| > |b_i * c_i| (the sign of a_i sets the
// direction). h is smooth with closed-form first and second derivatives.
struct EncoderDistortion {
  std::vector<int> permutation;
  Vector a;
  Vector b;
  Vector c;
  Vector shift;
  double noise_sigma = 0.0;

  int dim() const { return static_cast<int>(permutation.size()); }
  void validate() const;  // throws InvalidDistortionError

  double warp(int i, double z) const;
  double warp_derivative(int i, double z) const;
  double warp_second_derivative(int i, double z) const;

  static EncoderDistortion identity(int d);
  // Default severity: a in [0.7, 1.3], b in [-0.3, 0.3], c in [0.5, 2],
  // shift in [-0.5, 0.5], random permutation. With `decreasing` set, every
  // warp direction is flipped (a -> -a).
  static EncoderDistortion random(int d, std::uint64_t seed,
                                  double noise_sigma = 0.0,
                                  bool decreasing = false);
};

// Applies the distortion row by row: out(t, i) = h_i(z(t, perm[i])) + noise.
Matrix encode(const Matrix& latents, const EncoderDistortion& distortion,
              std::uint64_t seed);

// Exact layer-by-layer inverse of the observation map; with noiseless
// observations the result equals the true latents within 1e-8.
Matrix oracle_encode(const Matrix& observations, const MixingMap& map,
                     double tol = 1e-6);

// Pipeline-level encoder handle: either the oracle (identity in latent
// space) or a fixed distortion shared across every dataset of a run. An
// optional per-dimension scale standardizes the representation the way a
// trained encoder's unit-variance prior does; rescaling is itself a
// component-wise monotone map, so it stays inside the indeterminacy class.
// Representation noise is added after scaling, in standardized units.
struct EncoderModel {
  enum class Kind { kOracle, kDistorted };
  Kind kind = Kind::kOracle;
  EncoderDistortion distortion;
  Vector scale;  // empty: no standardization

  static EncoderModel oracle() { return EncoderModel{}; }
  static EncoderModel distorted(EncoderDistortion d);

  // Sets scale to 1/std per dimension, estimated from a pilot sample in the
  // unscaled representation.
  void standardize_from(const Matrix& pilot_latents, std::uint64_t seed);

  Matrix apply(const Matrix& latents, std::uint64_t seed) const;
};

}  // namespace mechmix
