#include "mechmix/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mechmix/rng.hpp"

namespace mechmix {

void EncoderDistortion::validate() const {
  const int d = dim();
  if (d == 0) throw InvalidDistortionError("empty distortion");
  if (a.size() != d || b.size() != d || c.size() != d || shift.size() != d) {
    throw InvalidDistortionError("distortion parameter sizes disagree");
  }
  std::vector<char> seen(d, 0);
  for (int i : permutation) {
    if (i < 0 || i >= d || seen[i]) {
      throw InvalidDistortionError("invalid permutation");
    }
    seen[i] = 1;
  }
  for (int i = 0; i < d; ++i) {
    if (std::abs(a(i)) <= std::abs(b(i) * c(i))) {
      throw InvalidDistortionError(
          "warp not strictly monotone: need |a| > |b*c| at dim " +
          std::to_string(i));
    }
  }
  if (noise_sigma < 0.0) {
    throw InvalidDistortionError("representation noise must be >= 0");
  }
}

double EncoderDistortion::warp(int i, double z) const {
  return a(i) * z + b(i) * std::tanh(c(i) * z) + shift(i);
}

double EncoderDistortion::warp_derivative(int i, double z) const {
  const double t = std::tanh(c(i) * z);
  return a(i) + b(i) * c(i) * (1.0 - t * t);
}

double EncoderDistortion::warp_second_derivative(int i, double z) const {
  const double t = std::tanh(c(i) * z);
  return -2.0 * b(i) * c(i) * c(i) * t * (1.0 - t * t);
}

EncoderDistortion EncoderDistortion::identity(int d) {
  EncoderDistortion e;
  e.permutation.resize(d);
  std::iota(e.permutation.begin(), e.permutation.end(), 0);
  e.a = Vector::Ones(d);
  e.b = Vector::Zero(d);
  e.c = Vector::Ones(d);
  e.shift = Vector::Zero(d);
  return e;
}

EncoderDistortion EncoderDistortion::random(int d, std::uint64_t seed,
                                            double noise_sigma,
                                            bool decreasing) {
  Rng rng(Rng::substream(seed, {streams::kDistortion}));
  EncoderDistortion e;
  e.permutation.resize(d);
  std::iota(e.permutation.begin(), e.permutation.end(), 0);
  for (int i = d - 1; i > 0; --i) {
    std::swap(e.permutation[i], e.permutation[rng.next_below(i + 1)]);
  }
  e.a = Vector(d);
  e.b = Vector(d);
  e.c = Vector(d);
  e.shift = Vector(d);
  for (int i = 0; i < d; ++i) {
    e.a(i) = rng.next_uniform(0.7, 1.3) * (decreasing ? -1.0 : 1.0);
    e.b(i) = rng.next_uniform(-0.3, 0.3);
    e.c(i) = rng.next_uniform(0.5, 2.0);
    e.shift(i) = rng.next_uniform(-0.5, 0.5);
  }
  e.noise_sigma = noise_sigma;
  e.validate();
  return e;
}

Matrix encode(const Matrix& latents, const EncoderDistortion& distortion,
              std::uint64_t seed) {
  distortion.validate();
  const int d = distortion.dim();
  if (latents.cols() != d) {
    throw InvalidInputError("encode: latent dimension mismatch");
  }
  Rng noise_rng(Rng::substream(seed, {streams::kEncoderNoise}));
  Matrix out(latents.rows(), d);
  for (int t = 0; t < latents.rows(); ++t) {
    for (int i = 0; i < d; ++i) {
      double v = distortion.warp(i, latents(t, distortion.permutation[i]));
      if (distortion.noise_sigma > 0.0) {
        v += distortion.noise_sigma * noise_rng.next_normal();
      }
      out(t, i) = v;
    }
  }
  return out;
}

Matrix oracle_encode(const Matrix& observations, const MixingMap& map,
                     double tol) {
  return map.invert(observations, tol);
}

EncoderModel EncoderModel::distorted(EncoderDistortion d) {
  d.validate();
  EncoderModel m;
  m.kind = Kind::kDistorted;
  m.distortion = std::move(d);
  return m;
}

namespace {

Matrix apply_base(const EncoderModel& model, const Matrix& latents) {
  if (model.kind == EncoderModel::Kind::kOracle) return latents;
  EncoderDistortion noiseless = model.distortion;
  noiseless.noise_sigma = 0.0;
  return encode(latents, noiseless, 0);
}

}  // namespace

void EncoderModel::standardize_from(const Matrix& pilot_latents,
                                    std::uint64_t seed) {
  (void)seed;
  const Matrix pilot = apply_base(*this, pilot_latents);
  scale = Vector(pilot.cols());
  for (int j = 0; j < pilot.cols(); ++j) {
    const double mean = pilot.col(j).mean();
    const double var = (pilot.col(j).array() - mean).square().mean();
    scale(j) = var > 1e-18 ? 1.0 / std::sqrt(var) : 1.0;
  }
}

Matrix EncoderModel::apply(const Matrix& latents, std::uint64_t seed) const {
  Matrix out = apply_base(*this, latents);
  if (scale.size() > 0) {
    if (scale.size() != out.cols()) {
      throw InvalidInputError("encoder scale dimension mismatch");
    }
    out = out * scale.asDiagonal();
  }
  const double sigma =
      kind == Kind::kDistorted ? distortion.noise_sigma : 0.0;
  if (sigma > 0.0) {
    Rng rng(Rng::substream(seed, {streams::kEncoderNoise}));
    for (int t = 0; t < out.rows(); ++t)
      for (int j = 0; j < out.cols(); ++j)
        out(t, j) += sigma * rng.next_normal();
  }
  return out;
}

}  // namespace mechmix
