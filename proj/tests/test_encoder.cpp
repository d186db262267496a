#include <cmath>

#include "doctest.h"
#include "mechmix/encoder.hpp"
#include "mechmix/metrics.hpp"
#include "mechmix/rng.hpp"

using namespace mechmix;

namespace {

// Inverts a strictly monotone scalar warp by bisection.
double invert_warp(const EncoderDistortion& dist, int i, double target) {
  double lo = -50.0, hi = 50.0;
  const bool increasing = dist.a(i) > 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = dist.warp(i, mid);
    if ((v < target) == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Matrix random_latents(int t_len, int d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(t_len, d);
  for (int t = 0; t < t_len; ++t)
    for (int i = 0; i < d; ++i) m(t, i) = rng.next_normal();
  return m;
}

}  // namespace

TEST_CASE("identity distortion is a no-op") {
  const Matrix z = random_latents(20, 4, 1);
  const Matrix zhat = encode(z, EncoderDistortion::identity(4), 9);
  CHECK((zhat - z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pure permutation reorders columns") {
  const Matrix z = random_latents(15, 3, 2);
  EncoderDistortion dist = EncoderDistortion::identity(3);
  dist.permutation = {2, 0, 1};
  const Matrix zhat = encode(z, dist, 9);
  CHECK((zhat.col(0) - z.col(2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((zhat.col(1) - z.col(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((zhat.col(2) - z.col(1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("warped encodings invert by per-dimension bisection") {
  const int d = 6;
  const Matrix z = random_latents(50, d, 3);
  const auto dist = EncoderDistortion::random(d, 77);
  const Matrix zhat = encode(z, dist, 9);
  for (int t = 0; t < z.rows(); ++t) {
    for (int i = 0; i < d; ++i) {
      const double recovered = invert_warp(dist, i, zhat(t, i));
      CHECK(std::abs(recovered - z(t, dist.permutation[i])) <= 1e-8);
    }
  }
}

TEST_CASE("monotonicity violations are rejected") {
  EncoderDistortion dist = EncoderDistortion::identity(2);
  dist.a(0) = 0.1;
  dist.b(0) = 0.5;
  dist.c(0) = 1.0;  // |b*c| = 0.5 > a
  CHECK_THROWS_AS(dist.validate(), InvalidDistortionError);
  CHECK_THROWS_AS(encode(Matrix::Zero(3, 2), dist, 1), InvalidDistortionError);
}

TEST_CASE("warp derivatives are strictly positive (finite differences)") {
  Rng rng(4);
  for (std::uint64_t seed : {11u, 22u, 33u}) {
    const auto dist = EncoderDistortion::random(5, seed);
    for (int i = 0; i < 5; ++i) {
      for (int rep = 0; rep < 100; ++rep) {
        const double z = rng.next_uniform(-5.0, 5.0);
        const double h = 1e-6;
        const double fd =
            (dist.warp(i, z + h) - dist.warp(i, z - h)) / (2.0 * h);
        CHECK(fd > 0.0);
        CHECK(fd == doctest::Approx(dist.warp_derivative(i, z)).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("decreasing warps have strictly negative derivatives") {
  const auto dist = EncoderDistortion::random(4, 5, 0.0, /*decreasing=*/true);
  Rng rng(6);
  for (int i = 0; i < 4; ++i) {
    for (int rep = 0; rep < 50; ++rep) {
      CHECK(dist.warp_derivative(i, rng.next_uniform(-4.0, 4.0)) < 0.0);
    }
  }
}

TEST_CASE("noise-free encode is deterministic") {
  const Matrix z = random_latents(30, 4, 7);
  const auto dist = EncoderDistortion::random(4, 123);
  const Matrix a = encode(z, dist, 1);
  const Matrix b = encode(z, dist, 2);  // different seed, zero noise
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spearman MCC of any noise-free distortion is exactly 1") {
  const Matrix z = random_latents(60, 5, 8);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto dist = EncoderDistortion::random(5, seed);
    const Matrix zhat = encode(z, dist, 9);
    const auto result = mcc(zhat, z, CorrelationKind::kSpearmanAbs);
    CHECK(result.score == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("oracle encoder recovers latents through the observation map") {
  const Matrix z = random_latents(40, 8, 10);
  const MixingMap map(8, 16, 3, 55);
  const Matrix obs = map.apply(z);
  const Matrix zhat = oracle_encode(obs, map);
  CHECK((zhat - z).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("oracle encoder flags off-manifold observations") {
  const Matrix z = random_latents(5, 4, 11);
  const MixingMap map(4, 8, 3, 56);
  Matrix obs = map.apply(z);
  obs(1, 6) += 1e-2;
  CHECK_THROWS_AS(oracle_encode(obs, map), InversionError);
}

TEST_CASE("encoder model applies representation noise from its stream") {
  const Matrix z = random_latents(25, 4, 12);
  auto dist = EncoderDistortion::random(4, 321, 0.2);
  const auto model = EncoderModel::distorted(dist);
  const Matrix a = model.apply(z, 100);
  const Matrix b = model.apply(z, 100);
  const Matrix c = model.apply(z, 101);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}
