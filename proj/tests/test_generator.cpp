#include <cmath>
#include <set>

#include "doctest.h"
#include "mechmix/generator.hpp"
#include "mechmix/rng.hpp"

using namespace mechmix;

TEST_CASE("build_mechanism_set places distinct single-entry perturbations") {
  const auto ms = MechanismSet::build(8, 5, 0.5, 42);
  CHECK(ms.latent_dim() == 8);
  CHECK(ms.num_domains() == 5);
  std::set<std::pair<int, int>> cells;
  for (int k = 1; k < 5; ++k) {
    const Matrix& delta = ms.delta(k);
    CHECK(delta.norm() == doctest::Approx(0.5));
    int nonzeros = 0;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        if (delta(i, j) != 0.0) {
          ++nonzeros;
          CHECK(i != j);
          cells.insert({i, j});
        }
    CHECK(nonzeros == 1);
  }
  CHECK(cells.size() == 4);
  CHECK(ms.row_usage_report().all_ok);
}

TEST_CASE("build_mechanism_set minimal case d=2 K=2") {
  const auto ms = MechanismSet::build(2, 2, 0.1, 7);
  int nonzeros = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (ms.delta(1)(i, j) != 0.0) ++nonzeros;
  CHECK(nonzeros == 1);
}

TEST_CASE("build_mechanism_set enforces the capacity constraint") {
  CHECK_THROWS_AS(MechanismSet::build(8, 10, 0.5, 1), CapacityError);
  MechanismSetOptions opts;
  opts.allow_capacity_excess = true;
  CHECK_NOTHROW(MechanismSet::build(8, 10, 0.5, 1, opts));
}

TEST_CASE("base matrix is spectrally scaled") {
  const auto ms = MechanismSet::build(8, 5, 0.5, 9);
  const double norm = linalg::svd(ms.w_base()).singular_values(0);
  CHECK(norm == doctest::Approx(0.8));
}

TEST_CASE("effective_transition vertices and midpoint") {
  const auto ms = MechanismSet::build(6, 4, 0.5, 3);
  const int k = ms.num_domains();

  Vector baseline = Vector::Zero(k);
  baseline(0) = 1.0;
  CHECK((ms.effective_transition(baseline) - ms.w_base()).norm() <= 1e-14);

  for (int domain = 1; domain < k; ++domain) {
    Vector vertex = Vector::Zero(k);
    vertex(domain) = 1.0;
    const Matrix expected = ms.w_base() + ms.delta(domain);
    CHECK((ms.effective_transition(vertex) - expected).norm() <= 1e-14);
  }

  // Midpoint of two vertices equals the entrywise average of the vertex
  // matrices.
  Vector mid = Vector::Zero(k);
  mid(0) = 0.5;
  mid(1) = 0.5;
  Vector v0 = Vector::Zero(k), v1 = Vector::Zero(k);
  v0(0) = 1.0;
  v1(1) = 1.0;
  const Matrix avg =
      0.5 * (ms.effective_transition(v0) + ms.effective_transition(v1));
  CHECK((ms.effective_transition(mid) - avg).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("effective_transition is affine in alpha") {
  const auto ms = MechanismSet::build(5, 4, 0.3, 21);
  Rng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    Vector a(4), b(4);
    for (int i = 0; i < 4; ++i) a(i) = rng.next_double();
    for (int i = 0; i < 4; ++i) b(i) = rng.next_double();
    a /= a.sum();
    b /= b.sum();
    const double lam = rng.next_double();
    const Vector mix = lam * a + (1.0 - lam) * b;
    const Matrix lhs = ms.effective_transition(mix);
    const Matrix rhs = lam * ms.effective_transition(a) +
                       (1.0 - lam) * ms.effective_transition(b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("effective_transition rejects off-simplex weights") {
  const auto ms = MechanismSet::build(4, 3, 0.5, 5);
  Vector bad(3);
  bad << 0.5, 0.6, 0.2;
  CHECK_THROWS_AS(ms.effective_transition(bad), InvalidInputError);
}

TEST_CASE("simulate is deterministic and schedule-equivalent at vertices") {
  const auto ms = MechanismSet::build(8, 5, 0.5, 42);

  const auto one_hot = MixingSchedule::one_hot(50, 0, 5);
  const auto a = simulate(ms, one_hot, 0.0, 1234);
  const auto b = simulate(ms, one_hot, 0.0, 1234);
  CHECK((a.latents - b.latents).cwiseAbs().maxCoeff() == 0.0);

  // A constant schedule that happens to sit on the same vertex produces the
  // identical trajectory bit for bit.
  for (int domain : {0, 2, 4}) {
    Vector vertex = Vector::Zero(5);
    vertex(domain) = 1.0;
    const auto via_one_hot =
        simulate(ms, MixingSchedule::one_hot(50, domain, 5), 0.1, 99);
    const auto via_constant =
        simulate(ms, MixingSchedule::constant(50, vertex), 0.1, 99);
    CHECK((via_one_hot.latents - via_constant.latents).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("simulate latent variance within factor 5 of a Monte-Carlo rerun estimate") {
  const auto ms = MechanismSet::build(8, 5, 0.5, 42);
  const auto schedule =
      make_schedule(ScheduleFamily::kSequential, 50, 5, {0, 2, 4});

  auto pooled_variance = [](const Matrix& m) {
    const double mean = m.mean();
    return (m.array() - mean).square().mean();
  };

  const auto one = simulate(ms, schedule, 0.1, 4242);
  const double single = pooled_variance(one.latents);

  double acc = 0.0;
  const int reruns = 10000;
  for (int r = 0; r < reruns; ++r) {
    acc += pooled_variance(simulate(ms, schedule, 0.1, 50000 + r).latents);
  }
  const double mc = acc / reruns;
  CHECK(single <= 5.0 * mc);
  CHECK(single >= mc / 5.0);
}

TEST_CASE("make_schedule sequential two-domain ramp") {
  const auto s = make_schedule(ScheduleFamily::kSequential, 100, 2, {0, 1});
  CHECK(s.alphas(0, 0) == doctest::Approx(1.0));
  CHECK(s.alphas(99, 0) == doctest::Approx(0.0));
  CHECK(s.alphas(0, 1) == doctest::Approx(0.0));
  CHECK(s.alphas(99, 1) == doctest::Approx(1.0));
  // Monotone ramp crossing in the middle.
  int crossing = -1;
  for (int t = 0; t + 1 < 100; ++t) {
    CHECK(s.alphas(t + 1, 1) >= s.alphas(t, 1));
    if (crossing < 0 && s.alphas(t, 1) >= s.alphas(t, 0)) crossing = t;
  }
  CHECK(crossing >= 45);
  CHECK(crossing <= 55);
}

TEST_CASE("make_schedule oscillating has no dominant domain") {
  const auto s = make_schedule(ScheduleFamily::kOscillating, 200, 5, {0, 1, 2});
  double peak = 0.0;
  for (int t = 0; t < 200; ++t)
    peak = std::max(peak, s.alphas.row(t).maxCoeff());
  CHECK(peak <= 0.55);
}

TEST_CASE("every schedule family stays on the simplex") {
  for (auto family :
       {ScheduleFamily::kSequential, ScheduleFamily::kOverlapping,
        ScheduleFamily::kOscillating, ScheduleFamily::kLinear,
        ScheduleFamily::kSinusoidal}) {
    const auto s = make_schedule(family, 64, 6, {0, 2, 3, 5});
    for (int t = 0; t < s.length; ++t) {
      CHECK(std::abs(s.alphas.row(t).sum() - 1.0) <= 1e-12);
      CHECK(s.alphas.row(t).minCoeff() >= 0.0);
    }
    CHECK(std::isfinite(s.total_variation));
    // Inactive domains stay identically zero.
    CHECK(s.alphas.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.alphas.col(4).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("make_schedule rejects fewer than two active domains") {
  CHECK_THROWS_AS(make_schedule(ScheduleFamily::kSequential, 50, 5, {1}),
                  InvalidInputError);
}

TEST_CASE("overlapping peaks sit near 0.7") {
  const auto s =
      make_schedule(ScheduleFamily::kOverlapping, 300, 5, {0, 1, 2, 3, 4});
  double peak2 = 0.0;
  for (int t = 0; t < 300; ++t) peak2 = std::max(peak2, s.alphas(t, 2));
  CHECK(peak2 >= 0.55);
  CHECK(peak2 <= 0.85);
}

TEST_CASE("mixing map depth 0 pads with zeros and truncates back") {
  Rng rng(5);
  Matrix latents(10, 3);
  for (int t = 0; t < 10; ++t)
    for (int i = 0; i < 3; ++i) latents(t, i) = rng.next_normal();
  const MixingMap map(3, 6, 0, 11);
  const Matrix obs = map.apply(latents);
  CHECK(obs.rightCols(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK((map.invert(obs) - latents).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("square depth-1 mixing map matches its analytic inverse") {
  Rng rng(6);
  Matrix latents(40, 5);
  for (int t = 0; t < 40; ++t)
    for (int i = 0; i < 5; ++i) latents(t, i) = rng.next_normal();
  const MixingMap map(5, 5, 1, 13);
  const Matrix round = map.invert(map.apply(latents));
  CHECK((round - latents).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("deep rectangular mixing map is injective on samples") {
  Rng rng(7);
  Matrix latents(1000, 8);
  for (int t = 0; t < 1000; ++t)
    for (int i = 0; i < 8; ++i) latents(t, i) = rng.next_normal();
  const MixingMap map(8, 16, 3, 17);
  const Matrix obs = map.apply(latents);
  // Distinct inputs map to distinct outputs (spot check on pairs).
  for (int a = 0; a < 50; ++a) {
    for (int b = a + 1; b < 50; ++b) {
      CHECK((obs.row(a) - obs.row(b)).norm() > 1e-9);
    }
  }
  const Matrix round = map.invert(obs);
  CHECK((round - latents).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("mixing map flags off-manifold observations") {
  Rng rng(8);
  Matrix latents(5, 4);
  for (int t = 0; t < 5; ++t)
    for (int i = 0; i < 4; ++i) latents(t, i) = rng.next_normal();
  const MixingMap map(4, 8, 2, 19);
  Matrix obs = map.apply(latents);
  obs(2, 5) += 1e-2;
  CHECK_THROWS_AS(map.invert(obs), InversionError);
}

TEST_CASE("violation schedule injects exactly inside the trigger band") {
  const auto [schedule, rule] = make_violation_schedule(100, 3, 0.6);
  const auto ms = MechanismSet::build(8, 3, 0.5, 23);

  const ContextSet ctx = gaussian_contexts(8, 4, 0.5, 31);
  for (int t = 0; t < schedule.length; t += 7) {
    const Vector alpha = schedule.alpha_at(t);
    const Matrix with = one_step_ensemble(ms, alpha, ctx, 0.0, 1, &rule);
    const Matrix without = one_step_ensemble(ms, alpha, ctx, 0.0, 1, nullptr);
    const double diff = (with - without).cwiseAbs().maxCoeff();
    const bool should = alpha(1) > 0.3 && alpha(1) < 0.7;
    CHECK(should == (diff > 0.0));
  }

  // W(t) differs from the convex combination only at the injected edge.
  Vector mid = Vector::Zero(3);
  mid(0) = 0.5;
  mid(1) = 0.5;
  REQUIRE(rule.active_at(mid));

  // alpha_1 = 0 throughout leaves everything untouched.
  const auto quiet = MixingSchedule::one_hot(50, 0, 3);
  const auto with_rule = simulate(ms, quiet, 0.1, 55, nullptr, &rule);
  const auto without_rule = simulate(ms, quiet, 0.1, 55, nullptr, nullptr);
  CHECK((with_rule.latents - without_rule.latents).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("observation map injectivity holds on generated trajectories") {
  const auto ms = MechanismSet::build(8, 5, 0.5, 42);
  const auto schedule =
      make_schedule(ScheduleFamily::kOscillating, 80, 5, {0, 1, 2});
  const MixingMap map(8, 16, 3, 29);
  const auto bundle = simulate(ms, schedule, 0.1, 1001, &map);
  for (int a = 0; a < bundle.observations.rows(); ++a) {
    for (int b = a + 1; b < bundle.observations.rows(); ++b) {
      if ((bundle.latents.row(a) - bundle.latents.row(b)).norm() > 1e-12) {
        CHECK((bundle.observations.row(a) - bundle.observations.row(b)).norm() >
              0.0);
      }
    }
  }
}
