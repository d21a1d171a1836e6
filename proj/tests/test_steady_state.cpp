#include <doctest.h>

#include <cmath>
#include <random>

#include "random_device.hpp"
#include "sqn/bistability.hpp"
#include "sqn/error.hpp"
#include "sqn/steady_state.hpp"
#include "support.hpp"

using namespace sqn;
using namespace sqn::testing;

namespace {

cplx field_rhs(const DeviceParams& dev, const DriveParams& drive, cplx psi) {
  const double ws = drive.omega_0 - dressed_resonance(dev, drive.omega_0, std::norm(psi));
  return cplx(-0.5 * dev.gamma_c(), ws) * psi - input_coupling(dev) * std::sqrt(drive.flux);
}

}  // namespace

TEST_CASE("single root matches the mpmath oracle") {
  const auto dev = reference_device();
  const DriveParams drive(angular(7.745e9), power_to_flux(-100.0, 0.0, dev.omega_c()));
  const auto roots = solve_steady(dev, drive);
  REQUIRE(roots.size() == 1);
  CHECK(rel_diff(roots[0].n_ph, 110.77254645408510) < 1e-11);
  CHECK(rel_diff(hertz(roots[0].omega_s), -1.3636901310721639e6) < 1e-11);
  CHECK(std::abs(roots[0].psi - cplx(-8.0101763092126349, 6.8271239881383252)) < 1e-9);
  CHECK(roots[0].stability == Stability::Stable);
  // the field is a fixed point of the equation of motion
  CHECK(std::abs(field_rhs(dev, drive, roots[0].psi)) < 1e-9 * input_coupling(dev) * std::sqrt(drive.flux));
}

TEST_CASE("linear resonator has the Lorentzian closed form") {
  const auto dev = DeviceParams(angular(7e9), angular(2e6), 1e4, std::nullopt, {});
  const DriveParams drive(angular(7.001e9), 1e12);
  const auto roots = solve_steady(dev, drive);
  REQUIRE(roots.size() == 1);
  const double w = drive.omega_0 - dev.omega_c();
  const double expect = drive_strength(dev, drive.flux) / (dev.gamma_c() * dev.gamma_c() + 4 * w * w);
  CHECK(rel_diff(roots[0].n_ph, expect) < 1e-14);
}

TEST_CASE("zero drive gives the empty resonator") {
  const auto roots = solve_steady(reference_device(), DriveParams(angular(7.745e9), 0.0));
  REQUIRE(roots.size() == 1);
  CHECK(roots[0].n_ph == 0.0);
  CHECK(roots[0].stability == Stability::Stable);
}

TEST_CASE("explicit scan bounds without a root raise NoRoot") {
  const auto dev = reference_device();
  const DriveParams drive(angular(7.745e9), power_to_flux(-100.0, 0.0, dev.omega_c()));
  ScanOptions opts;
  opts.n_min = 1e5;
  opts.n_max = 1e6;
  CHECK_THROWS_AS(solve_steady(dev, drive, opts), NoRoot);
}

TEST_CASE("three roots inside the fold window, middle one unstable") {
  const auto dev = narrow_device();
  const double w0 = angular(7.745e9);
  const auto folds = find_folds(dev, w0);
  REQUIRE(folds.has_value());
  const double p = std::sqrt(folds->p_jump * folds->p_return);
  const DriveParams drive(w0, p / (constants::hbar * dev.omega_c()));
  const auto roots = solve_steady(dev, drive);
  REQUIRE(roots.size() == 3);
  CHECK(roots[0].stability == Stability::Stable);
  CHECK(roots[1].stability == Stability::Unstable);
  CHECK(roots[2].stability == Stability::Stable);
  CHECK(roots[0].n_ph < folds->n_jump);
  CHECK(roots[1].n_ph > folds->n_jump);
  CHECK(roots[1].n_ph < folds->n_return);
  CHECK(roots[2].n_ph > folds->n_return);
}

TEST_CASE("root completeness against the dense oracle over random devices") {
  std::mt19937_64 rng(20240611);
  int multi = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_case(rng, i % 4 != 0);
    const auto roots = solve_steady(c.device, c.drive);
    const int oracle = root_count_oracle(c.device, c.drive, 200'000);
    INFO("draw " << i);
    CHECK(static_cast<int>(roots.size()) == oracle);
    const auto bracket = root_bracket(c.device, c.drive);
    const double d = drive_strength(c.device, c.drive.flux);
    for (const auto& r : roots.branches) {
      CHECK(r.n_ph >= bracket[0] * (1 - 1e-9));
      CHECK(r.n_ph <= bracket[1] * (1 + 1e-9));
      CHECK(std::abs(steady_residual(c.device, c.drive, r.n_ph)) < 1e-9 * d);
    }
    if (roots.size() > 1) ++multi;
  }
  // the draw distribution has to exercise the multi-root path
  CHECK(multi > 20);
}

TEST_CASE("linearization matches finite differences of the field equation") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto c = random_case(rng, i % 2 == 0);
    const auto br = solve_steady(c.device, c.drive).lowest();
    const auto lin = linearize(c.device, c.drive.omega_0, br.psi);
    const double h = 1e-6 * std::abs(br.psi);
    for (const cplx dir : {cplx(1, 0), cplx(0, 1)}) {
      const cplx d = h * dir;
      const cplx fd = (field_rhs(c.device, c.drive, br.psi + d) - field_rhs(c.device, c.drive, br.psi - d)) / 2.0;
      const cplx lin_val = lin.a * d + lin.b * std::conj(d);
      CHECK(std::abs(fd - lin_val) < 1e-5 * std::abs(lin_val) + 1e-12);
    }
  }
}

TEST_CASE("stability coincides with a rising input power curve") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    const auto c = random_case(rng);
    for (const auto& br : solve_steady(c.device, c.drive).branches) {
      const double slope = power_derivative(c.device, c.drive.omega_0, br.n_ph, 1);
      const double scale = power_for_photon_number(c.device, c.drive.omega_0, br.n_ph) / br.n_ph;
      if (std::abs(slope) < 1e-6 * scale) continue;  // too close to a fold to call
      CHECK((br.stability == Stability::Stable) == (slope > 0.0));
    }
  }
}

TEST_CASE("eigenvalues of the linearization") {
  const Linearization lin{cplx(-1.0, 3.0), cplx(0.0, 2.0)};
  const auto ev = lin.eigenvalues();
  // trace 2 Re a, determinant |a|² − |b|²
  CHECK(std::abs((ev[0] + ev[1]) - cplx(-2.0, 0.0)) < 1e-14);
  CHECK(std::abs(ev[0] * ev[1] - cplx(10.0 - 4.0, 0.0)) < 1e-13);
}
