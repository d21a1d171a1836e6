// One PASS/FAIL line per acceptance criterion, with wall time. Lines starting
// with "note:" are supplementary checks and never change the exit status.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "random_device.hpp"
#include "sqn/bistability.hpp"
#include "sqn/commands.hpp"
#include "sqn/dynamics.hpp"
#include "sqn/fitting.hpp"
#include "sqn/io.hpp"
#include "sqn/response.hpp"
#include "sqn/steady_state.hpp"
#include "support.hpp"

using namespace sqn;
using namespace sqn::testing;
using io::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

double watts_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

// flux putting the branch at n photons (single-valued drives only)
DriveParams drive_for_photons(const DeviceParams& dev, double omega_0, double n) {
  const double w = power_for_photon_number(dev, omega_0, n);
  return DriveParams(omega_0, w / (constants::hbar * dev.omega_c()));
}

// ---- 1 ------------------------------------------------------------------

Outcome low_power_dip() {
  const auto dev = reference_device();
  const double expect = kFc + 10.0 * std::pow(25e6, 2) / 1.78e9;
  const DriveParams drive(angular(7.74328e9), power_to_flux(-200.0, 0.0, dev.omega_c()));
  const auto dip = bogoliubov_dip(dev, drive, solve_steady(dev, drive).lowest());
  const double err = std::abs(dip.f_dip - expect);
  const double shift = dip.f_dip - kFc;
  const double vs_quoted = std::abs(shift - 3.4e6) / 3.4e6;
  Outcome o;
  o.pass = err < 1e3 && vs_quoted < 0.05;
  o.detail = fmt::format("f_dip = {:.6f} GHz, |f_dip - {:.6f} GHz| = {:.0f} Hz, shift {:.4f} MHz ({:.1f}% from 3.4)",
                         dip.f_dip * 1e-9, expect * 1e-9, err, shift * 1e-6, 100.0 * vs_quoted);
  return o;
}

// ---- 2 ------------------------------------------------------------------

double high_power_gap(const DeviceParams& dev, double omega_0, double n) {
  const auto drive = drive_for_photons(dev, omega_0, n);
  const auto roots = solve_steady(dev, drive);
  const auto& br = roots.highest();
  return std::abs(bogoliubov_dip(dev, drive, br).f_dip - hertz(dev.omega_c()));
}

Outcome high_power_dip() {
  const auto dev = reference_device();
  const double w0 = angular(7.745e9);
  Outcome o;
  double worst = 0.0;
  for (const double n : {1e8, 3e8, 1e9}) worst = std::max(worst, high_power_gap(dev, w0, n));
  const double at_1e8 = high_power_gap(dev, w0, 1e8);
  o.pass = worst < 1e3;
  o.detail = fmt::format("|f_dip - f_c| = {:.0f} Hz at n = 1e8, worst over n in [1e8, 1e9] {:.0f} Hz", at_1e8, worst);
  // photon number where the gap first drops under 1 kHz (gap falls as n^-1/2)
  double lo = 1e8, hi = 1e12;
  for (int i = 0; i < 60; ++i) {
    const double mid = std::sqrt(lo * hi);
    (high_power_gap(dev, w0, mid) < 1e3 ? hi : lo) = mid;
  }
  o.notes.push_back(fmt::format("gap reaches 1 kHz at n = {:.2e}; at n = 1e10 it is {:.0f} Hz", hi,
                                high_power_gap(dev, w0, 1e10)));
  return o;
}

// ---- 3 ------------------------------------------------------------------

Outcome response_peak() {
  std::mt19937_64 rng(2024);
  int checked = 0, bad = 0, plateaus = 0, pole_bad = 0;
  double worst_excess = 0.0, worst_pole = 0.0;
  int recovered = 0;  // misses that land within tolerance once γ is cut 100x
  while (checked < 200) {
    const auto c = random_case(rng);
    for (const auto& br : solve_steady(c.device, c.drive).branches) {
      if (br.stability != Stability::Stable || checked >= 200) continue;
      const auto dip = bogoliubov_dip(c.device, c.drive, br);
      if (dip.plateau || dip.singular_detuning) {
        ++plateaus;
        continue;
      }
      ++checked;
      const double fp = hertz(c.drive.omega_0);
      const double off = dip.f_dip - fp;
      // dip side of the pump only; the idler image sits on the other side
      auto f = linspace(fp + 0.02 * off, fp + 3.0 * off, 40001);
      if (off < 0.0) std::reverse(f.begin(), f.end());
      const auto spec = linear_response_spectrum(c.device, c.drive, br, f, 1.0);
      const auto peak = std::max_element(spec.points.begin(), spec.points.end(),
                                         [](const auto& a, const auto& b) { return a.magnitude < b.magnitude; });
      const double step = std::abs(f[1] - f[0]);
      const double tol = std::max(step, 1e3 + 1e-4 * std::abs(off));
      const double err = std::abs(peak->f_probe - dip.f_dip);
      if (err > tol) {
        ++bad;
        // same n, hence the same ω_s and closed-form dip, with a hundredth of the damping
        const auto quiet = c.device.with_gamma(c.device.gamma_c() / 100.0);
        const DriveParams qd(c.drive.omega_0, power_for_photon_number(quiet, c.drive.omega_0, br.n_ph) /
                                                  (constants::hbar * quiet.omega_c()));
        const auto roots = solve_steady(quiet, qd);
        const auto near = std::min_element(roots.branches.begin(), roots.branches.end(), [&](const auto& a, const auto& b) {
          return std::abs(std::log(a.n_ph / br.n_ph)) < std::abs(std::log(b.n_ph / br.n_ph));
        });
        const auto qs = linear_response_spectrum(quiet, qd, *near, f, 1.0);
        const auto qp = std::max_element(qs.points.begin(), qs.points.end(),
                                         [](const auto& a, const auto& b) { return a.magnitude < b.magnitude; });
        if (std::abs(qp->f_probe - bogoliubov_dip(quiet, qd, *near).f_dip) <= tol) ++recovered;
      }
      worst_excess = std::max(worst_excess, err / tol);

      const auto lin = linearize(c.device, c.drive.omega_0, br.psi);
      const double nu = angular(off);
      const cplx i(0.0, 1.0);
      const cplx det = (i * lin.a.imag() + i * nu) * (-i * lin.a.imag() + i * nu) - std::norm(lin.b);
      const double rel = std::abs(det) / (lin.a.imag() * lin.a.imag() + std::norm(lin.b));
      worst_pole = std::max(worst_pole, rel);
      if (rel > 1e-6) ++pole_bad;
    }
  }
  Outcome o;
  o.pass = bad == 0;
  o.detail = fmt::format("{} of {} spectrum peaks outside tolerance, worst {:.1f}x the tolerance ({} plateau branches skipped)",
                         bad, checked, worst_excess, plateaus);
  o.notes.push_back(fmt::format("{}: closed-form dip is the undamped pole of the linearization in {} of {} (worst |det| {:.1e})",
                                pole_bad == 0 ? "PASS" : "FAIL", checked - pole_bad, checked, worst_pole));
  o.notes.push_back(fmt::format("{}: {} of {} misses fall within tolerance when γ is cut 100x at the same n",
                                recovered == bad ? "PASS" : "FAIL", recovered, bad));
  return o;
}

// ---- 4 ------------------------------------------------------------------

// Euclidean distance from (x, y) to the separatrix
double boundary_distance(double x, double y) {
  auto d2 = [&](double s) {
    const auto p = boundary_point(s);
    return (p.x - x) * (p.x - x) + (p.y - y) * (p.y - y);
  };
  // σ covers x up to ~250, far past the grid
  const int n = 4000;
  double best_s = 1.0, best = d2(1.0);
  for (int i = 1; i <= n; ++i) {
    const double s = std::pow(10.0, 1.0 * i / n);
    const double v = d2(s);
    if (v < best) best = v, best_s = s;
  }
  double lo = std::max(1.0, best_s / std::pow(10.0, 1.0 / n)), hi = best_s * std::pow(10.0, 1.0 / n);
  for (int i = 0; i < 100; ++i) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    (d2(a) < d2(b) ? hi : lo) = (d2(a) < d2(b) ? b : a);
  }
  return std::sqrt(std::min(best, d2(0.5 * (lo + hi))));
}

Outcome phase_diagram() {
  const auto xs = linspace(0.12, 6.0, 50);
  const auto ys = linspace(0.04, 2.0, 50);
  int compared = 0, skipped = 0, bad = 0, bistable = 0;
  std::string first_bad;
  for (const double x : xs) {
    for (const double y : ys) {
      if (boundary_distance(x, y) <= 1e-3) {
        ++skipped;
        continue;
      }
      ++compared;
      const Region analytic = classify_xy(x, y);
      const Region oracle = brute_force_region(x, y).region;
      if (analytic == Region::Bistable) ++bistable;
      if (analytic != oracle) {
        ++bad;
        if (first_bad.empty()) first_bad = fmt::format(" first at ({:.4f}, {:.4f})", x, y);
      }
    }
  }
  const double s = std::sqrt(3.0);
  const auto p = boundary_point(s);
  const double ex = std::abs(p.x - 1.5 * std::sqrt(3.0));
  const double ey = std::abs(p.y - 1.0);
  const double el = std::abs(boundary_leakage(1.5 * std::sqrt(3.0)) - 1.0);
  Outcome o;
  o.pass = bad == 0 && ex < 1e-9 && ey < 1e-9 && el < 1e-9 && bistable > 0;
  o.detail = fmt::format("{} disagreements over {} cells ({} bistable, {} within 1e-3 skipped){}; "
                         "boundary at (3√3/2, 1) off by ({:.1e}, {:.1e}), y(3√3/2) off by {:.1e}",
                         bad, compared, bistable, skipped, first_bad, ex, ey, el);
  return o;
}

// ---- 5 ------------------------------------------------------------------

// Upper fold from continuation: follow the lowest branch upward on a grid,
// then bisect the last interval on whether the lower root pair still exists.
double continuation_fold_watts(const DeviceParams& dev, double omega_0) {
  const double k = 4.0 * std::pow(dev.qubits()[0].g, 2) / std::pow(omega_0 - dev.qubits()[0].omega, 2);
  const double lo = watts_to_dbm(power_for_photon_number(dev, omega_0, 1e-4 / k));
  const double hi = watts_to_dbm(power_for_photon_number(dev, omega_0, 1e3 / k));
  const auto grid = linspace(lo, hi, 2001);
  const double to_flux = 1.0 / (constants::hbar * dev.omega_c());
  const auto up = quasi_static_sweep(dev, omega_0, grid, 0.0, SweepDirection::Up);
  std::size_t j = 1;
  while (j < up.size() && !up[j].jumped) ++j;
  if (j == up.size()) return std::nan("");
  auto multi = [&](double dbm) {
    return solve_steady(dev, DriveParams(omega_0, dbm_to_watts(dbm) * to_flux)).size() >= 2;
  };
  double a = grid[j - 1], b = grid[j];
  if (!multi(a)) return std::nan("");
  while (b - a > 1e-10) {
    const double m = 0.5 * (a + b);
    (multi(m) ? a : b) = m;
  }
  return dbm_to_watts(0.5 * (a + b));
}

Outcome critical_point() {
  std::mt19937_64 rng(77);
  int draws = 0, bad = 0;
  double worst = 0.0;
  while (draws < 20) {
    const auto c = random_case(rng);
    if (classify(c.device, c.drive.omega_0).region != Region::Bistable) continue;
    const auto cp = find_critical_point(c.device, c.drive.omega_0);
    if (!cp) {
      ++bad, ++draws;
      continue;
    }
    ++draws;
    const double p = continuation_fold_watts(c.device, c.drive.omega_0);
    const double rel = std::isfinite(p) ? std::abs(cp->p_crit - p) / p : INFINITY;
    worst = std::max(worst, rel);
    if (!(rel < 1e-6)) ++bad;
  }
  Outcome o;
  o.pass = bad == 0;
  o.detail = fmt::format("{} of {} bistable draws off, worst relative gap {:.1e}", bad, draws, worst);
  return o;
}

// ---- 6 ------------------------------------------------------------------

struct LoopCheck {
  bool loop_ok = false;
  bool outside_zero = false;
  std::string detail;
};

LoopCheck check_loop(const DeviceParams& dev) {
  const double w0 = angular(7.745e9);
  const auto grid = linspace(-130.0, -60.0, 701);
  const auto loop = hysteresis_loop(dev, w0, grid, 0.0);
  const auto cp = find_critical_point(dev, w0);
  LoopCheck r;
  std::string crit = "none";
  if (cp) crit = fmt::format("{:.3f} dBm", watts_to_dbm(cp->p_crit));
  r.loop_ok = loop.loop_area > 0.0 && cp && loop.up_jump_dbm && loop.down_jump_dbm &&
              *loop.down_jump_dbm < watts_to_dbm(cp->p_crit) && watts_to_dbm(cp->p_crit) <= *loop.up_jump_dbm;
  double outside = 0.0;
  for (const double f : {7.740e9, 7.742e9, 7.7429e9, 7.7466e9, 7.748e9, 7.755e9}) {
    outside = std::max(outside, hysteresis_loop(dev, angular(f), grid, 0.0).loop_area);
  }
  r.outside_zero = outside == 0.0;
  r.detail = fmt::format("area {:.4g} Hz·dB at 7.745 GHz, jumps up {} / down {}, p_crit {}; largest area outside window {}",
                         loop.loop_area, loop.up_jump_dbm ? fmt::format("{:.1f}", *loop.up_jump_dbm) : "none",
                         loop.down_jump_dbm ? fmt::format("{:.1f}", *loop.down_jump_dbm) : "none", crit, outside);
  return r;
}

Outcome hysteresis() {
  const auto reference = check_loop(reference_device());
  Outcome o;
  o.pass = reference.loop_ok && reference.outside_zero;
  o.detail = "γ = 2π·3.2 MHz: " + reference.detail;
  const auto narrow = check_loop(narrow_device());
  o.notes.push_back(fmt::format("{}: γ = ω_c/25000: {}", narrow.loop_ok && narrow.outside_zero ? "PASS" : "FAIL",
                                narrow.detail));
  return o;
}

// ---- 7 ------------------------------------------------------------------

struct Kick {
  DeviceParams dev;
  double omega_0;
  double flux;
  cplx target;
  cplx start;
};

double kick_error(const Kick& k, double gamma_times) {
  IntegrateOptions opts;
  opts.tol = 1e-11;
  const double t1 = gamma_times / k.dev.gamma_c();
  opts.sample_times = {t1};
  const auto traj = integrate(k.dev, k.omega_0, ConstantDrive{std::sqrt(k.flux)}, k.start, 0.0, t1, opts);
  return std::abs(traj.psi.back() - k.target) / std::abs(k.target);
}

Outcome dynamics_return() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<Kick> kicks;
  struct Middle {
    DeviceParams dev;
    DriveParams drive;
    BranchSet roots;
  };
  std::vector<Middle> middles;
  for (int d = 0; d < 100; ++d) {
    const auto c = random_case(rng);
    const auto roots = solve_steady(c.device, c.drive);
    for (const auto& br : roots.branches) {
      if (br.stability != Stability::Stable) continue;
      kicks.push_back({c.device, c.drive.omega_0, c.drive.flux, br.psi,
                       br.psi * (1.0 + 0.01 * std::polar(1.0, phase(rng)))});
    }
    if (roots.size() == 3) middles.push_back({c.device, c.drive, roots});
  }
  // top up with bistable draws so the middle-branch check always has cases
  while (middles.size() < 10) {
    const auto c = random_case(rng);
    if (classify(c.device, c.drive.omega_0).region != Region::Bistable) continue;
    const auto f = find_folds(c.device, c.drive.omega_0);
    const double w = std::sqrt(f->p_jump * f->p_return);
    const DriveParams drive(c.drive.omega_0, w / (constants::hbar * c.device.omega_c()));
    auto roots = solve_steady(c.device, drive);
    if (roots.size() == 3) middles.push_back({c.device, drive, std::move(roots)});
  }

  int bad10 = 0, bad30 = 0;
  double worst10 = 0.0, worst30 = 0.0, worst_vs_linear = 0.0;
  for (const auto& k : kicks) {
    const double e10 = kick_error(k, 10.0);
    // what the slowest linear mode alone leaves of the 1% kick
    const auto ev = linearize(k.dev, k.omega_0, k.target).eigenvalues();
    const double slow = std::min(std::abs(ev[0].real()), std::abs(ev[1].real()));
    worst_vs_linear = std::max(worst_vs_linear, e10 / (0.01 * std::exp(-slow * 10.0 / k.dev.gamma_c())));
    const double e30 = kick_error(k, 30.0);
    worst10 = std::max(worst10, e10);
    worst30 = std::max(worst30, e30);
    if (!(e10 < 1e-5)) ++bad10;
    if (!(e30 < 1e-5)) ++bad30;
  }

  int middle_bad = 0, middle_runs = 0;
  for (const auto& m : middles) {
    for (const double eps : {-0.01, 0.01}) {
      ++middle_runs;
      IntegrateOptions opts;
      opts.tol = 1e-10;
      // escape and settle times come from the linear rates, which collapse near a fold
      const auto rate = [&](const SteadyBranch& b) {
        const auto ev = linearize(m.dev, m.drive.omega_0, b.psi).eigenvalues();
        return std::min(std::abs(ev[0].real()), std::abs(ev[1].real()));
      };
      const double slow = std::min({rate(m.roots[0]), rate(m.roots[1]), rate(m.roots[2])});
      const double t1 = std::max(1000.0 / m.dev.gamma_c(), 60.0 / slow);
      opts.sample_times = {t1};
      const auto traj = integrate(m.dev, m.drive.omega_0, ConstantDrive{std::sqrt(m.drive.flux)},
                                  m.roots[1].psi * (1.0 + eps), 0.0, t1, opts);
      const cplx end = traj.psi.back();
      const bool low = std::abs(end - m.roots.lowest().psi) < 1e-3 * std::abs(m.roots.lowest().psi);
      const bool high = std::abs(end - m.roots.highest().psi) < 1e-3 * std::abs(m.roots.highest().psi);
      if (!low && !high) ++middle_bad;
    }
  }

  Outcome o;
  o.pass = bad10 == 0 && middle_bad == 0;
  o.detail = fmt::format("at 10/γ: {} of {} kicked branches above 1e-5 (worst {:.2e}); middle roots: {} of {} runs "
                         "ended off the outer branches",
                         bad10, kicks.size(), worst10, middle_bad, middle_runs);
  o.notes.push_back(fmt::format("{}: at 30/γ {} of {} above 1e-5 (worst {:.2e}); e^-5 floor from γ/2 relaxation is {:.1e}",
                                bad30 == 0 ? "PASS" : "FAIL", bad30, kicks.size(), worst30, 0.01 * std::exp(-5.0)));
  o.notes.push_back(fmt::format("residual at 10/γ is at most {:.2f}x the 1% kick decayed at the slowest linear rate",
                                worst_vs_linear));
  return o;
}

// ---- 8 ------------------------------------------------------------------

Outcome idler_symmetry() {
  // exact mirror over random branches
  std::mt19937_64 rng(5);
  int mirrored = 0, unmirrored = 0;
  for (int i = 0; i < 200; ++i) {
    const auto c = random_case(rng);
    for (const auto& br : solve_steady(c.device, c.drive).branches) {
      const auto dip = bogoliubov_dip(c.device, c.drive, br);
      (dip.f_dip + dip.f_idler == 2.0 * hertz(c.drive.omega_0) ? mirrored : unmirrored)++;
    }
  }

  const auto dev = reference_device();
  const double w0 = angular(7.745e9);
  const DriveParams drive(w0, power_to_flux(-100.0, 0.0, dev.omega_c()));
  const auto br = solve_steady(dev, drive).lowest();
  const double x0 = std::sqrt(drive.flux);
  const cplx xp = 1e-3 * x0;
  const auto dip = bogoliubov_dip(dev, drive, br);
  const double nu = angular(dip.f_dip - hertz(w0));
  const auto lin = probe_amplitudes(dev, drive, br.psi, nu, xp);

  const double period = constants::two_pi / std::abs(nu);
  const double settle = std::ceil(40.0 / dev.gamma_c() / period) * period;
  const int periods = 60, per_period = 64;
  IntegrateOptions opts;
  opts.tol = 1e-11;
  for (int i = 0; i < periods * per_period; ++i)
    opts.sample_times.push_back(settle + periods * period * i / (periods * per_period));
  const auto traj = integrate(dev, w0, ProbeToneDrive{x0, xp, nu}, br.psi, 0.0, settle + periods * period, opts);
  const cplx u = spectral_line(traj, br.psi, nu, settle);
  const cplx v = spectral_line(traj, br.psi, -nu, settle);
  const double ratio = std::abs(v) / std::abs(u);
  const double want = std::abs(lin.v) / std::abs(lin.u);
  const double ratio_err = std::abs(ratio - want) / want;
  double stray = 0.0;
  for (const double m : {0.0, 2.0, -2.0, 3.0, -3.0})
    stray = std::max(stray, std::abs(spectral_line(traj, br.psi, m * nu, settle)) / std::abs(u));

  Outcome o;
  o.pass = unmirrored == 0 && mirrored > 0 && ratio_err < 0.01 && stray < 0.01;
  o.detail = fmt::format("f_dip + f_idler = 2 f_pump exactly for {} of {} branches; probe at the dip: |v|/|u| = {:.5f} "
                         "vs {:.5f} linear ({:.2e} relative), strongest other line {:.1e} of |u|",
                         mirrored, mirrored + unmirrored, ratio, want, ratio_err, stray);
  return o;
}

// ---- 9 ------------------------------------------------------------------

double notch_param(const NotchModel& m, int j) {
  switch (j) {
    case 0: return m.a;
    case 1: return m.f_r;
    case 2: return m.q_l;
    case 3: return m.q_c_mag;
    default: return m.phi;
  }
}

SpectrumData synth_notch(const NotchModel& m, double sigma, unsigned seed) {
  SpectrumData d;
  d.f = linspace(m.f_r - 12e6, m.f_r + 12e6, 801);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (const double f : d.f) {
    const cplx noise = sigma > 0.0 ? cplx(n01(rng), n01(rng)) * (sigma / std::sqrt(2.0)) : cplx(0.0);
    d.s33.push_back(notch_s33(m, f, ImagConvention::Engineering) + noise);
  }
  return d;
}

Outcome notch_fit() {
  const NotchModel truth{1.574, 7.743538e9, 4682.71, 24530.93, -1.054};
  const auto noisy = synth_notch(truth, 0.005, 42);
  const auto fit = fit_notch(noisy, initial_guess_notch(noisy));
  double worst_z = 0.0;
  for (int j = 0; j < 5; ++j)
    worst_z = std::max(worst_z, std::abs(notch_param(fit.model, j) - notch_param(truth, j)) / fit.fit.sigmas[j]);
  const auto clean = synth_notch(truth, 0.0, 0);
  const auto exact = fit_notch(clean, initial_guess_notch(clean));
  double worst_rel = 0.0;
  for (int j = 0; j < 5; ++j)
    worst_rel = std::max(worst_rel, std::abs(notch_param(exact.model, j) / notch_param(truth, j) - 1.0));
  Outcome o;
  o.pass = fit.fit.converged && exact.fit.converged && worst_z < 3.0 && fit.fit.rmse_raw >= 0.004 &&
           fit.fit.rmse_raw <= 0.007 && worst_rel < 1e-8;
  o.detail = fmt::format("noisy: worst |Δ|/σ = {:.2f}, RMSE {:.5f}, Q_i {:.1f}; noiseless: worst relative error {:.1e}",
                         worst_z, fit.fit.rmse_raw, fit.q_i, worst_rel);
  return o;
}

// ---- 10 -----------------------------------------------------------------

Outcome field_shift() {
  const auto dev = reference_device();
  const double w0 = angular(7.74328e9);
  const double shift =
      hertz(dressed_resonance(apply_magnetic_field(dev, 0.489, angular(200e6)), w0, 0.0) - dressed_resonance(dev, w0, 0.0));
  Outcome o;
  o.pass = std::abs(shift) >= 0.19e6 && std::abs(shift) <= 0.21e6;
  o.detail = fmt::format("ω_r(0) moves by {:+.4f} MHz at 0.489 G", shift * 1e-6);
  return o;
}

// ---- 11 -----------------------------------------------------------------

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sqn_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& cmd, const json& cfg, const fs::path& out, unsigned threads,
            std::optional<fs::path> data = std::nullopt) {
  cli::Options opts;
  opts.out_dir = out;
  opts.threads = threads;
  opts.data = std::move(data);
  std::ostringstream err;
  const int code = cli::run(cmd, cfg, opts, err);
  if (code != 0) fmt::print("    {} failed: {}", cmd, err.str());
  return code;
}

Outcome round_trip() {
  json truth = {{"device",
                 {{"f_c_ghz", 7.743},
                  {"q_c", kQc},
                  {"gamma_c_mhz", 3.2},
                  {"qubits", json::array({{{"g_mhz", 25.0}, {"delta_ghz", 1.78}, {"n", 10}}})}}},
                {"drive",
                 {{"f_pump_ghz", json::array({7.7433, 7.744, 7.745, 7.746, 7.747, 7.748})},
                  {"power_dbm", {{"start", -110.0}, {"stop", -50.0}, {"points", 50}}},
                  {"attenuation_db", 10.0}}}};
  const auto a = scratch("gen_a");
  const auto b = scratch("gen_b");
  const auto c = scratch("gen_c");
  Outcome o;
  if (run_cli("dip-sweep", truth, a, 1) || run_cli("dip-sweep", truth, b, 1) || run_cli("dip-sweep", truth, c, 4)) {
    o.detail = "dip-sweep failed";
    return o;
  }
  int files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    ++files;
    if (slurp(a / name) != slurp(b / name) || slurp(a / name) != slurp(c / name)) ++differ;
  }

  json start = truth;
  start["device"]["f_c_ghz"] = 7.7432;
  start["device"]["gamma_c_mhz"] = 3.7;
  start["device"]["qubits"][0]["g_mhz"] = 23.0;
  start["device"]["qubits"][0]["delta_ghz"] = 1.85;
  start["drive"]["attenuation_db"] = 11.5;
  const auto f1 = scratch("fit_a");
  const auto f2 = scratch("fit_b");
  if (run_cli("fit-dips", start, f1, 1, a / "dip_curves.csv") || run_cli("fit-dips", start, f2, 1, a / "dip_curves.csv")) {
    o.detail = "fit-dips failed";
    return o;
  }
  for (const auto& e : fs::directory_iterator(f1)) {
    ++files;
    if (slurp(e.path()) != slurp(f2 / e.path().filename())) ++differ;
  }
  const json rep = io::load_json(f1 / "fit_report.json");
  const auto& p = rep["params"];
  const std::vector<std::pair<const char*, double>> want = {
      {"f_c_ghz", 7.743}, {"gamma_c_mhz", 3.2}, {"g_mhz", 25.0}, {"delta_ghz", 1.78}, {"attenuation_db", 10.0}};
  double worst = 0.0;
  for (const auto& [key, v] : want) worst = std::max(worst, std::abs(p[key].get<double>() / v - 1.0));
  o.pass = rep["converged"].get<bool>() && worst < 1e-6 && differ == 0 && files > 0;
  o.detail = fmt::format("worst relative parameter error {:.1e}; {} of {} output files differ across repeated runs "
                         "and thread counts",
                         worst, differ, files);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"low-power dip limit", low_power_dip},
      {"high-power dip limit", high_power_dip},
      {"closed-form dip vs linear-response peak", response_peak},
      {"bistability phase diagram", phase_diagram},
      {"critical point vs continuation fold", critical_point},
      {"hysteresis loop", hysteresis},
      {"return to stable branches", dynamics_return},
      {"idler symmetry", idler_symmetry},
      {"notch fit recovery", notch_fit},
      {"magnetic-field shift", field_shift},
      {"determinism and dip-fit round trip", round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    fmt::print("{} {:2d} {}: {} [{:.2f} s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail, secs);
    for (const auto& n : o.notes) fmt::print("     note: {}\n", n);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria pass\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
