#include "sqn/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "sqn/error.hpp"

namespace sqn {

const char* to_string(Stability s) { return s == Stability::Stable ? "stable" : "unstable"; }

namespace {

struct Residual {
  double gamma2;
  double omega_0c;
  double drive;
  const StarkShift& stark;

  double detuning(double n) const { return omega_0c - stark(n); }
  double operator()(double n) const {
    const double ws = detuning(n);
    return n * (gamma2 + 4.0 * ws * ws) - drive;
  }
};

struct Sample {
  double n;
  double f;
};

// Refines a discrete extremum of F located between n_a and n_b.
Sample refine_extremum(const Residual& F, double n_a, double n_b, bool is_max) {
  const double sign = is_max ? -1.0 : 1.0;
  auto objective = [&](double u) { return sign * F(std::exp(u)); };
  const auto [u, value] = boost::math::tools::brent_find_minima(
      objective, std::log(n_a), std::log(n_b), std::numeric_limits<double>::digits / 2);
  return {std::exp(u), sign * value};
}

}  // namespace

double steady_residual(const DeviceParams& dev, const DriveParams& drive, double n_ph) {
  const StarkShift stark(dev, drive.omega_0);
  const Residual F{dev.gamma_c() * dev.gamma_c(), drive.omega_0 - dev.omega_c(),
                   drive_strength(dev, drive.flux), stark};
  return F(n_ph);
}

std::array<double, 2> root_bracket(const DeviceParams& dev, const DriveParams& drive) {
  const StarkShift stark(dev, drive.omega_0);
  const double omega_0c = drive.omega_0 - dev.omega_c();
  // ω_s(n) ∈ [ω_0c − S_max, ω_0c − S_min]
  const double max_ws = std::max(std::abs(omega_0c - stark.max_value()),
                                 std::abs(omega_0c - stark.min_value()));
  const double d = drive_strength(dev, drive.flux);
  const double g2 = dev.gamma_c() * dev.gamma_c();
  return {d / (g2 + 4.0 * max_ws * max_ws), d / g2};
}

cplx steady_field(const DeviceParams& dev, const DriveParams& drive, double omega_s) {
  const double x0 = std::sqrt(drive.flux);
  const cplx num(0.0, -x0 * input_coupling(dev));
  return num / cplx(omega_s, 0.5 * dev.gamma_c());
}

BranchSet solve_steady(const DeviceParams& dev, const DriveParams& drive, const ScanOptions& opts) {
  const StarkShift stark(dev, drive.omega_0);
  const double omega_0c = drive.omega_0 - dev.omega_c();
  const Residual F{dev.gamma_c() * dev.gamma_c(), omega_0c, drive_strength(dev, drive.flux),
                   stark};

  std::vector<double> roots;
  std::vector<bool> degenerate;

  if (drive.flux == 0.0) {
    roots.push_back(0.0);
    degenerate.push_back(false);
  } else if (stark.empty() && !opts.n_min && !opts.n_max) {
    roots.push_back(F.drive / (F.gamma2 + 4.0 * omega_0c * omega_0c));
    degenerate.push_back(false);
  } else {
    const auto bracket = root_bracket(dev, drive);
    // widen by a few ulps' worth so rounding cannot push a root outside
    const double lo = opts.n_min.value_or(bracket[0] * (1.0 - 1e-9));
    const double hi = opts.n_max.value_or(bracket[1] * (1.0 + 1e-9));
    if (!(lo > 0.0 && hi > lo)) throw ModelError("invalid photon-number scan bounds");
    const int m = std::max(opts.points, 3);

    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(m) + 8);
    const double log_ratio = std::log(hi / lo);
    for (int i = 0; i < m; ++i) {
      const double n = (i == m - 1) ? hi : lo * std::exp(log_ratio * i / (m - 1));
      samples.push_back({n, F(n)});
    }

    std::vector<Sample> extrema;
    for (int i = 1; i + 1 < m; ++i) {
      const double left = samples[i].f - samples[i - 1].f;
      const double right = samples[i + 1].f - samples[i].f;
      if (left * right < 0.0) {
        extrema.push_back(refine_extremum(F, samples[i - 1].n, samples[i + 1].n, left > 0.0));
      }
    }
    samples.insert(samples.end(), extrema.begin(), extrema.end());
    std::sort(samples.begin(), samples.end(),
              [](const Sample& a, const Sample& b) { return a.n < b.n; });

    const auto tol = [&](double a, double b) { return std::abs(b - a) <= opts.rel_tol * b; };
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
      const auto& a = samples[i];
      const auto& b = samples[i + 1];
      if (a.f == 0.0) {
        if (roots.empty() || roots.back() != a.n) {
          roots.push_back(a.n);
          degenerate.push_back(false);
        }
      } else if (b.f != 0.0 && std::signbit(a.f) != std::signbit(b.f)) {
        const auto [x0, x1] = boost::math::tools::bisect(F, a.n, b.n, tol);
        roots.push_back(0.5 * (x0 + x1));
        degenerate.push_back(false);
      }
    }
    if (!samples.empty() && samples.back().f == 0.0 &&
        (roots.empty() || roots.back() != samples.back().n)) {
      roots.push_back(samples.back().n);
      degenerate.push_back(false);
    }

    // Tangential (double) roots at a fold: F touches zero without changing sign.
    for (const auto& e : extrema) {
      if (std::abs(e.f) > 1e-13 * F.drive) continue;
      const bool near = std::any_of(roots.begin(), roots.end(), [&](double r) {
        return std::abs(r - e.n) <= 1e-6 * e.n;
      });
      if (!near) {
        roots.push_back(e.n);
        degenerate.push_back(true);
      }
    }
    if (roots.empty()) throw NoRoot(lo, hi);

    // Merge coincident roots; a merged pair is a fold.
    std::vector<std::size_t> order(roots.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return roots[i] < roots[j]; });
    std::vector<double> merged;
    std::vector<bool> merged_degenerate;
    for (auto i : order) {
      if (!merged.empty() && std::abs(roots[i] - merged.back()) <= 1e-9 * roots[i]) {
        merged_degenerate.back() = true;
        continue;
      }
      merged.push_back(roots[i]);
      merged_degenerate.push_back(degenerate[i]);
    }
    roots = std::move(merged);
    degenerate = std::move(merged_degenerate);
  }

  BranchSet out;
  out.branches.reserve(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    SteadyBranch br;
    br.n_ph = roots[i];
    br.omega_s = F.detuning(roots[i]);
    br.psi = steady_field(dev, drive, br.omega_s);
    br.stability = degenerate[i] ? Stability::Unstable : classify_stability(dev, drive, br);
    out.branches.push_back(br);
  }
  return out;
}

std::array<cplx, 2> Linearization::eigenvalues() const {
  // [[a, b], [b*, a*]]: trace 2 Re a, determinant |a|² − |b|²
  const cplx root = std::sqrt(cplx(std::norm(b) - a.imag() * a.imag(), 0.0));
  return {a.real() + root, a.real() - root};
}

Linearization linearize(const DeviceParams& dev, double omega_0, cplx psi) {
  const StarkShift stark(dev, omega_0);
  const double n = std::norm(psi);
  const double ws = omega_0 - dev.omega_c() - stark(n);
  const double slope = stark.derivative(n, 1);
  const cplx i(0.0, 1.0);
  return {i * (ws - slope * n) - 0.5 * dev.gamma_c(), -i * slope * psi * psi};
}

Stability classify_stability(const DeviceParams& dev, const DriveParams& drive,
                             const SteadyBranch& branch) {
  const auto ev = linearize(dev, drive.omega_0, branch.psi).eigenvalues();
  return (ev[0].real() < 0.0 && ev[1].real() < 0.0) ? Stability::Stable : Stability::Unstable;
}

double power_for_photon_number(const DeviceParams& dev, double omega_0, double n_ph) {
  const double ws = (omega_0 - dev.omega_c()) - StarkShift(dev, omega_0)(n_ph);
  const double g = dev.gamma_c();
  return 0.5 * constants::hbar * dev.q_c() * n_ph * (g * g + 4.0 * ws * ws);
}

}  // namespace sqn
