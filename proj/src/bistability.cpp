#include "sqn/bistability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "sqn/error.hpp"
#include "sqn/steady_state.hpp"

namespace sqn {

const char* to_string(Region r) {
  switch (r) {
    case Region::SingleValue: return "SV";
    case Region::Bistable: return "BS";
    case Region::Boundary: return "boundary";
  }
  return "?";
}

PhasePoint boundary_point(double s) {
  return {(3.0 * s + s * s * s) / 4.0, 0.5 * std::sqrt(3.0) * (s * s - 1.0) / s};
}

std::vector<PhasePoint> boundary_curve(std::span<const double> s_grid) {
  std::vector<PhasePoint> out;
  out.reserve(s_grid.size());
  for (double s : s_grid) {
    if (!(s >= 1.0)) throw ModelError("boundary parameter s must be at least 1");
    out.push_back(boundary_point(s));
  }
  return out;
}

double boundary_parameter(double x) {
  if (!(x > 1.0)) throw ModelError("separatrix exists only for x > 1");
  // s³ + 3s − 4x = 0 has a single real root (Cardano), polished by Newton.
  const double r = std::sqrt(4.0 * x * x + 1.0);
  double s = std::cbrt(2.0 * x + r) + std::cbrt(2.0 * x - r);
  for (int i = 0; i < 3; ++i) s -= (s * s * s + 3.0 * s - 4.0 * x) / (3.0 * s * s + 3.0);
  return s;
}

double boundary_leakage(double x) {
  if (x <= 1.0) return 0.0;
  return boundary_point(boundary_parameter(x)).y;
}

Region classify_xy(double x, double y) {
  if (x <= 1.0) return (x == 1.0 && y == 0.0) ? Region::Boundary : Region::SingleValue;
  const double y_b = boundary_leakage(x);
  if (std::abs(y - y_b) <= 1e-9 * std::max(1.0, y_b)) return Region::Boundary;
  return y < y_b ? Region::Bistable : Region::SingleValue;
}

BistabilityPoint classify(const DeviceParams& dev, double omega_0) {
  if (!dev.has_equal_qubits()) {
    throw NotEqualQubit("analytic bistability bounds require identical qubits");
  }
  const double omega_0c = omega_0 - dev.omega_c();
  if (omega_0c == 0.0) throw DegenerateDetuning("pump coincides with the bare resonator");
  const double shift = StarkShift(dev, omega_0).low_power();
  BistabilityPoint p;
  p.x = std::abs(shift / omega_0c);
  p.y = dev.gamma_c() / std::abs(omega_0c);
  const bool same_sign = shift != 0.0 && std::signbit(shift) == std::signbit(omega_0c);
  p.region = same_sign ? classify_xy(p.x, p.y) : Region::SingleValue;
  return p;
}

namespace {

// G(n) = n (γ² + 4 ω_s²) and its derivatives; P = (ħ|Q_c|/2) G.
double g_derivative(const StarkShift& stark, double gamma2, double omega_0c, double n, int order) {
  const double w0 = omega_0c - stark(n);
  if (order == 0) return n * (gamma2 + 4.0 * w0 * w0);
  const double w1 = -stark.derivative(n, 1);
  if (order == 1) return gamma2 + 4.0 * w0 * w0 + 8.0 * n * w0 * w1;
  const double w2 = -stark.derivative(n, 2);
  if (order == 2) return 16.0 * w0 * w1 + 8.0 * n * (w1 * w1 + w0 * w2);
  const double w3 = -stark.derivative(n, 3);
  return 24.0 * (w1 * w1 + w0 * w2) + 8.0 * n * (3.0 * w1 * w2 + w0 * w3);
}

struct Sample {
  double n;
  double slope;  // dG/dn
};

}  // namespace

double power_derivative(const DeviceParams& dev, double omega_0, double n_ph, int order) {
  if (order < 0 || order > 3) throw ModelError("power derivative order must be in [0, 3]");
  const StarkShift stark(dev, omega_0);
  return 0.5 * constants::hbar * dev.q_c() *
         g_derivative(stark, dev.gamma_c() * dev.gamma_c(), omega_0 - dev.omega_c(), n_ph, order);
}

std::optional<FoldPoints> find_folds(const DeviceParams& dev, double omega_0) {
  const StarkShift stark(dev, omega_0);
  if (stark.empty()) return std::nullopt;
  const double gamma2 = dev.gamma_c() * dev.gamma_c();
  const double omega_0c = omega_0 - dev.omega_c();
  auto slope = [&](double n) { return g_derivative(stark, gamma2, omega_0c, n, 1); };

  double k_min = std::numeric_limits<double>::infinity();
  double k_max = 0.0;
  for (const auto& t : stark.terms()) {
    k_min = std::min(k_min, t.k);
    k_max = std::max(k_max, t.k);
  }
  const double lo = 1e-8 / k_max;
  const double hi = 1e8 / k_min;
  constexpr int m = 4096;

  std::vector<Sample> samples;
  samples.reserve(m + 8);
  for (int i = 0; i < m; ++i) {
    const double n = lo * std::pow(hi / lo, static_cast<double>(i) / (m - 1));
    samples.push_back({n, slope(n)});
  }
  // Shallow dips of dG/dn between grid points are recovered by refining every
  // discrete minimum.
  const std::size_t n_grid = samples.size();
  for (std::size_t i = 1; i + 1 < n_grid; ++i) {
    if (samples[i].slope < samples[i - 1].slope && samples[i].slope <= samples[i + 1].slope) {
      auto objective = [&](double u) { return slope(std::exp(u)); };
      const auto [u, v] = boost::math::tools::brent_find_minima(
          objective, std::log(samples[i - 1].n), std::log(samples[i + 1].n),
          std::numeric_limits<double>::digits / 2);
      samples.push_back({std::exp(u), v});
    }
  }
  std::sort(samples.begin(), samples.end(),
            [](const Sample& a, const Sample& b) { return a.n < b.n; });

  auto crossing = [&](const Sample& a, const Sample& b) {
    const auto tol = [](double x0, double x1) { return std::abs(x1 - x0) <= 1e-14 * x1; };
    const auto [x0, x1] = boost::math::tools::bisect(slope, a.n, b.n, tol);
    return 0.5 * (x0 + x1);
  };

  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    if (samples[i].slope > 0.0 && samples[i + 1].slope <= 0.0) {
      FoldPoints f;
      f.n_jump = crossing(samples[i], samples[i + 1]);
      for (std::size_t j = i + 1; j + 1 < samples.size(); ++j) {
        if (samples[j].slope <= 0.0 && samples[j + 1].slope > 0.0) {
          f.n_return = crossing(samples[j], samples[j + 1]);
          break;
        }
      }
      if (f.n_return == 0.0) return std::nullopt;
      f.p_jump = power_for_photon_number(dev, omega_0, f.n_jump);
      f.p_return = power_for_photon_number(dev, omega_0, f.n_return);
      return f;
    }
  }
  return std::nullopt;
}

std::optional<CriticalPoint> find_critical_point(const DeviceParams& dev, double omega_0) {
  const auto where = classify(dev, omega_0);
  if (where.region == Region::SingleValue) return std::nullopt;

  const StarkShift stark(dev, omega_0);
  const double k = stark.terms().front().k;
  CriticalPoint cp;
  if (const auto folds = find_folds(dev, omega_0)) {
    cp.n_ph_crit = folds->n_jump;
    cp.p_crit = folds->p_jump;
    cp.n_ph_return = folds->n_return;
    cp.p_return = folds->p_return;
  } else {
    // On the separatrix (or within rounding of it) the folds merge at the
    // inflection point of P, where √(1 + k n) = boundary_parameter(x).
    const double sigma = boundary_parameter(where.x);
    cp.n_ph_crit = cp.n_ph_return = (sigma * sigma - 1.0) / k;
    cp.p_crit = cp.p_return = power_for_photon_number(dev, omega_0, cp.n_ph_crit);
  }
  cp.s_crit = 1.0 + k * cp.n_ph_crit;
  cp.d2p_dn2 = power_derivative(dev, omega_0, cp.n_ph_crit, 2);
  return cp;
}

int root_count_oracle(const DeviceParams& dev, const DriveParams& drive, int points) {
  if (drive.flux == 0.0) return 1;
  const auto bracket = root_bracket(dev, drive);
  const double lo = bracket[0] / 10.0;
  const double hi = bracket[1] * 10.0;
  const StarkShift stark(dev, drive.omega_0);
  const double gamma2 = dev.gamma_c() * dev.gamma_c();
  const double omega_0c = drive.omega_0 - dev.omega_c();
  const double d = drive_strength(dev, drive.flux);

  int count = 0;
  int last_sign = 0;
  bool pending_zero = false;
  const double step = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double n = lo * std::exp(step * i);
    const double ws = omega_0c - stark(n);
    const double f = n * (gamma2 + 4.0 * ws * ws) - d;
    if (f == 0.0) {
      pending_zero = true;
      continue;
    }
    const int sign = f > 0.0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) {
      ++count;
    } else if (pending_zero && last_sign != 0) {
      count += 2;  // touched zero without crossing: a double root
    }
    pending_zero = false;
    last_sign = sign;
  }
  return count;
}

PhasePlaneSetup phase_plane_device(double x, double y) {
  if (!(x > 0.0 && y > 0.0)) throw ModelError("phase-plane coordinates must be positive");
  const double omega_c = angular(5e9);
  const double omega_0c = angular(1e6);
  const double delta = angular(1e9);
  const double omega_0 = omega_c + omega_0c;
  const double g = std::sqrt(x * omega_0c * delta);
  // Δ is measured from the pump, so the qubit sits at ω_0 − Δ.
  DeviceParams dev(omega_c, y * omega_0c, 1e4, std::nullopt, {Qubit{g, omega_0 - delta}});
  return {std::move(dev), omega_0};
}

OracleVerdict brute_force_region(double x, double y, int scan_points, int count_points) {
  const auto setup = phase_plane_device(x, y);
  const auto& dev = setup.device;
  const double k = StarkShift(dev, setup.omega_0).terms().front().k;
  const double lo = 1e-6 / k;
  const double hi = 1e6 / k;
  std::vector<double> p(static_cast<std::size_t>(scan_points));
  for (int i = 0; i < scan_points; ++i) {
    const double n = lo * std::pow(hi / lo, static_cast<double>(i) / (scan_points - 1));
    p[static_cast<std::size_t>(i)] = power_for_photon_number(dev, setup.omega_0, n);
  }
  std::size_t i_max = 0;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (p[i] > p[i - 1] && p[i] >= p[i + 1]) {
      i_max = i;
      break;
    }
  }
  if (i_max == 0) return {};
  std::size_t i_min = 0;
  for (std::size_t i = i_max + 1; i + 1 < p.size(); ++i) {
    if (p[i] < p[i - 1] && p[i] <= p[i + 1]) {
      i_min = i;
      break;
    }
  }
  if (i_min == 0) return {};
  const double power = 0.5 * (p[i_max] + p[i_min]);
  const DriveParams drive(setup.omega_0, power / (constants::hbar * dev.omega_c()));
  OracleVerdict v;
  v.roots = root_count_oracle(dev, drive, count_points);
  v.region = v.roots >= 3 ? Region::Bistable : Region::SingleValue;
  return v;
}

}  // namespace sqn
