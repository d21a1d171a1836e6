#include "sqn/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "sqn/bistability.hpp"
#include "sqn/error.hpp"
#include "sqn/response.hpp"

namespace sqn {

namespace odeint = boost::numeric::odeint;

namespace {

double ramp_flux(const PowerRamp& r, double t) {
  if (r.times.empty()) return 0.0;
  if (t <= r.times.front()) return r.flux.front();
  if (t >= r.times.back()) return r.flux.back();
  const auto it = std::upper_bound(r.times.begin(), r.times.end(), t);
  const auto i = static_cast<std::size_t>(it - r.times.begin());
  const double w = (t - r.times[i - 1]) / (r.times[i] - r.times[i - 1]);
  return r.flux[i - 1] + w * (r.flux[i] - r.flux[i - 1]);
}

void validate(const DriveEnvelope& env) {
  if (const auto* r = std::get_if<PowerRamp>(&env)) {
    if (r->times.size() != r->flux.size() || r->times.empty()) {
      throw ModelError("power ramp needs matching, nonempty knot lists");
    }
    for (std::size_t i = 0; i < r->times.size(); ++i) {
      if (!(r->flux[i] >= 0.0) || !std::isfinite(r->flux[i])) {
        throw ModelError("power ramp flux must be finite and non-negative");
      }
      if (i > 0 && !(r->times[i] > r->times[i - 1])) {
        throw ModelError("power ramp times must be strictly increasing");
      }
    }
  }
}

using State = std::array<double, 2>;

}  // namespace

cplx envelope_value(const DriveEnvelope& env, double t) {
  struct Visitor {
    double t;
    cplx operator()(const ConstantDrive& d) const { return d.x0; }
    cplx operator()(const ProbeToneDrive& d) const {
      return d.x0 + d.xp * std::exp(cplx(0.0, -d.nu * t));
    }
    cplx operator()(const PowerRamp& r) const { return {std::sqrt(ramp_flux(r, t)), 0.0}; }
  };
  return std::visit(Visitor{t}, env);
}

double peak_flux(const DriveEnvelope& env) {
  struct Visitor {
    double operator()(const ConstantDrive& d) const { return std::norm(d.x0); }
    double operator()(const ProbeToneDrive& d) const {
      const double a = std::abs(d.x0) + std::abs(d.xp);
      return a * a;
    }
    double operator()(const PowerRamp& r) const {
      return r.flux.empty() ? 0.0 : *std::max_element(r.flux.begin(), r.flux.end());
    }
  };
  return std::visit(Visitor{}, env);
}

std::vector<double> Trajectory::n_ph() const {
  std::vector<double> n(psi.size());
  std::transform(psi.begin(), psi.end(), n.begin(), [](cplx p) { return std::norm(p); });
  return n;
}

Trajectory integrate(const DeviceParams& dev, double omega_0, const DriveEnvelope& env, cplx psi0,
                     double t0, double t1, const IntegrateOptions& opts) {
  if (!(opts.tol >= 1e-12 && opts.tol <= 1e-6)) {
    throw ModelError("integration tolerance must lie in [1e-12, 1e-6]");
  }
  if (!(t1 > t0)) throw ModelError("integration window must have t1 > t0");
  validate(env);

  std::vector<double> times = opts.sample_times;
  if (times.empty()) {
    const int m = std::max(opts.samples, 2);
    times.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) times[i] = t0 + (t1 - t0) * i / (m - 1);
    times.back() = t1;
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t0 || times[i] > t1 || (i > 0 && !(times[i] > times[i - 1]))) {
      throw ModelError("sample times must be strictly increasing inside the window");
    }
  }

  const StarkShift stark(dev, omega_0);
  const double omega_0c = omega_0 - dev.omega_c();
  const double half_gamma = 0.5 * dev.gamma_c();
  const double kappa = input_coupling(dev);

  double n_max = 0.0;
  if (const double f = peak_flux(env); f > 0.0) {
    n_max = solve_steady(dev, DriveParams(omega_0, f)).highest().n_ph;
  }
  const double bound = 10.0 * std::max(n_max, std::norm(psi0));

  auto rhs = [&](const State& x, State& dxdt, double t) {
    const cplx psi(x[0], x[1]);
    const double ws = omega_0c - stark(std::norm(psi));
    const cplx d = cplx(-half_gamma, ws) * psi - kappa * envelope_value(env, t);
    dxdt[0] = d.real();
    dxdt[1] = d.imag();
  };

  Trajectory out;
  out.times.reserve(times.size());
  out.psi.reserve(times.size());
  auto observer = [&](const State& x, double t) {
    const cplx psi(x[0], x[1]);
    if (!(std::norm(psi) <= bound) && std::norm(psi) > 0.0) {
      throw BoundExceeded("photon number left the admissible range during integration");
    }
    out.times.push_back(t);
    out.psi.push_back(psi);
  };

  const double rate = half_gamma + std::abs(omega_0c) + std::abs(stark.low_power()) +
                      std::abs(envelope_value(env, t0)) * kappa / (1.0 + std::abs(psi0));
  const double dt0 = std::min((t1 - t0) * 1e-3, 1e-3 / rate);

  State x{psi0.real(), psi0.imag()};
  auto stepper = odeint::make_dense_output(opts.tol, opts.tol, odeint::runge_kutta_dopri5<State>());
  std::vector<double> grid;
  grid.reserve(times.size() + 1);
  if (times.front() > t0) grid.push_back(t0);
  grid.insert(grid.end(), times.begin(), times.end());
  const bool skip_first = grid.front() != times.front();
  bool first = true;
  auto filtered = [&](const State& s, double t) {
    if (first && skip_first) {
      first = false;
      return;
    }
    first = false;
    observer(s, t);
  };
  try {
    odeint::integrate_times(stepper, rhs, x, grid.begin(), grid.end(), dt0, filtered,
                            odeint::max_step_checker(static_cast<int>(
                                std::min<long>(opts.max_steps, 2'000'000'000L))));
  } catch (const odeint::odeint_error& e) {
    throw StepSizeUnderflow(std::string("integrator made no progress: ") + e.what());
  }
  return out;
}

cplx spectral_line(const Trajectory& traj, cplx psi_ref, double nu, double t_from) {
  cplx acc(0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (traj.times[i] < t_from) continue;
    acc += (traj.psi[i] - psi_ref) * std::exp(cplx(0.0, nu * traj.times[i]));
    ++count;
  }
  if (count == 0) throw ModelError("no samples in the spectral window");
  return acc / static_cast<double>(count);
}

const char* to_string(SweepDirection d) { return d == SweepDirection::Up ? "up" : "down"; }

std::vector<SweepPoint> quasi_static_sweep(const DeviceParams& dev, double omega_0,
                                           std::span<const double> power_dbm,
                                           double attenuation_db, SweepDirection direction) {
  for (std::size_t i = 1; i < power_dbm.size(); ++i) {
    const bool ok = direction == SweepDirection::Up ? power_dbm[i] > power_dbm[i - 1]
                                                    : power_dbm[i] < power_dbm[i - 1];
    if (!ok) throw ModelError("power list must be strictly monotone in the sweep direction");
  }
  const auto folds = find_folds(dev, omega_0);

  std::vector<SweepPoint> out;
  out.reserve(power_dbm.size());
  for (const double p : power_dbm) {
    const DriveParams drive(omega_0, power_to_flux(p, attenuation_db, dev.omega_c()));
    const auto roots = solve_steady(dev, drive);
    std::vector<const SteadyBranch*> stable;
    for (const auto& b : roots.branches) {
      if (b.stability == Stability::Stable) stable.push_back(&b);
    }
    if (stable.empty()) {
      for (const auto& b : roots.branches) stable.push_back(&b);
    }

    SweepPoint pt;
    pt.power_dbm = p;
    pt.root_count = roots.size();
    if (out.empty()) {
      pt.branch = direction == SweepDirection::Up ? *stable.front() : *stable.back();
    } else {
      const double prev = out.back().branch.n_ph;
      auto distance = [&](const SteadyBranch* b) {
        if (prev <= 0.0 || b->n_ph <= 0.0) return std::abs(b->n_ph - prev);
        return std::abs(std::log(b->n_ph / prev));
      };
      pt.branch = **std::min_element(stable.begin(), stable.end(), [&](auto* a, auto* b) {
        return distance(a) < distance(b);
      });
      if (folds) {
        const double n = pt.branch.n_ph;
        pt.jumped = (prev < folds->n_jump && n > folds->n_return) ||
                    (prev > folds->n_return && n < folds->n_jump);
      }
    }
    for (std::size_t k = 0; k < roots.size(); ++k) {
      if (roots[k].n_ph == pt.branch.n_ph) pt.branch_index = k;
    }
    out.push_back(pt);
  }
  return out;
}

std::vector<RampedPoint> ramped_sweep(const DeviceParams& dev, double omega_0,
                                      std::span<const double> power_dbm, double attenuation_db,
                                      double ramp_time, double tol) {
  if (!(ramp_time > 0.0)) throw ModelError("ramp time must be positive");
  std::vector<RampedPoint> out;
  out.reserve(power_dbm.size());
  cplx psi(0.0);
  double flux_prev = 0.0;
  IntegrateOptions opts;
  opts.tol = tol;
  opts.samples = 2;
  for (const double p : power_dbm) {
    const double flux = power_to_flux(p, attenuation_db, dev.omega_c());
    const PowerRamp ramp{{0.0, ramp_time}, {flux_prev, flux}};
    const auto traj = integrate(dev, omega_0, ramp, psi, 0.0, 2.0 * ramp_time, opts);
    psi = traj.psi.back();
    out.push_back({p, psi, std::norm(psi)});
    flux_prev = flux;
  }
  return out;
}

HysteresisLoop hysteresis_loop(const DeviceParams& dev, double omega_0,
                               std::span<const double> power_grid_dbm, double attenuation_db) {
  std::vector<double> ascending(power_grid_dbm.begin(), power_grid_dbm.end());
  std::sort(ascending.begin(), ascending.end());
  if (std::adjacent_find(ascending.begin(), ascending.end()) != ascending.end()) {
    throw ModelError("power grid contains duplicates");
  }
  std::vector<double> descending(ascending.rbegin(), ascending.rend());

  auto to_loop = [&](const std::vector<SweepPoint>& sweep, std::vector<LoopPoint>& dst,
                     std::optional<double>& jump) {
    for (const auto& s : sweep) {
      const DriveParams drive(omega_0, power_to_flux(s.power_dbm, attenuation_db, dev.omega_c()));
      const auto dip = bogoliubov_dip(dev, drive, s.branch);
      dst.push_back({s.power_dbm, dip.f_dip, s.branch.n_ph});
      if (s.jumped && !jump) jump = s.power_dbm;
    }
  };

  HysteresisLoop loop;
  to_loop(quasi_static_sweep(dev, omega_0, ascending, attenuation_db, SweepDirection::Up), loop.up,
          loop.up_jump_dbm);
  to_loop(quasi_static_sweep(dev, omega_0, descending, attenuation_db, SweepDirection::Down),
          loop.down, loop.down_jump_dbm);

  const std::size_t m = ascending.size();
  for (std::size_t i = 1; i < m; ++i) {
    const double d0 = std::abs(loop.up[i - 1].f_dip - loop.down[m - i].f_dip);
    const double d1 = std::abs(loop.up[i].f_dip - loop.down[m - 1 - i].f_dip);
    loop.loop_area += 0.5 * (d0 + d1) * (ascending[i] - ascending[i - 1]);
  }
  return loop;
}

DeviceParams apply_magnetic_field(const DeviceParams& dev, double b_gauss, double rate) {
  std::vector<Qubit> shifted(dev.qubits().begin(), dev.qubits().end());
  for (auto& q : shifted) q.omega += b_gauss * rate;
  return dev.with_qubits(std::move(shifted));
}

}  // namespace sqn
