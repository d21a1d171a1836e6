#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "sqn/model.hpp"
#include "sqn/steady_state.hpp"

namespace sqn {

/// x_in(t) = x_0.
struct ConstantDrive {
  cplx x0;
};

/// x_in(t) = x_0 + x_p e^{−iνt}, ν = ω_p − ω_0.
struct ProbeToneDrive {
  cplx x0;
  cplx xp;
  double nu = 0.0;
};

/// Photon flux interpolated linearly between knots, held constant outside.
/// The amplitude is √flux with zero phase.
struct PowerRamp {
  std::vector<double> times;
  std::vector<double> flux;
};

using DriveEnvelope = std::variant<ConstantDrive, ProbeToneDrive, PowerRamp>;

cplx envelope_value(const DriveEnvelope& env, double t);
/// Largest |x_in|² the envelope can reach.
double peak_flux(const DriveEnvelope& env);

struct Trajectory {
  std::vector<double> times;
  std::vector<cplx> psi;

  std::vector<double> n_ph() const;
};

struct IntegrateOptions {
  double tol = 1e-9;  // absolute and relative, in [1e-12, 1e-6]
  /// Output instants inside [t0, t1]; when empty, `samples` uniform points.
  std::vector<double> sample_times;
  int samples = 1001;
  long max_steps = 50'000'000;
};

/// Adaptive Dormand-Prince integration of
///   dψ/dt = i(ω_0 − ω_c − S(|ψ|²))ψ − (γ_c/2)ψ − √(ω_c/2|Q_c|) x_in(t)
/// in the frame rotating at ω_0. Throws BoundExceeded if |ψ|² leaves
/// 10·max(n_max, |ψ0|²), with n_max the largest steady root at peak flux.
Trajectory integrate(const DeviceParams& dev, double omega_0, const DriveEnvelope& env, cplx psi0,
                     double t0, double t1, const IntegrateOptions& opts = {});

/// Complex amplitude of e^{−iνt} in ψ(t) − ψ_ref over the samples with
/// t ≥ t_from (rectangular window, uniform spacing assumed).
cplx spectral_line(const Trajectory& traj, cplx psi_ref, double nu, double t_from);

enum class SweepDirection { Up, Down };

const char* to_string(SweepDirection d);

struct SweepPoint {
  double power_dbm = 0.0;
  SteadyBranch branch;
  std::size_t branch_index = 0;  // position in the ascending root set
  std::size_t root_count = 0;
  bool jumped = false;  // the followed branch ended at a fold before this point
};

/// Branch continuation over a monotone power list. Each point takes the
/// stable root nearest in log n to the previous one; the first point takes
/// the lowest (Up) or highest (Down) stable root.
std::vector<SweepPoint> quasi_static_sweep(const DeviceParams& dev, double omega_0,
                                           std::span<const double> power_dbm,
                                           double attenuation_db, SweepDirection direction);

struct RampedPoint {
  double power_dbm = 0.0;
  cplx psi;
  double n_ph = 0.0;
};

/// Time-domain counterpart of quasi_static_sweep: the power is ramped
/// linearly between list entries over `ramp_time` and then held for the same
/// time before sampling. Starts from the empty resonator.
std::vector<RampedPoint> ramped_sweep(const DeviceParams& dev, double omega_0,
                                      std::span<const double> power_dbm, double attenuation_db,
                                      double ramp_time, double tol = 1e-9);

struct LoopPoint {
  double power_dbm = 0.0;
  double f_dip = 0.0;  // Hz
  double n_ph = 0.0;
};

struct HysteresisLoop {
  std::vector<LoopPoint> up;    // ascending power
  std::vector<LoopPoint> down;  // descending power
  double loop_area = 0.0;       // Hz·dB
  /// First grid power reached after a fold jump, if any.
  std::optional<double> up_jump_dbm;
  std::optional<double> down_jump_dbm;
};

/// Up and down sweeps over the same grid (either orientation), each point
/// mapped through bogoliubov_dip. The area is the trapezoid integral of
/// |f_up − f_down| over power.
HysteresisLoop hysteresis_loop(const DeviceParams& dev, double omega_0,
                               std::span<const double> power_grid_dbm, double attenuation_db);

/// Shifts every qubit frequency by b·rate; couplings are unchanged.
DeviceParams apply_magnetic_field(const DeviceParams& dev, double b_gauss,
                                  double rate = constants::qubit_shift_per_gauss);

}  // namespace sqn
