#pragma once

#include <span>
#include <vector>

#include "sqn/model.hpp"
#include "sqn/steady_state.hpp"

namespace sqn {

/// Probe-dip position predicted for one steady branch.
struct DipPrediction {
  double f_dip = 0.0;    // Hz
  double f_idler = 0.0;  // Hz, 2 f_pump − f_dip
  bool plateau = false;  // Bogoliubov radicand negative: dip locked to the pump
  /// ω_s = 0 exactly; the closed form is singular and the dip came from the
  /// linearized eigenvalue instead.
  bool singular_detuning = false;
  double branch_n_ph = 0.0;
};

/// ω_p = ω_0 − ω_s Re√(1 + Σ_j 4 g_j⁴ n sgn(Δ_j) / (ω_s (Δ_j² + 4 g_j² n)^{3/2})).
DipPrediction bogoliubov_dip(const DeviceParams& dev, const DriveParams& drive,
                             const SteadyBranch& branch);

/// Signal (u) and idler (v) amplitudes of δψ = u e^{−iνt} + v e^{iνt} for a
/// probe x_p e^{−iνt} added to the pump, ν = ω_p − ω_0.
struct ProbeAmplitudes {
  cplx u;
  cplx v;
};

ProbeAmplitudes probe_amplitudes(const DeviceParams& dev, const DriveParams& drive, cplx psi,
                                 double nu, cplx x_p);

struct SpectrumPoint {
  double f_probe = 0.0;    // Hz
  double magnitude = 0.0;  // |u| / |x_p|
  double phase = 0.0;      // arg u
  double idler_magnitude = 0.0;  // |v| / |x_p|, emitted at 2 f_pump − f_probe
};

struct ResponseSpectrum {
  std::vector<SpectrumPoint> points;
};

/// Linear response of a stable branch to a weak probe tone. Peak positions do
/// not depend on `probe_flux` in the linear regime; it only sets x_p.
ResponseSpectrum linear_response_spectrum(const DeviceParams& dev, const DriveParams& drive,
                                          const SteadyBranch& branch,
                                          std::span<const double> f_probe_grid,
                                          double probe_flux);

/// Phenomenological notch line shape
/// S33 = a (1 − (Q_l/|Q_c|) e^{iφ} / (1 + 2i Q_l (f/f_r − 1))).
struct NotchModel {
  double a = 1.0;
  double f_r = 0.0;  // Hz
  double q_l = 0.0;
  double q_c_mag = 0.0;
  double phi = 0.0;  // rad
};

/// Sign of the imaginary unit. `Physics` evaluates the expression exactly as
/// written above; `Engineering` uses j = −i, which conjugates the result.
enum class ImagConvention { Physics, Engineering };

cplx notch_s33(const NotchModel& model, double f, ImagConvention conv = ImagConvention::Physics);

/// 1/Q_i = 1/Q_l − 1/|Q_c|. Non-positive or infinite when Q_l ≥ |Q_c|.
double internal_quality_factor(double q_l, double q_c_mag);

}  // namespace sqn
