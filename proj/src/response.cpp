#include "sqn/response.hpp"

#include <cmath>
#include <limits>

#include "sqn/error.hpp"

namespace sqn {

DipPrediction bogoliubov_dip(const DeviceParams& dev, const DriveParams& drive,
                             const SteadyBranch& branch) {
  const StarkShift stark(dev, drive.omega_0);
  const double n = branch.n_ph;
  const double ws = drive.omega_0 - dev.omega_c() - stark(n);

  DipPrediction out;
  out.branch_n_ph = n;
  double nu = 0.0;  // ω_p − ω_0
  if (ws == 0.0) {
    // ν² = ω_s² − 2 ω_s S'(n) n vanishes: the eigenvalue pair sits on the pump.
    out.singular_detuning = true;
  } else {
    double sum = 0.0;
    for (const auto& t : stark.terms()) {
      const double d2 = t.delta * t.delta;
      sum += t.count * std::copysign(4.0 * t.g2 * t.g2 * n, t.delta) /
             std::pow(d2 + 4.0 * t.g2 * n, 1.5);
    }
    const double radicand = 1.0 + sum / ws;
    if (radicand < 0.0) {
      out.plateau = true;
    } else {
      nu = -ws * std::sqrt(radicand);
    }
  }
  const double f_pump = hertz(drive.omega_0);
  out.f_dip = f_pump + hertz(nu);
  out.f_idler = 2.0 * f_pump - out.f_dip;
  return out;
}

ProbeAmplitudes probe_amplitudes(const DeviceParams& dev, const DriveParams& drive, cplx psi,
                                 double nu, cplx x_p) {
  // (J + iν) (u, v*)ᵀ = (κ x_p, 0)ᵀ with J = [[a, b], [b*, a*]]
  const auto lin = linearize(dev, drive.omega_0, psi);
  const cplx i_nu(0.0, nu);
  const cplx m00 = lin.a + i_nu;
  const cplx m01 = lin.b;
  const cplx m10 = std::conj(lin.b);
  const cplx m11 = std::conj(lin.a) + i_nu;
  const cplx det = m00 * m11 - m01 * m10;
  if (det == cplx(0.0) || !std::isfinite(det.real()) || !std::isfinite(det.imag())) {
    throw SingularResponse("probe sits on an undamped pole of the linearized dynamics");
  }
  const cplx rhs = input_coupling(dev) * x_p;
  const cplx u = m11 * rhs / det;
  const cplx v_conj = -m10 * rhs / det;
  return {u, std::conj(v_conj)};
}

ResponseSpectrum linear_response_spectrum(const DeviceParams& dev, const DriveParams& drive,
                                          const SteadyBranch& branch,
                                          std::span<const double> f_probe_grid,
                                          double probe_flux) {
  if (branch.stability != Stability::Stable) {
    throw ModelError("linear response requires a stable branch");
  }
  if (!(probe_flux > 0.0)) throw ModelError("probe flux must be positive");
  const cplx x_p(std::sqrt(probe_flux), 0.0);
  const double f_pump = hertz(drive.omega_0);

  ResponseSpectrum out;
  out.points.reserve(f_probe_grid.size());
  double previous = -std::numeric_limits<double>::infinity();
  for (const double f : f_probe_grid) {
    if (!(f > previous)) throw ModelError("probe grid must be strictly increasing");
    previous = f;
    const double nu = angular(f - f_pump);
    const auto amp = probe_amplitudes(dev, drive, branch.psi, nu, x_p);
    out.points.push_back(
        {f, std::abs(amp.u) / std::abs(x_p), std::arg(amp.u), std::abs(amp.v) / std::abs(x_p)});
  }
  return out;
}

cplx notch_s33(const NotchModel& m, double f, ImagConvention conv) {
  const cplx i(0.0, 1.0);
  const cplx s = m.a * (1.0 - (m.q_l / m.q_c_mag) * std::exp(i * m.phi) /
                                  (1.0 + 2.0 * i * m.q_l * (f / m.f_r - 1.0)));
  return conv == ImagConvention::Physics ? s : std::conj(s);
}

double internal_quality_factor(double q_l, double q_c_mag) {
  return 1.0 / (1.0 / q_l - 1.0 / q_c_mag);
}

}  // namespace sqn
