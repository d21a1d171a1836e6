#include "sqn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sqn/error.hpp"

namespace sqn {

NoRoot::NoRoot(double n_lo, double n_hi)
    : Error("no steady-state root in photon-number interval [" + std::to_string(n_lo) + ", " +
            std::to_string(n_hi) + "]"),
      n_lo_(n_lo),
      n_hi_(n_hi) {}

ConfigError::ConfigError(std::string key, const std::string& message)
    : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ModelError(what);
}

}  // namespace

DeviceParams::DeviceParams(double omega_c, double gamma_c, double q_c, std::optional<double> q_i,
                           std::vector<Qubit> qubits)
    : omega_c_(omega_c), gamma_c_(gamma_c), q_c_(q_c), q_i_(q_i), qubits_(std::move(qubits)) {
  require(std::isfinite(omega_c_) && omega_c_ > 0.0, "omega_c must be positive");
  require(std::isfinite(gamma_c_) && gamma_c_ > 0.0, "gamma_c must be positive");
  require(std::isfinite(q_c_) && q_c_ > 0.0, "q_c must be positive");
  if (q_i_) require(std::isfinite(*q_i_) && *q_i_ > 0.0, "q_i must be positive");
  for (const auto& q : qubits_) {
    require(std::isfinite(q.g) && q.g >= 0.0, "qubit coupling must be non-negative");
    require(std::isfinite(q.omega), "qubit frequency must be finite");
  }
}

DeviceParams DeviceParams::from_quality_factors(double omega_c, double q_c,
                                                std::optional<double> q_i,
                                                std::vector<Qubit> qubits) {
  require(q_c > 0.0, "q_c must be positive");
  const double inv_ql = 1.0 / q_c + (q_i ? 1.0 / *q_i : 0.0);
  return DeviceParams(omega_c, inv_ql * omega_c, q_c, q_i, std::move(qubits));
}

DeviceParams DeviceParams::with_equal_qubits(double omega_c, double gamma_c, double q_c, double g,
                                             double delta, int n) {
  require(n >= 0, "qubit count must be non-negative");
  std::vector<Qubit> qubits(static_cast<std::size_t>(n), Qubit{g, omega_c - delta});
  return DeviceParams(omega_c, gamma_c, q_c, std::nullopt, std::move(qubits));
}

bool DeviceParams::has_equal_qubits() const {
  return std::all_of(qubits_.begin(), qubits_.end(), [&](const Qubit& q) {
    return q.g == qubits_.front().g && q.omega == qubits_.front().omega;
  });
}

DeviceParams DeviceParams::with_gamma(double gamma_c) const {
  return DeviceParams(omega_c_, gamma_c, q_c_, q_i_, qubits_);
}

DeviceParams DeviceParams::with_qubits(std::vector<Qubit> qubits) const {
  return DeviceParams(omega_c_, gamma_c_, q_c_, q_i_, std::move(qubits));
}

DriveParams::DriveParams(double omega_0_, double flux_) : omega_0(omega_0_), flux(flux_) {
  require(std::isfinite(omega_0) && omega_0 > 0.0, "pump frequency must be positive");
  require(std::isfinite(flux) && flux >= 0.0, "photon flux must be non-negative");
}

StarkShift::StarkShift(const DeviceParams& dev, double omega_0) {
  for (const auto& q : dev.qubits()) {
    if (q.g == 0.0) continue;
    const double delta = omega_0 - q.omega;
    if (delta == 0.0) throw ModelError("qubit resonant with the pump: detuning is zero");
    const double g2 = q.g * q.g;
    auto it = std::find_if(terms_.begin(), terms_.end(),
                           [&](const Term& t) { return t.g2 == g2 && t.delta == delta; });
    if (it != terms_.end()) {
      ++it->count;
    } else {
      terms_.push_back({g2, delta, 4.0 * g2 / (delta * delta), 1});
    }
  }
  for (const auto& t : terms_) {
    const double full = t.count * t.g2 / t.delta;
    low_power_ += full;
    (full > 0.0 ? max_value_ : min_value_) += full;
  }
}

double StarkShift::derivative(double n, int order) const {
  // Each term is c (g²/Δ) s^{-1/2} with s = 1 + k n, k = 4g²/Δ².
  static constexpr double coeff[] = {1.0, -0.5, 0.75, -1.875};
  double sum = 0.0;
  for (const auto& t : terms_) {
    const double s = 1.0 + t.k * n;
    const double r = t.k / s;
    double term = t.count * t.g2 / t.delta / std::sqrt(s);
    for (int i = 0; i < order; ++i) term *= r;
    sum += coeff[order] * term;
  }
  return sum;
}

double dressed_resonance(const DeviceParams& dev, double omega_0, double n_ph) {
  return dev.omega_c() + StarkShift(dev, omega_0)(n_ph);
}

double effective_detuning(const DeviceParams& dev, const DriveParams& drive, double n_ph) {
  return drive.omega_0 - dressed_resonance(dev, drive.omega_0, n_ph);
}

double power_to_flux(double p_dbm, double line_attenuation_db, double omega_c) {
  if (std::isinf(p_dbm) && p_dbm < 0.0) return 0.0;
  const double watts = std::pow(10.0, (p_dbm - line_attenuation_db - 30.0) / 10.0);
  return watts / (constants::hbar * omega_c);
}

double flux_to_power(double flux, double line_attenuation_db, double omega_c) {
  if (flux == 0.0) return -std::numeric_limits<double>::infinity();
  const double watts = flux * constants::hbar * omega_c;
  return 10.0 * std::log10(watts) + 30.0 + line_attenuation_db;
}

double input_coupling(const DeviceParams& dev) {
  return std::sqrt(dev.omega_c() / (2.0 * dev.q_c()));
}

double drive_strength(const DeviceParams& dev, double flux) {
  return 2.0 * dev.omega_c() * flux / dev.q_c();
}

std::vector<cplx> qubit_coherence(const DeviceParams& dev, const DriveParams& drive, cplx psi) {
  std::vector<cplx> out;
  out.reserve(dev.qubits().size());
  const double n = std::norm(psi);
  for (const auto& q : dev.qubits()) {
    const double delta = drive.omega_0 - q.omega;
    if (delta == 0.0) throw ModelError("qubit resonant with the pump: detuning is zero");
    const double ratio = 2.0 * q.g / delta;
    // hypot keeps the saturated limit |⟨σ⁻⟩| → 1 finite
    out.push_back(-ratio * psi / std::hypot(1.0, ratio * std::sqrt(n)));
  }
  return out;
}

}  // namespace sqn
