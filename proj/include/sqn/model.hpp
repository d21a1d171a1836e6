#pragma once

// Physical parameters of a qubit network embedded in a driven resonator and
// the photon-number dependent ac Stark nonlinearity shared by every solver.
//
// All frequencies and rates are angular (rad/s). Conversion to Hz/GHz happens
// only at the I/O boundary.

#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace sqn {

using cplx = std::complex<double>;

namespace constants {
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double two_pi = 2.0 * std::numbers::pi;
/// Default qubit frequency shift per gauss of applied field (rad/s/G).
inline constexpr double qubit_shift_per_gauss = two_pi * 200e6;
}  // namespace constants

constexpr double angular(double hz) { return constants::two_pi * hz; }
constexpr double hertz(double rad_per_s) { return rad_per_s / constants::two_pi; }

struct Qubit {
  double g = 0.0;      // coupling to the resonator
  double omega = 0.0;  // qubit transition frequency
};

/// The resonator + qubit network. Immutable after construction.
///
/// Qubits are stored by their frequency; the detuning Δ_j = ω_0 − ω_j is a
/// property of the drive frame and is evaluated per pump frequency.
class DeviceParams {
 public:
  DeviceParams(double omega_c, double gamma_c, double q_c, std::optional<double> q_i,
               std::vector<Qubit> qubits);

  /// γ_c = (1/|Q_c| + 1/Q_i) ω_c; Q_i absent means no internal loss.
  static DeviceParams from_quality_factors(double omega_c, double q_c, std::optional<double> q_i,
                                           std::vector<Qubit> qubits);

  /// N identical qubits detuned by `delta` below the bare resonator (ω_j = ω_c − Δ).
  static DeviceParams with_equal_qubits(double omega_c, double gamma_c, double q_c, double g,
                                        double delta, int n);

  double omega_c() const { return omega_c_; }
  double gamma_c() const { return gamma_c_; }
  double q_c() const { return q_c_; }
  const std::optional<double>& q_i() const { return q_i_; }
  std::span<const Qubit> qubits() const { return qubits_; }

  bool has_equal_qubits() const;

  DeviceParams with_gamma(double gamma_c) const;
  DeviceParams with_qubits(std::vector<Qubit> qubits) const;

 private:
  double omega_c_;
  double gamma_c_;
  double q_c_;
  std::optional<double> q_i_;
  std::vector<Qubit> qubits_;
};

struct DriveParams {
  double omega_0 = 0.0;  // pump frequency
  double flux = 0.0;     // |x_0|^2, photons per second

  DriveParams() = default;
  DriveParams(double omega_0, double flux);
};

/// Σ_j (g_j²/Δ_j)/√(1 + 4 g_j² n/Δ_j²) evaluated in one pump frame.
/// Identical (g, Δ) pairs are merged so equal-qubit networks cost one term.
class StarkShift {
 public:
  StarkShift(const DeviceParams& dev, double omega_0);

  double operator()(double n) const { return derivative(n, 0); }
  /// d^order S / dn^order for order in [0, 3].
  double derivative(double n, int order) const;
  /// Σ g_j²/Δ_j, the shift at vanishing photon number.
  double low_power() const { return low_power_; }
  /// Range of S(n) over n ≥ 0.
  double min_value() const { return min_value_; }
  double max_value() const { return max_value_; }
  bool empty() const { return terms_.empty(); }

  struct Term {
    double g2 = 0.0;
    double delta = 0.0;
    double k = 0.0;  // 4g²/Δ²
    int count = 0;
  };
  std::span<const Term> terms() const { return terms_; }

 private:
  std::vector<Term> terms_;
  double low_power_ = 0.0;
  double min_value_ = 0.0;
  double max_value_ = 0.0;
};

/// ω_r(n) = ω_c + S(n).
double dressed_resonance(const DeviceParams& dev, double omega_0, double n_ph);

/// ω_s = ω_0 − ω_r(n).
double effective_detuning(const DeviceParams& dev, const DriveParams& drive, double n_ph);

/// Generator power (dBm) to on-chip photon flux, P = ħ ω_c |x_0|².
/// `p_dbm = -inf` maps to zero flux.
double power_to_flux(double p_dbm, double line_attenuation_db, double omega_c);
/// Exact inverse of power_to_flux. Zero flux maps to -inf.
double flux_to_power(double flux, double line_attenuation_db, double omega_c);

/// √(ω_c / 2|Q_c|): couples the input field amplitude into the resonator.
double input_coupling(const DeviceParams& dev);

/// 2 ω_c |x_0|² / |Q_c| = 2 P/(ħ|Q_c|), the drive term of the photon-number equation.
double drive_strength(const DeviceParams& dev, double flux);

/// ⟨σ_j⁻⟩ = −(2 g_j ψ/Δ_j)/√(1 + 4 g_j²|ψ|²/Δ_j²) per qubit.
std::vector<cplx> qubit_coherence(const DeviceParams& dev, const DriveParams& drive, cplx psi);

}  // namespace sqn
