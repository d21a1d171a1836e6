#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sqn/model.hpp"

namespace sqn {

enum class Region { SingleValue, Bistable, Boundary };

const char* to_string(Region r);

/// Position in the dimensionless phase plane.
///   x = |δω_c / ω_0c|   cavity shift over cavity detuning, δω_c = Σ g_j²/Δ_j
///   y = γ_c / |ω_0c|    leakage over cavity detuning
struct BistabilityPoint {
  double x = 0.0;
  double y = 0.0;
  Region region = Region::SingleValue;
};

struct PhasePoint {
  double x = 0.0;
  double y = 0.0;
};

/// Parametric separatrix for identical qubits:
///   x(σ) = (3σ + σ³)/4,   y(σ) = (√3/2)(σ² − 1)/σ,   σ ≥ 1.
/// At a separatrix point both folds merge at the photon number where
/// √(1 + 4g²n/Δ²) = σ.
PhasePoint boundary_point(double s);
std::vector<PhasePoint> boundary_curve(std::span<const double> s_grid);

/// The σ > 1 at which x(σ) = x. Requires x > 1.
double boundary_parameter(double x);

/// y on the separatrix at the given x; zero for x ≤ 1.
double boundary_leakage(double x);

/// Bistable iff some s > 1 satisfies both y < y(s) and x > x(s), i.e. iff the
/// point lies below the separatrix. Points within 1e-9 (relative) in y of the
/// separatrix are reported as Boundary.
Region classify_xy(double x, double y);

/// Classifies a device and pump. Requires identical qubits and ω_0 ≠ ω_c.
/// A fold additionally needs δω_c and ω_0c to share a sign; otherwise the
/// detuning only grows with photon number and the region is SingleValue.
BistabilityPoint classify(const DeviceParams& dev, double omega_0);

/// d^order P/dn^order of the input power needed to hold n photons, order ∈ [0, 3].
double power_derivative(const DeviceParams& dev, double omega_0, double n_ph, int order);

/// The two turning points of P(n). `n_jump` is the local maximum of P (the
/// lower branch ends there on an up-sweep), `n_return` the local minimum.
struct FoldPoints {
  double n_jump = 0.0;
  double p_jump = 0.0;
  double n_return = 0.0;
  double p_return = 0.0;
};

/// Folds of P(n) for any device (identical qubits not required), or nullopt
/// when P is monotone. Located from the analytic dP/dn.
std::optional<FoldPoints> find_folds(const DeviceParams& dev, double omega_0);

/// The jump point of the bistable window. On the separatrix both folds merge
/// and dP/dn = d²P/dn² = 0 there; inside the window d²P/dn² < 0 at the jump.
struct CriticalPoint {
  double n_ph_crit = 0.0;
  double p_crit = 0.0;  // watts at the resonator input
  double s_crit = 1.0;  // 1 + 4g² n/Δ²
  double d2p_dn2 = 0.0;
  double n_ph_return = 0.0;
  double p_return = 0.0;
};

/// nullopt when classify() reports SingleValue. Requires identical qubits.
std::optional<CriticalPoint> find_critical_point(const DeviceParams& dev, double omega_0);

/// Sign changes of the steady residual on a dense log grid spanning ten times
/// the guaranteed root bracket on each side. Validation oracle only.
int root_count_oracle(const DeviceParams& dev, const DriveParams& drive, int points = 1'000'000);

/// A one-qubit device and pump frequency sitting at the given (x, y) with
/// the Stark shift and the cavity detuning of equal sign. x > 0, y > 0.
struct PhasePlaneSetup {
  DeviceParams device;
  double omega_0 = 0.0;
};
PhasePlaneSetup phase_plane_device(double x, double y);

struct OracleVerdict {
  Region region = Region::SingleValue;
  int roots = 1;  // roots found at the probing drive
};

/// Classification without the analytic bound: P(n) of the phase-plane device
/// is scanned on `scan_points` log-spaced photon numbers for a local maximum
/// followed by a local minimum. If one exists, the residual roots are counted
/// at the power halfway between them. Validation oracle only.
OracleVerdict brute_force_region(double x, double y, int scan_points = 20'000,
                                 int count_points = 1'000'000);

}  // namespace sqn
