#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sqn/model.hpp"

namespace sqn {

enum class Stability { Stable, Unstable };

const char* to_string(Stability s);

/// One self-consistent steady state of the driven resonator.
struct SteadyBranch {
  double n_ph = 0.0;
  double omega_s = 0.0;  // effective detuning at this photon number
  cplx psi{};            // coherent field in the pump frame
  Stability stability = Stability::Stable;
};

/// All steady states for one (device, drive), ascending in photon number.
struct BranchSet {
  std::vector<SteadyBranch> branches;

  std::size_t size() const { return branches.size(); }
  const SteadyBranch& operator[](std::size_t i) const { return branches[i]; }
  const SteadyBranch& lowest() const { return branches.front(); }
  const SteadyBranch& highest() const { return branches.back(); }
};

struct ScanOptions {
  /// Photon-number scan bounds. When unset the solver uses the guaranteed
  /// bracket [D/(γ² + 4 max ω_s²), D/γ²] with D the drive strength.
  std::optional<double> n_min;
  std::optional<double> n_max;
  int points = 1024;
  double rel_tol = 1e-12;
};

/// F(n) = n (γ_c² + 4 ω_s(n)²) − 2 ω_c |x_0|²/|Q_c|.
double steady_residual(const DeviceParams& dev, const DriveParams& drive, double n_ph);

/// Photon-number interval that must contain every root of F.
std::array<double, 2> root_bracket(const DeviceParams& dev, const DriveParams& drive);

/// ψ = −i x_0 √(ω_c/2|Q_c|)/(ω_s + iγ_c/2), x_0 = √flux taken real.
cplx steady_field(const DeviceParams& dev, const DriveParams& drive, double omega_s);

/// Every root n ≥ 0 of F. Roots are bracketed on a log grid, with discrete
/// extrema of F refined and inserted so near-fold root pairs are not missed,
/// then polished by bisection. Throws NoRoot when explicit scan bounds miss.
BranchSet solve_steady(const DeviceParams& dev, const DriveParams& drive,
                       const ScanOptions& opts = {});

/// Jacobian of dψ/dt = (iω_s(|ψ|²) − γ_c/2)ψ − √(ω_c/2|Q_c|) x_in acting on
/// (δψ, δψ*): row 0 is d(δψ)/dt, row 1 its conjugate.
struct Linearization {
  cplx a;  // ∂f/∂ψ
  cplx b;  // ∂f/∂ψ*

  std::array<cplx, 2> eigenvalues() const;
};

Linearization linearize(const DeviceParams& dev, double omega_0, cplx psi);

/// Stable iff both eigenvalues of the linearization have negative real part.
Stability classify_stability(const DeviceParams& dev, const DriveParams& drive,
                             const SteadyBranch& branch);

/// P(n) = (ħ|Q_c|/2) n (γ_c² + 4 ω_s(n)²), in watts at the resonator input.
double power_for_photon_number(const DeviceParams& dev, double omega_0, double n_ph);

}  // namespace sqn
