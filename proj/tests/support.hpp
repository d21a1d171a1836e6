#pragma once

#include <cmath>

#include "sqn/model.hpp"

namespace sqn::testing {

inline constexpr double kFc = 7.743e9;
inline constexpr double kQc = 24530.93;

/// Ten identical qubits 1.78 GHz below a 7.743 GHz resonator, g/2π = 25 MHz.
inline DeviceParams reference_device(double gamma_c = angular(3.2e6)) {
  return DeviceParams::with_equal_qubits(angular(kFc), gamma_c, kQc, angular(25e6), angular(1.78e9), 10);
}

/// Same network with the linewidth implied by a loaded Q of 25000; this one
/// does fold at pump frequencies between the bare and dressed resonance.
inline DeviceParams narrow_device() { return reference_device(angular(kFc) / 25000.0); }

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace sqn::testing
