#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sqn/dogleg.hpp"
#include "sqn/dynamics.hpp"
#include "sqn/model.hpp"
#include "sqn/response.hpp"

namespace sqn {

/// A measured reflection trace. Complex traces fill `s33`; magnitude-only
/// traces fill `magnitude` and leave `s33` empty.
struct SpectrumData {
  std::vector<double> f;  // Hz, strictly increasing
  std::vector<cplx> s33;
  std::vector<double> magnitude;
  bool interpolated = false;

  bool has_phase() const { return !s33.empty(); }
  std::size_t size() const { return f.size(); }
  double magnitude_at(std::size_t i) const { return has_phase() ? std::abs(s33[i]) : magnitude[i]; }
};

/// Throws ModelError unless f is strictly increasing and the value columns match.
void validate(const SpectrumData& data);

/// Natural cubic spline through `data` evaluated at `f_new` (inside the data range).
SpectrumData resample(const SpectrumData& data, std::span<const double> f_new);

/// Keeps the samples inside [f_lo, f_hi] and resamples them onto `n_interp`
/// uniform points between the first and last kept sample. Throws WindowEmpty
/// when fewer than 8 samples remain.
SpectrumData preprocess(const SpectrumData& data, double f_lo, double f_hi, std::size_t n_interp);

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd values;
  Eigen::VectorXd sigmas;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd correlation;
  double rmse_raw = 0.0;
  std::optional<double> rmse_interp;
  int n_iter = 0;
  bool converged = false;
  std::string reason;
};

/// f_r at the magnitude extremum, Q_l from the half-power width of the
/// deviation from the off-resonant level, a from that level, Q_c = 2 Q_l.
/// φ = 0 for a dip and π for a peak. Throws NoDip when the extremum does
/// not clear ten times the point-to-point noise.
NotchModel initial_guess_notch(const SpectrumData& data);

struct NotchFitOptions {
  /// Measured traces use j = −i, hence the engineering default.
  ImagConvention convention = ImagConvention::Engineering;
  /// Raw trace for rmse_raw when the fitted data is interpolated.
  std::optional<SpectrumData> raw;
  DoglegOptions solver;
};

struct NotchFit {
  NotchModel model;
  double q_i = 0.0;  // from 1/Q_i = 1/Q_l − 1/|Q_c|
  FitResult fit;     // parameter order: a, f_r, q_l, q_c, phi
};

/// Complex residuals when the data has phase, |S33| residuals otherwise.
NotchFit fit_notch(const SpectrumData& data, const NotchModel& init,
                   const NotchFitOptions& opts = {});

/// RMSE of the model against a trace: √(mean |S − d|²), or of magnitudes
/// for magnitude-only data.
double notch_rmse(const NotchModel& model, const SpectrumData& data,
                  ImagConvention conv = ImagConvention::Engineering);

struct DipCurveRow {
  double power_dbm = 0.0;
  double f_pump = 0.0;  // Hz
  double f_dip = 0.0;   // Hz
  double b_gauss = 0.0;
};

/// Parameters of the identical-qubit dip model. Angular frequencies.
struct DipModelParams {
  double omega_c = 0.0;
  double gamma_c = 0.0;
  double g = 0.0;
  double delta = 0.0;  // bare resonator minus qubit frequency at zero field
  double attenuation_db = 0.0;
};

/// How a data point in the bistable window is assigned to a branch.
enum class BranchPolicy { UpSweep, DownSweep, Unspecified };

struct DipFitSetup {
  int n_qubits = 1;
  double q_c = 0.0;
  BranchPolicy policy = BranchPolicy::UpSweep;
  double field_rate = constants::qubit_shift_per_gauss;
  DoglegOptions solver;
};

DeviceParams dip_device(const DipModelParams& p, const DipFitSetup& setup, double b_gauss = 0.0);

/// Model dip frequency for every row (same order). Rows sharing (f_pump, b)
/// form one power sweep followed by continuation in the policy's direction.
/// With BranchPolicy::Unspecified a row with two stable roots throws
/// BranchAmbiguity.
std::vector<double> predict_dip_curves(const DipModelParams& p, const DipFitSetup& setup,
                                       std::span<const DipCurveRow> rows);

struct DipFit {
  DipModelParams params;
  FitResult fit;  // order: f_c_ghz, gamma_c_mhz, g_mhz, delta_ghz, attenuation_db
};

/// Least squares of predicted against measured dip frequency. Parameters are
/// fitted in GHz/MHz/dB (frequencies as f = ω/2π); rmse_raw is in Hz.
DipFit fit_dip_curves(std::span<const DipCurveRow> rows, const DipModelParams& init,
                      const DipFitSetup& setup);

}  // namespace sqn
