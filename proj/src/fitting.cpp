#include "sqn/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <mutex>
#include <set>
#include <tuple>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_interp.h>

#include "sqn/error.hpp"
#include "sqn/steady_state.hpp"

namespace sqn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void validate(const SpectrumData& data) {
  const std::size_t m = data.f.size();
  if (data.has_phase() ? data.s33.size() != m : data.magnitude.size() != m) {
    throw ModelError("spectrum value column does not match the frequency column");
  }
  for (std::size_t i = 1; i < m; ++i) {
    if (!(data.f[i] > data.f[i - 1])) throw ModelError("spectrum frequencies must be strictly increasing");
  }
}

namespace {

class NaturalSpline {
 public:
  NaturalSpline(const std::vector<double>& x, const std::vector<double>& y)
      : x_(x), y_(y), interp_(gsl_interp_alloc(gsl_interp_cspline, x.size())),
        accel_(gsl_interp_accel_alloc()) {
    static std::once_flag once;
    std::call_once(once, [] { gsl_set_error_handler_off(); });
    if (gsl_interp_init(interp_, x_.data(), y_.data(), x_.size()) != GSL_SUCCESS) {
      release();
      throw ModelError("cubic spline initialisation failed");
    }
  }
  NaturalSpline(const NaturalSpline&) = delete;
  NaturalSpline& operator=(const NaturalSpline&) = delete;
  ~NaturalSpline() { release(); }

  double operator()(double x) const {
    double y = 0.0;
    if (gsl_interp_eval_e(interp_, x_.data(), y_.data(), x, accel_, &y) != GSL_SUCCESS) {
      throw ModelError("spline evaluated outside its data range");
    }
    return y;
  }

 private:
  void release() {
    if (interp_) gsl_interp_free(interp_);
    if (accel_) gsl_interp_accel_free(accel_);
    interp_ = nullptr;
    accel_ = nullptr;
  }
  std::vector<double> x_;
  std::vector<double> y_;
  gsl_interp* interp_;
  gsl_interp_accel* accel_;
};

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

NotchModel notch_from(const VectorXd& p) { return {p[0], p[1], p[2], p[3], p[4]}; }

// dS/dθ for θ = (a, f_r, Q_l, Q_c, φ) in the physics convention.
std::array<cplx, 5> notch_gradient(const NotchModel& m, double f) {
  const cplx i(0.0, 1.0);
  const double x = f / m.f_r - 1.0;
  const cplx den = 1.0 + 2.0 * i * m.q_l * x;
  const cplx t = (m.q_l / m.q_c_mag) * std::exp(i * m.phi) / den;
  return {1.0 - t,
          -m.a * t * 2.0 * i * m.q_l * f / (m.f_r * m.f_r * den),
          -m.a * (t / m.q_l - t * 2.0 * i * x / den),
          m.a * t / m.q_c_mag,
          -m.a * i * t};
}

FitResult finish(std::vector<std::string> names, const DoglegResult& res) {
  FitResult out;
  out.names = std::move(names);
  out.values = res.x;
  out.n_iter = res.iterations;
  out.converged = res.converged;
  out.reason = res.reason;
  const auto cov = gauss_newton_covariance(res.jacobian, res.residuals);
  out.covariance = cov.matrix;
  out.sigmas = cov.sigmas;
  out.correlation = cov.correlation;
  return out;
}

}  // namespace

SpectrumData resample(const SpectrumData& data, std::span<const double> f_new) {
  validate(data);
  if (data.size() < 3) throw WindowEmpty("spline needs at least three samples");
  SpectrumData out;
  out.f.assign(f_new.begin(), f_new.end());
  out.interpolated = true;
  if (data.has_phase()) {
    std::vector<double> re(data.size()), im(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      re[i] = data.s33[i].real();
      im[i] = data.s33[i].imag();
    }
    const NaturalSpline sr(data.f, re), si(data.f, im);
    out.s33.reserve(f_new.size());
    for (double f : f_new) out.s33.emplace_back(sr(f), si(f));
  } else {
    const NaturalSpline sm(data.f, data.magnitude);
    out.magnitude.reserve(f_new.size());
    for (double f : f_new) out.magnitude.push_back(sm(f));
  }
  return out;
}

SpectrumData preprocess(const SpectrumData& data, double f_lo, double f_hi, std::size_t n_interp) {
  validate(data);
  if (!(f_hi > f_lo)) throw WindowEmpty("window must have f_hi > f_lo");
  SpectrumData kept;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.f[i] < f_lo || data.f[i] > f_hi) continue;
    kept.f.push_back(data.f[i]);
    if (data.has_phase()) {
      kept.s33.push_back(data.s33[i]);
    } else {
      kept.magnitude.push_back(data.magnitude[i]);
    }
  }
  if (kept.size() < 8) throw WindowEmpty("fewer than 8 samples inside the fit window");
  if (n_interp < kept.size()) {
    throw ModelError("interpolation count must not be below the retained sample count");
  }
  std::vector<double> grid(n_interp);
  const double a = kept.f.front();
  const double b = kept.f.back();
  for (std::size_t i = 0; i < n_interp; ++i) {
    grid[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n_interp - 1);
  }
  grid.back() = b;
  return resample(kept, grid);
}

NotchModel initial_guess_notch(const SpectrumData& data) {
  validate(data);
  const std::size_t m = data.size();
  if (m < 8) throw NoDip("trace too short to locate a resonance");
  std::vector<double> mag(m);
  for (std::size_t i = 0; i < m; ++i) mag[i] = data.magnitude_at(i);

  const std::size_t edge = std::max<std::size_t>(m / 10, 2);
  std::vector<double> outer(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(edge));
  outer.insert(outer.end(), mag.end() - static_cast<std::ptrdiff_t>(edge), mag.end());
  const double level = median(outer);
  // noise from first differences so a sloped or asymmetric baseline does not count
  std::vector<double> diff(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) diff[i] = mag[i + 1] - mag[i];
  const double diff_mid = median(diff);
  for (auto& d : diff) d = std::abs(d - diff_mid);
  const double noise = 1.4826 * median(diff) / std::sqrt(2.0);

  std::size_t k = 0;
  for (std::size_t i = 1; i < m; ++i) {
    if (std::abs(mag[i] - level) > std::abs(mag[k] - level)) k = i;
  }
  const double depth = std::abs(mag[k] - level);
  if (!(depth > 10.0 * noise) || !(depth > 1e-9 * std::abs(level))) {
    throw NoDip("no resonance stands out of the off-resonant level");
  }

  const double half = depth / std::sqrt(2.0);
  std::size_t lo = k, hi = k;
  while (lo > 0 && std::abs(mag[lo] - level) > half) --lo;
  while (hi + 1 < m && std::abs(mag[hi] - level) > half) ++hi;
  double width = data.f[hi] - data.f[lo];
  if (!(width > 0.0)) width = data.f[std::min(k + 1, m - 1)] - data.f[k > 0 ? k - 1 : 0];

  NotchModel guess;
  guess.a = level;
  guess.f_r = data.f[k];
  guess.q_l = guess.f_r / width;
  guess.q_c_mag = 2.0 * guess.q_l;
  // a peak above the level is a notch turned by π
  guess.phi = mag[k] > level ? std::numbers::pi : 0.0;
  return guess;
}

double notch_rmse(const NotchModel& model, const SpectrumData& data, ImagConvention conv) {
  validate(data);
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const cplx s = notch_s33(model, data.f[i], conv);
    acc += data.has_phase() ? std::norm(s - data.s33[i])
                            : std::pow(std::abs(s) - data.magnitude[i], 2);
  }
  return std::sqrt(acc / static_cast<double>(data.size()));
}

NotchFit fit_notch(const SpectrumData& data, const NotchModel& init, const NotchFitOptions& opts) {
  validate(data);
  const VectorXd x0 = (VectorXd(5) << init.a, init.f_r, init.q_l, init.q_c_mag, init.phi).finished();
  if (!x0.allFinite()) throw ModelError("initial notch parameters must be finite");
  const std::size_t m = data.size();
  const bool complex_mode = data.has_phase();
  const auto conv = opts.convention;
  const auto rows = static_cast<Eigen::Index>(complex_mode ? 2 * m : m);

  LeastSquaresProblem problem;
  problem.residuals = [&](const VectorXd& p) {
    const NotchModel model = notch_from(p);
    VectorXd r(rows);
    for (std::size_t i = 0; i < m; ++i) {
      const cplx s = notch_s33(model, data.f[i], conv);
      if (complex_mode) {
        const cplx d = s - data.s33[i];
        r[static_cast<Eigen::Index>(2 * i)] = d.real();
        r[static_cast<Eigen::Index>(2 * i + 1)] = d.imag();
      } else {
        r[static_cast<Eigen::Index>(i)] = std::abs(s) - data.magnitude[i];
      }
    }
    return r;
  };
  problem.jacobian = [&](const VectorXd& p) {
    const NotchModel model = notch_from(p);
    MatrixXd jac(rows, 5);
    for (std::size_t i = 0; i < m; ++i) {
      auto grad = notch_gradient(model, data.f[i]);
      const cplx s = notch_s33(model, data.f[i], ImagConvention::Physics);
      for (int j = 0; j < 5; ++j) {
        if (complex_mode) {
          const cplx d = conv == ImagConvention::Physics ? grad[j] : std::conj(grad[j]);
          jac(static_cast<Eigen::Index>(2 * i), j) = d.real();
          jac(static_cast<Eigen::Index>(2 * i + 1), j) = d.imag();
        } else {
          jac(static_cast<Eigen::Index>(i), j) = (std::conj(s) * grad[j]).real() / std::abs(s);
        }
      }
    }
    return jac;
  };

  const auto res = dogleg(problem, x0, opts.solver);
  NotchFit out;
  out.model = notch_from(res.x);
  out.fit = finish({"a", "f_r_hz", "q_l", "q_c", "phi_rad"}, res);
  out.q_i = internal_quality_factor(out.model.q_l, out.model.q_c_mag);
  const double rmse_data = notch_rmse(out.model, data, conv);
  if (data.interpolated) {
    out.fit.rmse_interp = rmse_data;
    out.fit.rmse_raw = opts.raw ? notch_rmse(out.model, *opts.raw, conv) : rmse_data;
  } else {
    out.fit.rmse_raw = rmse_data;
  }
  return out;
}

DeviceParams dip_device(const DipModelParams& p, const DipFitSetup& setup, double b_gauss) {
  const auto dev =
      DeviceParams::with_equal_qubits(p.omega_c, p.gamma_c, setup.q_c, p.g, p.delta, setup.n_qubits);
  return b_gauss == 0.0 ? dev : apply_magnetic_field(dev, b_gauss, setup.field_rate);
}

std::vector<double> predict_dip_curves(const DipModelParams& p, const DipFitSetup& setup,
                                       std::span<const DipCurveRow> rows) {
  std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
  std::set<std::tuple<double, double, double>> keys;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!keys.emplace(rows[i].power_dbm, rows[i].f_pump, rows[i].b_gauss).second) {
      throw ModelError("duplicate (power, f_pump, b) row in dip-curve data");
    }
    groups[{rows[i].f_pump, rows[i].b_gauss}].push_back(i);
  }

  std::vector<double> out(rows.size());
  for (auto& [key, idx] : groups) {
    const auto [f_pump, b] = key;
    const DeviceParams dev = dip_device(p, setup, b);
    const double omega_0 = angular(f_pump);
    const bool down = setup.policy == BranchPolicy::DownSweep;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t c) {
      return down ? rows[a].power_dbm > rows[c].power_dbm : rows[a].power_dbm < rows[c].power_dbm;
    });

    if (setup.policy == BranchPolicy::Unspecified) {
      for (std::size_t i : idx) {
        const DriveParams drive(omega_0, power_to_flux(rows[i].power_dbm, p.attenuation_db, dev.omega_c()));
        const auto roots = solve_steady(dev, drive);
        const SteadyBranch* chosen = nullptr;
        for (const auto& br : roots.branches) {
          if (br.stability != Stability::Stable) continue;
          if (chosen) {
            throw BranchAmbiguity("data point lies in the bistable window and no sweep direction is given");
          }
          chosen = &br;
        }
        out[i] = bogoliubov_dip(dev, drive, chosen ? *chosen : roots.lowest()).f_dip;
      }
      continue;
    }

    std::vector<double> powers(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) powers[k] = rows[idx[k]].power_dbm;
    const auto sweep = quasi_static_sweep(dev, omega_0, powers, p.attenuation_db,
                                          down ? SweepDirection::Down : SweepDirection::Up);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const DriveParams drive(omega_0, power_to_flux(powers[k], p.attenuation_db, dev.omega_c()));
      out[idx[k]] = bogoliubov_dip(dev, drive, sweep[k].branch).f_dip;
    }
  }
  return out;
}

namespace {

VectorXd to_fit_units(const DipModelParams& p) {
  return (VectorXd(5) << hertz(p.omega_c) * 1e-9, hertz(p.gamma_c) * 1e-6, hertz(p.g) * 1e-6,
          hertz(p.delta) * 1e-9, p.attenuation_db)
      .finished();
}

DipModelParams from_fit_units(const VectorXd& x) {
  return {angular(x[0] * 1e9), angular(x[1] * 1e6), angular(x[2] * 1e6), angular(x[3] * 1e9), x[4]};
}

}  // namespace

DipFit fit_dip_curves(std::span<const DipCurveRow> rows, const DipModelParams& init,
                      const DipFitSetup& setup) {
  // A single pump frequency is accepted; g and Δ then show up as strongly
  // correlated in the covariance.
  if (rows.size() <= 5) throw ModelError("dip-curve fit needs more rows than parameters");

  const auto m = static_cast<Eigen::Index>(rows.size());
  auto residuals = [&](const VectorXd& x) {
    const auto model = predict_dip_curves(from_fit_units(x), setup, rows);
    VectorXd r(m);
    for (Eigen::Index i = 0; i < m; ++i) r[i] = (model[i] - rows[i].f_dip) * 1e-6;
    return r;
  };

  LeastSquaresProblem problem;
  problem.residuals = [&](const VectorXd& x) {
    try {
      return residuals(x);
    } catch (const BranchAmbiguity&) {
      throw;
    } catch (const Error&) {
      // Outside the admissible parameter domain; the trust region shrinks.
      return VectorXd::Constant(m, std::numeric_limits<double>::infinity()).eval();
    }
  };
  problem.jacobian = [&](const VectorXd& x) {
    return central_difference_jacobian(residuals, x, setup.solver.fd_step);
  };

  const auto res = dogleg(problem, to_fit_units(init), setup.solver);
  DipFit out;
  out.params = from_fit_units(res.x);
  out.fit = finish({"f_c_ghz", "gamma_c_mhz", "g_mhz", "delta_ghz", "attenuation_db"}, res);
  out.fit.rmse_raw = std::sqrt(res.residuals.squaredNorm() / static_cast<double>(m)) * 1e6;
  return out;
}

}  // namespace sqn
