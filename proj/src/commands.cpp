#include "sqn/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "sqn/bistability.hpp"
#include "sqn/dynamics.hpp"
#include "sqn/error.hpp"
#include "sqn/fitting.hpp"
#include "sqn/response.hpp"
#include "sqn/steady_state.hpp"

namespace sqn::cli {

namespace fs = std::filesystem;
using io::format_number;
using io::json;

namespace {

std::string suffix(std::size_t k, std::size_t total) {
  return total == 1 ? std::string() : fmt::format("_{}", k);
}

void emit(Bundle& bundle, const Options& opts, const std::string& stem, const io::CsvWriter& csv) {
  const fs::path path = opts.out_dir / (stem + ".csv");
  csv.save(path);
  bundle.files.push_back(path);
  if (opts.svg) {
    const fs::path svg = opts.out_dir / (stem + ".svg");
    std::ofstream os(svg, std::ios::binary);
    if (!os) throw ConfigError(svg.string(), "cannot open for writing");
    os << io::render_svg(csv, stem);
    bundle.files.push_back(svg);
  }
}

void emit_json(Bundle& bundle, const Options& opts, const std::string& name, const json& doc) {
  const fs::path path = opts.out_dir / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError(path.string(), "cannot open for writing");
  os << doc.dump(2) << '\n';
  bundle.files.push_back(path);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> pump_frequencies(const json& config) {
  auto f = io::get_list(config, "drive.f_pump_ghz");
  for (auto& v : f) v *= 1e9;
  return f;
}

double field_rate(const json& config) {
  const auto mhz = io::find_number(config, "field.rate_mhz_per_gauss");
  return mhz ? angular(*mhz * 1e6) : constants::qubit_shift_per_gauss;
}

std::vector<double> field_values(const json& config) {
  if (config.contains("field") && config["field"].contains("b_gauss")) return io::get_list(config, "field.b_gauss");
  return {0.0};
}

std::vector<double> ordered(std::vector<double> grid, SweepDirection dir) {
  std::sort(grid.begin(), grid.end());
  if (std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw ConfigError("drive.power_dbm", "grid contains duplicate powers");
  }
  if (dir == SweepDirection::Down) std::reverse(grid.begin(), grid.end());
  return grid;
}

json fit_report(const FitResult& fit) {
  json doc;
  doc["names"] = fit.names;
  json params = json::object(), sigmas = json::object();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    params[fit.names[i]] = fit.values[static_cast<Eigen::Index>(i)];
    sigmas[fit.names[i]] = number_or_null(fit.sigmas[static_cast<Eigen::Index>(i)]);
  }
  doc["params"] = params;
  doc["sigmas"] = sigmas;
  json cov = json::array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) cov.push_back(number_or_null(fit.covariance(r, c)));
  }
  doc["covariance"] = cov;
  doc["rmse_raw"] = fit.rmse_raw;
  doc["rmse_interp"] = fit.rmse_interp ? json(*fit.rmse_interp) : json(nullptr);
  doc["n_iter"] = fit.n_iter;
  doc["converged"] = fit.converged;
  doc["stop_reason"] = fit.reason;
  return doc;
}

fs::path data_path(const json& config, const Options& opts) {
  if (opts.data) return *opts.data;
  const std::string p = io::get_string(config, "fit.data", "");
  if (p.empty()) throw ConfigError("fit.data", "no input file given (use --data or fit.data)");
  return p;
}

}  // namespace

Bundle cmd_steady(const json& config, const Options& opts) {
  const DeviceParams dev = io::parse_device(config);
  const auto pumps = pump_frequencies(config);
  const auto powers = io::get_grid(config, "drive.power_dbm");
  const double atten = io::get_number(config, "drive.attenuation_db");

  Bundle bundle;
  for (std::size_t k = 0; k < pumps.size(); ++k) {
    const double omega_0 = angular(pumps[k]);
    std::vector<BranchSet> sets(powers.size());
    io::parallel_for(powers.size(), opts.threads, [&](std::size_t i) {
      sets[i] = solve_steady(dev, DriveParams(omega_0, power_to_flux(powers[i], atten, dev.omega_c())));
    });
    io::CsvWriter csv({"power_dbm", "n_ph", "branch", "stability", "omega_s_mhz"});
    for (std::size_t i = 0; i < powers.size(); ++i) {
      for (std::size_t b = 0; b < sets[i].size(); ++b) {
        const auto& br = sets[i][b];
        csv.row({format_number(powers[i]), format_number(br.n_ph), std::to_string(b),
                 to_string(br.stability), format_number(hertz(br.omega_s) * 1e-6)});
      }
    }
    emit(bundle, opts, "steady" + suffix(k, pumps.size()), csv);
  }
  return bundle;
}

Bundle cmd_dip_sweep(const json& config, const Options& opts) {
  const DeviceParams base = io::parse_device(config);
  const auto pumps = pump_frequencies(config);
  const auto direction = io::parse_direction(config, "sweep.direction", SweepDirection::Up);
  const auto powers = ordered(io::get_grid(config, "drive.power_dbm"), direction);
  const double atten = io::get_number(config, "drive.attenuation_db");
  const auto fields = field_values(config);
  const double rate = field_rate(config);

  struct Job {
    double f_pump;
    double b;
  };
  std::vector<Job> jobs;
  for (double b : fields) {
    for (double f : pumps) jobs.push_back({f, b});
  }
  std::vector<std::vector<SweepPoint>> sweeps(jobs.size());
  std::vector<std::vector<DipPrediction>> dips(jobs.size());
  io::parallel_for(jobs.size(), opts.threads, [&](std::size_t j) {
    const DeviceParams dev = jobs[j].b == 0.0 ? base : apply_magnetic_field(base, jobs[j].b, rate);
    const double omega_0 = angular(jobs[j].f_pump);
    sweeps[j] = quasi_static_sweep(dev, omega_0, powers, atten, direction);
    for (const auto& pt : sweeps[j]) {
      const DriveParams drive(omega_0, power_to_flux(pt.power_dbm, atten, dev.omega_c()));
      dips[j].push_back(bogoliubov_dip(dev, drive, pt.branch));
    }
  });

  Bundle bundle;
  io::CsvWriter all({"power_dbm", "f_pump_hz", "f_dip_hz", "b_gauss"});
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    io::CsvWriter csv({"power_dbm", "f_dip_ghz", "f_idler_ghz", "plateau", "branch"});
    for (std::size_t i = 0; i < sweeps[j].size(); ++i) {
      const auto& pt = sweeps[j][i];
      const auto& d = dips[j][i];
      csv.row({format_number(pt.power_dbm), format_number(d.f_dip * 1e-9), format_number(d.f_idler * 1e-9),
               d.plateau ? "1" : "0", std::to_string(pt.branch_index)});
      all.row({format_number(pt.power_dbm), format_number(jobs[j].f_pump), format_number(d.f_dip),
               format_number(jobs[j].b)});
    }
    emit(bundle, opts, "dip_sweep" + suffix(j, jobs.size()), csv);
  }
  emit(bundle, opts, "dip_curves", all);
  return bundle;
}

Bundle cmd_phase_diagram(const json& config, const Options& opts) {
  const json defaults = {{"phase_diagram",
                          {{"s", {{"start", 1.0}, {"stop", 4.0}, {"points", 301}}},
                           {"x", {{"start", 0.1}, {"stop", 6.0}, {"points", 60}}},
                           {"y", {{"start", 0.02}, {"stop", 2.0}, {"points", 50}}}}}};
  auto pick = [&](const std::string& key) {
    return config.contains("phase_diagram") && config["phase_diagram"].contains(key)
               ? io::get_grid(config, "phase_diagram." + key)
               : io::get_grid(defaults, "phase_diagram." + key);
  };
  const auto s_grid = pick("s");
  const auto xs = pick("x");
  const auto ys = pick("y");
  const auto oracle = io::find_number(config, "phase_diagram.oracle_points").value_or(0.0);

  Bundle bundle;
  io::CsvWriter boundary({"s", "x", "y"});
  for (double s : s_grid) {
    if (!(s >= 1.0)) throw ConfigError("phase_diagram.s", "boundary parameter must be at least 1");
    const auto p = boundary_point(s);
    boundary.row({format_number(s), format_number(p.x), format_number(p.y)});
  }
  emit(bundle, opts, "boundary", boundary);

  std::vector<std::string> header{"x", "y", "region"};
  if (oracle > 0) {
    header.push_back("oracle_region");
    header.push_back("oracle_roots");
  }
  const std::size_t cells = xs.size() * ys.size();
  std::vector<OracleVerdict> verdicts(cells);
  if (oracle > 0) {
    io::parallel_for(cells, opts.threads, [&](std::size_t c) {
      verdicts[c] = brute_force_region(xs[c / ys.size()], ys[c % ys.size()], 20'000, static_cast<int>(oracle));
    });
  }
  io::CsvWriter grid(header);
  for (std::size_t c = 0; c < cells; ++c) {
    const double x = xs[c / ys.size()];
    const double y = ys[c % ys.size()];
    std::vector<std::string> row{format_number(x), format_number(y), to_string(classify_xy(x, y))};
    if (oracle > 0) {
      row.push_back(to_string(verdicts[c].region));
      row.push_back(std::to_string(verdicts[c].roots));
    }
    grid.row(row);
  }
  emit(bundle, opts, "regions", grid);

  if (config.contains("device") && config.contains("drive") && config["drive"].contains("f_pump_ghz")) {
    const DeviceParams dev = io::parse_device(config);
    io::CsvWriter points({"f_pump_ghz", "x", "y", "region"});
    for (double f : pump_frequencies(config)) {
      const auto p = classify(dev, angular(f));
      points.row({format_number(f * 1e-9), format_number(p.x), format_number(p.y), to_string(p.region)});
    }
    emit(bundle, opts, "device_points", points);
  }
  return bundle;
}

Bundle cmd_hysteresis(const json& config, const Options& opts) {
  const DeviceParams dev = io::parse_device(config);
  const auto pumps = pump_frequencies(config);
  const auto powers = io::get_grid(config, "drive.power_dbm");
  const double atten = io::get_number(config, "drive.attenuation_db");

  std::vector<HysteresisLoop> loops(pumps.size());
  io::parallel_for(pumps.size(), opts.threads, [&](std::size_t k) {
    loops[k] = hysteresis_loop(dev, angular(pumps[k]), powers, atten);
  });

  Bundle bundle;
  io::CsvWriter summary({"f_pump_ghz", "loop_area_hz_db", "up_jump_dbm", "down_jump_dbm", "p_crit_dbm"});
  for (std::size_t k = 0; k < pumps.size(); ++k) {
    io::CsvWriter csv({"power_dbm", "f_dip_ghz", "n_ph", "direction"});
    for (const auto& p : loops[k].up) {
      csv.row({format_number(p.power_dbm), format_number(p.f_dip * 1e-9), format_number(p.n_ph), "up"});
    }
    for (const auto& p : loops[k].down) {
      csv.row({format_number(p.power_dbm), format_number(p.f_dip * 1e-9), format_number(p.n_ph), "down"});
    }
    emit(bundle, opts, "hysteresis" + suffix(k, pumps.size()), csv);

    double p_crit_dbm = std::nan("");
    if (dev.has_equal_qubits() && !dev.qubits().empty() && angular(pumps[k]) != dev.omega_c()) {
      if (const auto cp = find_critical_point(dev, angular(pumps[k]))) {
        p_crit_dbm = 10.0 * std::log10(cp->p_crit * 1e3) + atten;
      }
    }
    const auto opt = [](const std::optional<double>& v) { return format_number(v.value_or(std::nan(""))); };
    summary.row({format_number(pumps[k] * 1e-9), format_number(loops[k].loop_area), opt(loops[k].up_jump_dbm),
                 opt(loops[k].down_jump_dbm), format_number(p_crit_dbm)});
  }
  emit(bundle, opts, "hysteresis_summary", summary);
  return bundle;
}

Bundle cmd_dynamics(const json& config, const Options& opts) {
  const DeviceParams dev = io::parse_device(config);
  const double f_pump = io::find_number(config, "dynamics.f_pump_ghz")
                            ? io::get_number(config, "dynamics.f_pump_ghz") * 1e9
                            : pump_frequencies(config).front();
  const double omega_0 = angular(f_pump);
  const double atten = io::get_number(config, "drive.attenuation_db");
  const double tol = io::find_number(config, "dynamics.tol").value_or(1e-9);
  const std::string kind = io::get_string(config, "dynamics.envelope", "constant");
  const double samples = io::find_number(config, "dynamics.samples").value_or(4001);
  if (samples < 2 || samples != std::floor(samples)) {
    throw ConfigError("dynamics.samples", "must be an integer of at least 2");
  }
  const double inv_gamma = 1.0 / dev.gamma_c();
  double t_end = 40.0 * inv_gamma;
  if (const auto us = io::find_number(config, "dynamics.t_end_us")) t_end = *us * 1e-6;
  if (const auto g = io::find_number(config, "dynamics.t_end_gamma")) t_end = *g * inv_gamma;
  if (!(t_end > 0.0)) throw ConfigError("dynamics.t_end_us", "must be positive");

  DriveEnvelope env;
  double hold_flux = 0.0;
  std::optional<ProbeToneDrive> probe;
  if (kind == "constant" || kind == "probe") {
    hold_flux = power_to_flux(io::get_number(config, "dynamics.power_dbm"), atten, dev.omega_c());
    if (kind == "probe") {
      const double ratio = io::get_number(config, "dynamics.probe.ratio");
      const double nu = angular(io::get_number(config, "dynamics.probe.detuning_mhz") * 1e6);
      if (nu == 0.0) throw ConfigError("dynamics.probe.detuning_mhz", "must be nonzero");
      probe = ProbeToneDrive{cplx(std::sqrt(hold_flux)), cplx(ratio * std::sqrt(hold_flux)), nu};
      env = *probe;
    } else {
      env = ConstantDrive{cplx(std::sqrt(hold_flux))};
    }
  } else if (kind == "ramp") {
    const auto p = io::get_list(config, "dynamics.ramp.power_dbm");
    const auto t = io::get_list(config, "dynamics.ramp.t_us");
    if (p.size() != t.size()) throw ConfigError("dynamics.ramp", "power_dbm and t_us lengths differ");
    PowerRamp ramp;
    for (std::size_t i = 0; i < p.size(); ++i) {
      ramp.times.push_back(t[i] * 1e-6);
      ramp.flux.push_back(power_to_flux(p[i], atten, dev.omega_c()));
    }
    hold_flux = ramp.flux.back();
    env = std::move(ramp);
  } else {
    throw ConfigError("dynamics.envelope", "expected \"constant\", \"probe\" or \"ramp\"");
  }

  cplx psi0(io::find_number(config, "dynamics.psi0_re").value_or(0.0),
            io::find_number(config, "dynamics.psi0_im").value_or(0.0));
  const std::string start = io::get_string(config, "dynamics.initial", "");
  if (!start.empty()) {
    if (hold_flux == 0.0) throw ConfigError("dynamics.initial", "needs a nonzero drive");
    const auto roots = solve_steady(dev, DriveParams(omega_0, hold_flux));
    if (start == "lowest") {
      psi0 = roots.lowest().psi;
    } else if (start == "highest") {
      psi0 = roots.highest().psi;
    } else if (start == "middle") {
      if (roots.size() < 3) throw ConfigError("dynamics.initial", "no middle branch at this drive");
      psi0 = roots[1].psi;
    } else {
      throw ConfigError("dynamics.initial", "expected \"lowest\", \"middle\" or \"highest\"");
    }
    psi0 *= 1.0 + io::find_number(config, "dynamics.perturbation").value_or(0.0);
  }

  // With a probe tone the tail of the window spans a whole number of probe
  // periods so the two spectral lines are orthogonal on the sample grid.
  IntegrateOptions iopts;
  iopts.tol = tol;
  double t_from = 0.0;
  const auto m = static_cast<std::size_t>(samples);
  if (probe) {
    t_from = io::find_number(config, "dynamics.settle_gamma").value_or(20.0) * inv_gamma;
    const double period = constants::two_pi / std::abs(probe->nu);
    const double cycles = std::max(1.0, std::ceil((t_end - t_from) / period));
    t_end = t_from + cycles * period;
    const std::size_t m_settle = m / 4;
    const std::size_t m_window = m - m_settle;
    for (std::size_t i = 0; i < m_settle; ++i) iopts.sample_times.push_back(t_from * static_cast<double>(i) / m_settle);
    for (std::size_t i = 0; i < m_window; ++i) {
      iopts.sample_times.push_back(t_from + (t_end - t_from) * static_cast<double>(i) / m_window);
    }
  } else {
    iopts.samples = static_cast<int>(m);
  }
  const Trajectory traj = integrate(dev, omega_0, env, psi0, 0.0, t_end, iopts);

  Bundle bundle;
  io::CsvWriter csv({"t_s", "re_psi", "im_psi", "n_ph"});
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    csv.row({format_number(traj.times[i]), format_number(traj.psi[i].real()), format_number(traj.psi[i].imag()),
             format_number(std::norm(traj.psi[i]))});
  }
  emit(bundle, opts, "trajectory", csv);

  if (probe) {
    const cplx mean = spectral_line(traj, cplx(0.0), 0.0, t_from);
    const cplx u = spectral_line(traj, mean, probe->nu, t_from);
    const cplx v = spectral_line(traj, mean, -probe->nu, t_from);
    const auto roots = solve_steady(dev, DriveParams(omega_0, hold_flux));
    const SteadyBranch* nearest = &roots.lowest();
    for (const auto& br : roots.branches) {
      if (std::abs(br.psi - mean) < std::abs(nearest->psi - mean)) nearest = &br;
    }
    const auto lin = probe_amplitudes(dev, DriveParams(omega_0, hold_flux), nearest->psi, probe->nu, probe->xp);
    const double xp = std::abs(probe->xp);
    io::CsvWriter lines({"line", "offset_hz", "dft_amplitude", "linear_response_amplitude"});
    lines.row({"signal", format_number(hertz(probe->nu)), format_number(std::abs(u) / xp),
               format_number(std::abs(lin.u) / xp)});
    lines.row({"idler", format_number(-hertz(probe->nu)), format_number(std::abs(v) / xp),
               format_number(std::abs(lin.v) / xp)});
    emit(bundle, opts, "probe_lines", lines);
  }
  return bundle;
}

Bundle cmd_fit_notch(const json& config, const Options& opts) {
  const auto path = data_path(config, opts);
  const SpectrumData raw = io::read_spectrum(path);
  SpectrumData data = raw;
  if (config.contains("fit") && config["fit"].contains("window_ghz")) {
    const auto w = io::get_list(config, "fit.window_ghz");
    if (w.size() != 2) throw ConfigError("fit.window_ghz", "expected [lo, hi]");
    std::size_t inside = 0;
    for (double f : raw.f) inside += (f >= w[0] * 1e9 && f <= w[1] * 1e9) ? 1 : 0;
    const double n_interp = io::find_number(config, "fit.n_interp").value_or(static_cast<double>(inside));
    data = preprocess(raw, w[0] * 1e9, w[1] * 1e9, static_cast<std::size_t>(n_interp));
  }

  NotchFitOptions fopts;
  const std::string conv = io::get_string(config, "fit.convention", "engineering");
  if (conv == "physics") {
    fopts.convention = ImagConvention::Physics;
  } else if (conv != "engineering") {
    throw ConfigError("fit.convention", "expected \"physics\" or \"engineering\"");
  }
  if (data.interpolated) fopts.raw = raw;

  NotchModel init = initial_guess_notch(data);
  if (config.contains("fit") && config["fit"].contains("init")) {
    init.a = io::get_number(config, "fit.init.a");
    init.f_r = io::get_number(config, "fit.init.f_r_ghz") * 1e9;
    init.q_l = io::get_number(config, "fit.init.q_l");
    init.q_c_mag = io::get_number(config, "fit.init.q_c");
    init.phi = io::get_number(config, "fit.init.phi");
  }
  const NotchFit result = fit_notch(data, init, fopts);

  Bundle bundle;
  json doc = fit_report(result.fit);
  doc["q_i"] = number_or_null(result.q_i);
  doc["mode"] = data.has_phase() ? "complex" : "magnitude";
  doc["convention"] = conv;
  emit_json(bundle, opts, "fit_report.json", doc);

  io::CsvWriter overlay({"f_hz", "data", "fit"});
  for (std::size_t i = 0; i < data.size(); ++i) {
    overlay.row({format_number(data.f[i]), format_number(data.magnitude_at(i)),
                 format_number(std::abs(notch_s33(result.model, data.f[i], fopts.convention)))});
  }
  emit(bundle, opts, "fit_overlay", overlay);
  return bundle;
}

Bundle cmd_fit_dips(const json& config, const Options& opts) {
  const auto rows = io::read_dip_curves(data_path(config, opts));
  DipFitSetup setup;
  const DipModelParams init = io::parse_dip_model(config, &setup.n_qubits);
  setup.q_c = io::get_number(config, "device.q_c");
  setup.field_rate = field_rate(config);
  const std::string dir = io::get_string(config, "sweep.direction", "up");
  if (dir == "up") {
    setup.policy = BranchPolicy::UpSweep;
  } else if (dir == "down") {
    setup.policy = BranchPolicy::DownSweep;
  } else if (dir == "unspecified") {
    setup.policy = BranchPolicy::Unspecified;
  } else {
    throw ConfigError("sweep.direction", "expected \"up\", \"down\" or \"unspecified\"");
  }
  const DipFit result = fit_dip_curves(rows, init, setup);

  Bundle bundle;
  json doc = fit_report(result.fit);
  doc["n_qubits"] = setup.n_qubits;
  doc["q_c"] = setup.q_c;
  emit_json(bundle, opts, "fit_report.json", doc);

  const auto model = predict_dip_curves(result.params, setup, rows);
  io::CsvWriter overlay({"power_dbm", "f_pump_hz", "b_gauss", "data", "fit"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    overlay.row({format_number(rows[i].power_dbm), format_number(rows[i].f_pump), format_number(rows[i].b_gauss),
                 format_number(rows[i].f_dip), format_number(model[i])});
  }
  emit(bundle, opts, "fit_overlay", overlay);
  return bundle;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"steady",     "dip-sweep", "phase-diagram", "hysteresis",
                                              "dynamics",   "fit-notch", "fit-dips"};
  return names;
}

int run(const std::string& command, const json& config, const Options& opts, std::ostream& err) {
  using Fn = Bundle (*)(const json&, const Options&);
  static const std::map<std::string, Fn> table{
      {"steady", cmd_steady},         {"dip-sweep", cmd_dip_sweep}, {"phase-diagram", cmd_phase_diagram},
      {"hysteresis", cmd_hysteresis}, {"dynamics", cmd_dynamics},   {"fit-notch", cmd_fit_notch},
      {"fit-dips", cmd_fit_dips}};
  const auto it = table.find(command);
  if (it == table.end()) {
    err << "unknown subcommand: " << command << '\n';
    return kUsage;
  }
  try {
    fs::create_directories(opts.out_dir);
    it->second(config, opts);
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  }
}

}  // namespace sqn::cli
