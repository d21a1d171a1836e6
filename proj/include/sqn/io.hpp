#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqn/dynamics.hpp"
#include "sqn/fitting.hpp"
#include "sqn/model.hpp"

namespace sqn::io {

using nlohmann::json;

// ---- CSV ----------------------------------------------------------------

/// Full-precision (17 significant digits) rendering used for every number.
std::string format_number(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;  // 1-based source line of each row

  /// Column index by name, or nullopt.
  std::optional<std::size_t> column(const std::string& name) const;
};

/// Numeric CSV with a header row. Blank lines and lines starting with '#' are
/// skipped. Throws ConfigError naming the file and line on malformed input.
CsvTable read_csv(const std::filesystem::path& path);

/// `f_hz,re,im` or `f_hz,mag`.
SpectrumData read_spectrum(const std::filesystem::path& path);
/// `power_dbm,f_pump_hz,f_dip_hz,b_gauss`.
std::vector<DipCurveRow> read_dip_curves(const std::filesystem::path& path);

/// Line plot of every numeric column against the first, one polyline per
/// column, as a standalone SVG document. Non-numeric columns are skipped.
std::string render_svg(const CsvWriter& csv, const std::string& title);

// ---- configuration ------------------------------------------------------

json load_json(const std::filesystem::path& path);

/// Checked accessors. Missing or mistyped keys throw ConfigError carrying the
/// dotted key path.
double get_number(const json& j, const std::string& path);
std::optional<double> find_number(const json& j, const std::string& path);
std::string get_string(const json& j, const std::string& path, const std::string& fallback);
/// Either an explicit array or {"start", "stop", "points"} (inclusive,
/// uniform). Throws ConfigError when the result is empty.
std::vector<double> get_grid(const json& j, const std::string& path);
/// Scalar or array of numbers.
std::vector<double> get_list(const json& j, const std::string& path);

/// The "device" section:
///   f_c_ghz, q_c, exactly one of gamma_c_mhz (γ_c/2π) or q_i,
///   qubits: [{g_mhz, delta_ghz, n} | {g_mhz, f_qubit_ghz}]
DeviceParams parse_device(const json& config);

/// Identical-qubit view of the device section for dip-curve fits.
DipModelParams parse_dip_model(const json& config, int* n_qubits);

SweepDirection parse_direction(const json& config, const std::string& path,
                               SweepDirection fallback);

// ---- execution ----------------------------------------------------------

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots; the first exception is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace sqn::io
