#include "sqn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "sqn/error.hpp"

namespace sqn::io {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (v == 0.0) return "0";  // no "-0"
  return fmt::format("{:.17g}", v);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size()) throw ModelError("CSV row width does not match header");
  rows_.push_back(cells);
}

std::string CsvWriter::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

void CsvWriter::save(const fs::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError(path.string(), "cannot open for writing");
  os << str();
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

const json* walk(const json& j, const std::string& path) {
  const json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string(), "cannot open input file");
  CsvTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split(t);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ConfigError(fmt::format("{}:{}", path.string(), line_no),
                        fmt::format("expected {} columns, found {}", table.header.size(), cells.size()));
    }
    std::vector<double> values;
    values.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = parse_double(cells[c]);
      if (!v) {
        throw ConfigError(fmt::format("{}:{}", path.string(), line_no),
                          fmt::format("column '{}' is not a number: '{}'", table.header[c], cells[c]));
      }
      values.push_back(*v);
    }
    table.rows.push_back(std::move(values));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) throw ConfigError(path.string(), "file has no header row");
  return table;
}

SpectrumData read_spectrum(const fs::path& path) {
  const auto t = read_csv(path);
  const auto f = t.column("f_hz");
  if (!f) throw ConfigError(path.string(), "missing column f_hz");
  SpectrumData data;
  const auto re = t.column("re");
  const auto im = t.column("im");
  const auto mag = t.column("mag");
  if (!(re && im) && !mag) throw ConfigError(path.string(), "need columns re,im or mag");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    if (!data.f.empty() && !(r[*f] > data.f.back())) {
      throw ConfigError(fmt::format("{}:{}", path.string(), t.line_numbers[i]),
                        "frequencies must be strictly increasing");
    }
    data.f.push_back(r[*f]);
    if (re && im) {
      data.s33.emplace_back(r[*re], r[*im]);
    } else {
      data.magnitude.push_back(r[*mag]);
    }
  }
  return data;
}

std::vector<DipCurveRow> read_dip_curves(const fs::path& path) {
  const auto t = read_csv(path);
  std::array<std::size_t, 4> idx{};
  const std::array<const char*, 4> names{"power_dbm", "f_pump_hz", "f_dip_hz", "b_gauss"};
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto c = t.column(names[k]);
    if (!c) throw ConfigError(path.string(), fmt::format("missing column {}", names[k]));
    idx[k] = *c;
  }
  std::vector<DipCurveRow> rows;
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows) rows.push_back({r[idx[0]], r[idx[1]], r[idx[2]], r[idx[3]]});
  return rows;
}

std::string render_svg(const CsvWriter& csv, const std::string& title) {
  const auto& header = csv.header();
  const auto& rows = csv.rows();
  std::vector<std::size_t> numeric;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const bool ok = !rows.empty() && std::all_of(rows.begin(), rows.end(), [&](const auto& r) {
      const auto v = parse_double(r[c]);
      return v && std::isfinite(*v);
    });
    if (ok) numeric.push_back(c);
  }

  constexpr double width = 640.0, panel = 220.0, margin = 50.0;
  const std::size_t panels = numeric.size() > 1 ? numeric.size() - 1 : 0;
  const double height = 40.0 + panels * (panel + margin);
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<text x=\"{}\" y=\"20\">{}</text>\n",
      width, height, margin, title);
  if (panels == 0) return out + "</svg>\n";

  std::vector<double> xs;
  for (const auto& r : rows) xs.push_back(*parse_double(r[numeric[0]]));
  const auto [xmin_it, xmax_it] = std::minmax_element(xs.begin(), xs.end());
  const double x0 = *xmin_it, x1 = (*xmax_it > x0) ? *xmax_it : x0 + 1.0;

  for (std::size_t p = 0; p < panels; ++p) {
    const std::size_t col = numeric[p + 1];
    std::vector<double> ys;
    for (const auto& r : rows) ys.push_back(*parse_double(r[col]));
    const auto [ymin_it, ymax_it] = std::minmax_element(ys.begin(), ys.end());
    const double y0 = *ymin_it, y1 = (*ymax_it > y0) ? *ymax_it : y0 + 1.0;
    const double top = 40.0 + p * (panel + margin);
    out += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n", margin,
        top, width - 2 * margin, panel);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{} vs {}</text>\n", margin, top - 4, header[col],
                       header[numeric[0]]);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\">{}</text>\n", 2, top + 10,
                       format_number(y1));
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\">{}</text>\n", 2, top + panel,
                       format_number(y0));
    out += "<polyline fill=\"none\" stroke=\"#1f77b4\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double px = margin + (xs[i] - x0) / (x1 - x0) * (width - 2 * margin);
      const double py = top + panel - (ys[i] - y0) / (y1 - y0) * panel;
      out += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", px, py);
    }
    out += "\"/>\n";
  }
  return out + "</svg>\n";
}

json load_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string(), "cannot open configuration file");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
}

std::optional<double> find_number(const json& j, const std::string& path) {
  const json* node = walk(j, path);
  if (!node || node->is_null()) return std::nullopt;
  if (!node->is_number()) throw ConfigError(path, "expected a number");
  return node->get<double>();
}

double get_number(const json& j, const std::string& path) {
  const auto v = find_number(j, path);
  if (!v) throw ConfigError(path, "required key is missing");
  if (!std::isfinite(*v)) throw ConfigError(path, "must be finite");
  return *v;
}

std::string get_string(const json& j, const std::string& path, const std::string& fallback) {
  const json* node = walk(j, path);
  if (!node || node->is_null()) return fallback;
  if (!node->is_string()) throw ConfigError(path, "expected a string");
  return node->get<std::string>();
}

std::vector<double> get_list(const json& j, const std::string& path) {
  const json* node = walk(j, path);
  if (!node) throw ConfigError(path, "required key is missing");
  if (node->is_number()) return {node->get<double>()};
  if (!node->is_array()) throw ConfigError(path, "expected a number or an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node->size(); ++i) {
    if (!(*node)[i].is_number()) throw ConfigError(fmt::format("{}[{}]", path, i), "expected a number");
    out.push_back((*node)[i].get<double>());
  }
  if (out.empty()) throw ConfigError(path, "list is empty");
  return out;
}

std::vector<double> get_grid(const json& j, const std::string& path) {
  const json* node = walk(j, path);
  if (!node) throw ConfigError(path, "required key is missing");
  if (node->is_object()) {
    const double a = get_number(j, path + ".start");
    const double b = get_number(j, path + ".stop");
    const double n = get_number(j, path + ".points");
    if (n < 1 || n != std::floor(n)) throw ConfigError(path + ".points", "must be a positive integer");
    const auto m = static_cast<std::size_t>(n);
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
      out[i] = m == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(m - 1);
    }
    if (m > 1) out.back() = b;
    return out;
  }
  if (node->is_array() && node->empty()) throw ConfigError(path, "grid is empty");
  return get_list(j, path);
}

DeviceParams parse_device(const json& config) {
  if (!walk(config, "device")) throw ConfigError("device", "section is missing");
  const double omega_c = angular(get_number(config, "device.f_c_ghz") * 1e9);
  const double q_c = get_number(config, "device.q_c");
  const auto gamma_mhz = find_number(config, "device.gamma_c_mhz");
  const auto q_i = find_number(config, "device.q_i");
  if (gamma_mhz.has_value() == q_i.has_value()) {
    throw ConfigError(gamma_mhz ? "device.q_i" : "device.gamma_c_mhz",
                      "give exactly one of device.gamma_c_mhz or device.q_i");
  }

  std::vector<Qubit> qubits;
  if (const json* list = walk(config, "device.qubits")) {
    if (!list->is_array()) throw ConfigError("device.qubits", "expected an array");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string key = fmt::format("device.qubits[{}]", i);
      const json& q = (*list)[i];
      if (!q.is_object()) throw ConfigError(key, "expected an object");
      // look keys up through a one-entry wrapper so errors carry the full path
      const json wrapper{{"device", {{fmt::format("qubits[{}]", i), q}}}};
      const auto field = [&](const char* name) { return key + "." + name; };
      const double g = angular(get_number(wrapper, field("g_mhz")) * 1e6);
      const auto delta = find_number(wrapper, field("delta_ghz"));
      const auto f_q = find_number(wrapper, field("f_qubit_ghz"));
      if (delta.has_value() == f_q.has_value()) {
        throw ConfigError(key, "give exactly one of delta_ghz or f_qubit_ghz");
      }
      const double omega_q = delta ? omega_c - angular(*delta * 1e9) : angular(*f_q * 1e9);
      int count = 1;
      if (const auto n = find_number(wrapper, field("n"))) {
        if (*n < 0 || *n != std::floor(*n)) throw ConfigError(key + ".n", "must be a non-negative integer");
        count = static_cast<int>(*n);
      }
      for (int k = 0; k < count; ++k) qubits.push_back({g, omega_q});
    }
  }

  try {
    if (gamma_mhz) {
      return DeviceParams(omega_c, angular(*gamma_mhz * 1e6), q_c, std::nullopt, std::move(qubits));
    }
    return DeviceParams::from_quality_factors(omega_c, q_c, *q_i, std::move(qubits));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("device", e.what());
  }
}

DipModelParams parse_dip_model(const json& config, int* n_qubits) {
  const DeviceParams dev = parse_device(config);
  if (dev.qubits().empty() || !dev.has_equal_qubits()) {
    throw ConfigError("device.qubits", "dip-curve fits need a nonempty set of identical qubits");
  }
  DipModelParams p;
  p.omega_c = dev.omega_c();
  p.gamma_c = dev.gamma_c();
  p.g = dev.qubits()[0].g;
  p.delta = dev.omega_c() - dev.qubits()[0].omega;
  p.attenuation_db = get_number(config, "drive.attenuation_db");
  if (n_qubits) *n_qubits = static_cast<int>(dev.qubits().size());
  return p;
}

SweepDirection parse_direction(const json& config, const std::string& path, SweepDirection fallback) {
  const std::string s = get_string(config, path, "");
  if (s.empty()) return fallback;
  if (s == "up") return SweepDirection::Up;
  if (s == "down") return SweepDirection::Down;
  throw ConfigError(path, "expected \"up\" or \"down\"");
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(threads, 1u), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  // Errors are kept per index so the reported one does not depend on timing.
  std::mutex mu;
  std::size_t next = 0;
  std::vector<std::exception_ptr> errors(n);
  auto work = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= n) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace sqn::io
