#include "sideband/io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "sideband/error.hpp"

namespace sideband {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double require_number(const json& j, const std::string& key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorKind::Config, "missing required field '" + path + "." + key + "'");
  if (!it->is_number())
    throw Error(ErrorKind::Config, "field '" + path + "." + key + "' must be a number");
  return it->get<double>();
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  return require_number(j, key, path);
}

json to_json(const CircuitParams& p) {
  return {{"omega_t0_hz", p.omega_t0}, {"omega_r0_hz", p.omega_r0}, {"g_hz", p.g},
          {"chi_t_hz", p.chi_t}};
}

json to_json(const NormalModeParams& p) {
  return {{"omega_t1_hz", p.omega_t1}, {"omega_r1_hz", p.omega_r1}, {"chi_t_hz", p.chi_t},
          {"chi_r_hz", p.chi_r},       {"chi_tr_hz", p.chi_tr()}};
}

json to_json(const ObservedParams& p) {
  return {{"omega_t_hz", p.omega_t}, {"omega_r_hz", p.omega_r}, {"A_t_hz", p.A_t},
          {"A_r_hz", p.A_r},         {"A_tr_hz", p.A_tr}};
}

json to_json(const EitParams& p) {
  json j;
  for (const auto& name : EitParams::field_names()) j[name] = p.get(name);
  j["interaction"] = to_string(p.interaction);
  j["dims"] = {p.dims.n_t, p.dims.n_r};
  return j;
}

json to_json(const SidebandPrediction& p) {
  return {{"interaction", to_string(p.interaction)},
          {"variant", to_string(p.variant)},
          {"amp_d_hz", p.amp_d},
          {"omega_d_hz", p.omega_d},
          {"delta_hz", p.delta},
          {"sigma_hz", p.sigma},
          {"d_omega_t_hz", p.delta_omega_t},
          {"d_omega_r_hz", p.delta_omega_r},
          {"omega_sb_hz", p.omega_sb},
          {"omega_mat_prime_hz", p.omega_mat_prime}};
}

json to_json(const TermCatalogEntry& e, const SidebandModel& m, const DriveConfig& d) {
  json j{{"label", e.label},
         {"order", e.order},
         {"prefactor_hz", e.prefactor},
         {"matching_condition", e.matching_condition},
         {"amp_d_hz", d.amp_d},
         {"omega_d_hz", d.omega_d},
         {"basis", to_string(m.basis)}};
  j["matching_frequency_hz"] = e.matching_frequency ? json(*e.matching_frequency) : json(nullptr);
  return j;
}

json to_json(const FitResult& r) {
  json est = json::array();
  for (const auto& e : r.estimates)
    est.push_back({{"name", e.name}, {"value_hz", e.value}, {"stderr_hz", e.stderr_value}});
  return {{"estimates", est},
          {"residual_norm", r.residual_norm},
          {"converged", r.converged},
          {"iterations", r.iterations}};
}

CircuitParams circuit_from_json(const json& j, const std::string& path) {
  return CircuitParams{require_number(j, "omega_t0_hz", path), require_number(j, "omega_r0_hz", path),
                       require_number(j, "g_hz", path), require_number(j, "chi_t_hz", path)};
}

NormalModeParams normal_modes_from_json(const json& j, const std::string& path) {
  return NormalModeParams{require_number(j, "omega_t1_hz", path),
                          require_number(j, "omega_r1_hz", path),
                          require_number(j, "chi_t_hz", path), require_number(j, "chi_r_hz", path)};
}

ObservedParams observed_from_json(const json& j, const std::string& path) {
  return ObservedParams{require_number(j, "omega_t_hz", path), require_number(j, "omega_r_hz", path),
                        require_number(j, "A_t_hz", path), number_or(j, "A_r_hz", 0.0, path),
                        require_number(j, "A_tr_hz", path)};
}

EitParams eit_from_json(const json& j, const EitParams& base, const std::string& path) {
  EitParams p = base;
  for (const auto& name : EitParams::field_names())
    if (j.contains(name)) p.set(name, require_number(j, name, path));
  p.kappa = require_number(j, "kappa_hz", path);
  p.gamma = require_number(j, "gamma_hz", path);
  if (j.contains("interaction")) p.interaction = parse_interaction(j.at("interaction").get<std::string>());
  if (j.contains("dims")) {
    const auto& d = j.at("dims");
    if (!d.is_array() || d.size() != 2)
      throw Error(ErrorKind::Config, "field '" + path + ".dims' must be [n_t, n_r]");
    p.dims = Dims{d[0].get<int>(), d[1].get<int>()};
  }
  return p;
}

void write_series_csv(std::ostream& os, const PulseLengthSeries& series, double contrast) {
  for (std::size_t i = 0; i < series.flat_lengths.size(); ++i) {
    os << format_number(series.tone.omega_d) << ',' << format_number(series.flat_lengths[i]) << ','
       << format_number(series.p_initial[i]) << ',' << format_number(series.p_target[i]) << ','
       << format_number(contrast) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const std::vector<DriveSweepPoint>& points) {
  os << kSweepCsvHeader << '\n';
  for (const auto& p : points) write_series_csv(os, p.series, p.contrast);
}

void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
  os << kSpectrumCsvHeader << '\n';
  for (std::size_t i = 0; i < s.omega_p.size(); ++i) {
    os << format_number(s.omega_p[i]) << ',' << format_number(s.s21[i].real()) << ','
       << format_number(s.s21[i].imag()) << ',' << format_number(std::abs(s.s21[i])) << '\n';
  }
}

Spectrum read_spectrum_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::Config, "spectrum CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSpectrumCsvHeader)
    throw Error(ErrorKind::Config, "spectrum CSV header must be '" + std::string(kSpectrumCsvHeader) + "'");
  Spectrum s;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 4)
      throw Error(ErrorKind::Config, "spectrum CSV row " + std::to_string(row) + " needs 4 columns");
    s.omega_p.push_back(v[0]);
    s.s21.emplace_back(v[1], v[2]);
  }
  return s;
}

}  // namespace sideband
