#include "sideband/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "sideband/dynamics.hpp"
#include "sideband/eit.hpp"
#include "sideband/error.hpp"
#include "sideband/fitting.hpp"
#include "sideband/model.hpp"
#include "sideband/parallel.hpp"

namespace sideband {

namespace {

namespace fs = std::filesystem;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& require_block(const json& j, const std::string& key, const std::string& path = "") {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorKind::Config, "missing required block '" + join(path, key) + "'");
  if (!it->is_object()) throw Error(ErrorKind::Config, "'" + join(path, key) + "' must be an object");
  return *it;
}

std::string string_or(const json& j, const std::string& key, const std::string& fallback,
                      const std::string& path = "") {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string()) throw Error(ErrorKind::Config, "'" + join(path, key) + "' must be a string");
  return it->get<std::string>();
}

bool bool_or(const json& j, const std::string& key, bool fallback, const std::string& path = "") {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw Error(ErrorKind::Config, "'" + join(path, key) + "' must be a boolean");
  return it->get<bool>();
}

std::vector<std::string> string_list(const json& j, const std::string& key,
                                     std::vector<std::string> fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (it->is_string()) return {it->get<std::string>()};
  if (!it->is_array() || it->empty())
    throw Error(ErrorKind::Config, "'" + key + "' must be a string or a non-empty list");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw Error(ErrorKind::Config, "'" + key + "' entries must be strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

// A grid is a number, a list, or {"start<unit>", "stop<unit>", "points"}.
std::vector<double> parse_grid(const json& j, const std::string& key, const std::string& path,
                               const std::string& unit) {
  const std::string where = join(path, key);
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorKind::Config, "missing required field '" + where + "'");
  std::vector<double> g;
  if (it->is_number()) {
    g.push_back(it->get<double>());
  } else if (it->is_array()) {
    for (const auto& v : *it) {
      if (!v.is_number()) throw Error(ErrorKind::Config, "'" + where + "' entries must be numbers");
      g.push_back(v.get<double>());
    }
  } else if (it->is_object()) {
    double a = require_number(*it, "start" + unit, where);
    double b = require_number(*it, "stop" + unit, where);
    auto n = it->find("points");
    if (n == it->end() || !n->is_number_integer() || n->get<int>() < 2)
      throw Error(ErrorKind::Config, "'" + where + ".points' must be an integer >= 2");
    g = linspace(a, b, n->get<int>());
  } else {
    throw Error(ErrorKind::Config, "'" + where + "' must be a number, list or range");
  }
  if (g.empty()) throw Error(ErrorKind::Config, "'" + where + "' must be non-empty");
  if (!std::is_sorted(g.begin(), g.end()))
    throw Error(ErrorKind::Config, "'" + where + "' must be sorted ascending");
  return g;
}

Dims parse_dims(const json& j, Dims fallback, const std::string& path = "") {
  auto it = j.find("dims");
  if (it == j.end()) return fallback;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() ||
      !(*it)[1].is_number_integer())
    throw Error(ErrorKind::Config, "'" + join(path, "dims") + "' must be [n_t, n_r]");
  return Dims{(*it)[0].get<int>(), (*it)[1].get<int>()};
}

json dims_json(Dims d) { return json::array({d.n_t, d.n_r}); }

ParameterBasis parse_basis(const json& config) {
  std::string b = string_or(config, "basis", "chi");
  if (b == "chi") return ParameterBasis::Chi;
  if (b == "A") return ParameterBasis::Anharmonicity;
  throw Error(ErrorKind::Config, "unknown basis '" + b + "' (expected chi|A)");
}

struct Device {
  std::optional<CircuitParams> circuit;
  NormalModeParams normal;
  ObservedParams observed;

  SidebandModel model(ParameterBasis basis) const {
    if (basis == ParameterBasis::Anharmonicity) return SidebandModel::from_observed(observed);
    return SidebandModel::from_normal_modes(normal, observed.omega_t, observed.omega_r);
  }

  json to_json() const {
    json j;
    if (circuit) j["circuit"] = sideband::to_json(*circuit);
    j["normal_modes"] = sideband::to_json(normal);
    j["observed"] = sideband::to_json(observed);
    return j;
  }
};

Device resolve_device(const json& config) {
  const json& d = require_block(config, "device");
  Device dev;
  if (d.contains("circuit")) {
    dev.circuit = circuit_from_json(require_block(d, "circuit", "device"), "device.circuit");
    dev.circuit->validate();
    dev.normal = normal_mode_transform(*dev.circuit);
    dev.observed = observe(*dev.circuit);
  } else if (d.contains("observed")) {
    dev.observed = observed_from_json(require_block(d, "observed", "device"), "device.observed");
    dev.observed.validate();
    dev.circuit = observed_to_bare(dev.observed, dispersive_guess(dev.observed));
    dev.normal = normal_mode_transform(*dev.circuit);
  } else if (d.contains("normal_modes")) {
    dev.normal =
        normal_modes_from_json(require_block(d, "normal_modes", "device"), "device.normal_modes");
    dev.normal.validate();
    dev.observed = LabelledSpectrum(build_h_normal(dev.normal, kEigenDims)).observed();
  } else {
    throw Error(ErrorKind::Config, "block 'device' needs one of circuit, observed, normal_modes");
  }
  return dev;
}

struct DynamicsSettings {
  Dims dims{5, 5};
  PulseOptions pulse;
};

DynamicsSettings dynamics_settings(const json& config) {
  DynamicsSettings s;
  s.dims = parse_dims(config, s.dims);
  s.pulse.dt = number_or(config, "dt_s", s.pulse.dt, "");
  s.pulse.rise_s = number_or(config, "rise_s", s.pulse.rise_s, "");
  s.pulse.from_resonator = bool_or(config, "from_resonator", false);
  if (!(s.pulse.dt > 0.0)) throw Error(ErrorKind::Config, "'dt_s' must be positive");
  if (!(s.pulse.rise_s > 0.0)) throw Error(ErrorKind::Config, "'rise_s' must be positive");
  return s;
}

std::vector<Interaction> interactions_of(const json& config) {
  std::vector<Interaction> out;
  for (const auto& s : string_list(config, "interaction", {"bs", "tms"}))
    out.push_back(parse_interaction(s));
  return out;
}

std::vector<DriveVariant> variants_of(const json& config) {
  std::vector<DriveVariant> out;
  for (const auto& s : string_list(config, "variant", {"full"})) out.push_back(parse_variant(s));
  return out;
}

std::string tag(Interaction i, DriveVariant v) { return to_string(i) + "_" + to_string(v); }

class Bundle {
 public:
  explicit Bundle(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    std::ofstream f(dir_ / name, std::ios::binary);
    f << content;
    if (!f) throw Error(ErrorKind::Config, "cannot write '" + (dir_ / name).string() + "'");
    outputs.push_back(name);
  }

  void succeed() { ++succeeded; }
  void fail(const std::string& item, const std::string& error) {
    failures.push_back({{"item", item}, {"error", error}});
  }

  std::vector<std::string> outputs;
  json failures = json::array();
  json results = json::object();
  json resolved = json::object();
  json dims;
  json dt_s;
  int succeeded = 0;

 private:
  fs::path dir_;
};

template <typename F>
void attempt(Bundle& b, const std::string& item, F&& f) {
  try {
    f();
    b.succeed();
  } catch (const Error& e) {
    b.fail(item, e.what());
  }
}

void run_analytics_table(const json& config, const RunOptions&, Bundle& b) {
  Device dev = resolve_device(config);
  const json& drive = require_block(config, "drive");
  DriveConfig d{require_number(drive, "omega_d_hz", "drive"), require_number(drive, "amp_d_hz", "drive")};
  d.validate();
  ParameterBasis basis = parse_basis(config);
  SidebandModel m = dev.model(basis);
  b.resolved["device"] = dev.to_json();
  b.resolved["basis"] = to_string(basis);

  std::ostringstream os;
  os << "label,order,prefactor_hz,matching_frequency_hz,matching_condition\n";
  for (const auto& e : term_catalog(m, d)) {
    os << e.label << ',' << e.order << ',' << format_number(e.prefactor) << ','
       << (e.matching_frequency ? format_number(*e.matching_frequency) : "") << ','
       << e.matching_condition << '\n';
  }
  b.write("analytics_table.csv", os.str());
  b.succeed();
}

void run_matching(const json& config, const RunOptions&, Bundle& b) {
  Device dev = resolve_device(config);
  const json& drive = require_block(config, "drive");
  std::vector<double> amps = parse_grid(drive, "amp_d_hz", "drive", "_hz");
  ParameterBasis basis = parse_basis(config);
  SidebandModel m = dev.model(basis);
  b.resolved["device"] = dev.to_json();
  b.resolved["basis"] = to_string(basis);

  std::ostringstream os;
  os << "interaction,variant,basis,amp_d_hz,omega_d_hz,delta_hz,sigma_hz,d_omega_t_hz,"
        "d_omega_r_hz,omega_sb_hz,omega_mat_prime_hz,iterations\n";
  json warnings = json::array();
  for (Interaction it : interactions_of(config)) {
    for (DriveVariant v : variants_of(config)) {
      for (double amp : amps) {
        std::string item = tag(it, v) + "@" + format_number(amp);
        attempt(b, item, [&] {
          SidebandPrediction p = self_consistent_matching(m, amp, it, v);
          os << to_string(it) << ',' << to_string(v) << ',' << to_string(basis) << ','
             << format_number(amp) << ',' << format_number(p.omega_d) << ','
             << format_number(p.delta) << ',' << format_number(p.sigma) << ','
             << format_number(p.delta_omega_t) << ',' << format_number(p.delta_omega_r) << ','
             << format_number(p.omega_sb) << ',' << format_number(p.omega_mat_prime) << ','
             << p.iterations << '\n';
          for (const auto& w : p.warnings) warnings.push_back({{"item", item}, {"warning", w}});
        });
      }
    }
  }
  b.write("matching.csv", os.str());
  b.results["warnings"] = warnings;
}

std::string series_csv(const PulseLengthSeries& s, double contrast) {
  std::ostringstream os;
  os << kSweepCsvHeader << '\n';
  write_series_csv(os, s, contrast);
  return os.str();
}

std::string trajectory_csv(const DrivenSystem& sys, const DriveTone& tone,
                           const TransferStates& states, const PulseOptions& pulse, double flat_s) {
  DriveSpec spec{{tone}, PulseEnvelope{pulse.rise_s, flat_s}};
  PropagateOptions po;
  po.dt = pulse.dt;
  po.labels = {states.initial, states.target};
  const double t_end = spec.envelope->duration();
  po.output_every = std::max(1, static_cast<int>(t_end / pulse.dt / 2000.0));
  SimTrajectory traj = propagate(sys, spec, sys.state(states.initial), t_end, po);
  std::ostringstream os;
  os << "t_s,envelope,p_initial,p_target\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << format_number(traj.times[k]) << ',' << format_number(spec.envelope->value(traj.times[k]))
       << ',' << format_number(traj.populations[k][0]) << ','
       << format_number(traj.populations[k][1]) << '\n';
  }
  return os.str();
}

void run_timedomain(const json& config, const RunOptions& options, Bundle& b) {
  Device dev = resolve_device(config);
  DynamicsSettings ds = dynamics_settings(config);
  const json& drive = require_block(config, "drive");
  const double amp = require_number(drive, "amp_d_hz", "drive");
  if (!(amp > 0.0)) throw Error(ErrorKind::Config, "'drive.amp_d_hz' must be positive");
  DrivenSystem sys = DrivenSystem::from_normal_modes(dev.normal, ds.dims);
  const bool trajectory = bool_or(config, "trajectory", false);
  const json* sweep = config.contains("sweep") ? &require_block(config, "sweep") : nullptr;
  b.resolved["device"] = dev.to_json();
  b.dims = dims_json(ds.dims);
  b.dt_s = ds.pulse.dt;

  SearchOptions search;
  search.pulse = ds.pulse;
  search.threads = options.threads;

  for (Interaction it : interactions_of(config)) {
    for (DriveVariant v : variants_of(config)) {
      const std::string t = tag(it, v);
      attempt(b, t, [&] {
        if (sweep && sweep->contains("omega_d_hz")) {
          std::vector<double> grid;
          const json& g = sweep->at("omega_d_hz");
          if (g.is_object() && g.contains("span_hz")) {
            double centre = predicted_drive_frequency(sys, it, v, amp);
            double span = require_number(g, "span_hz", "sweep.omega_d_hz");
            auto n = g.find("points");
            if (n == g.end() || !n->is_number_integer() || n->get<int>() < 3)
              throw Error(ErrorKind::Config, "'sweep.omega_d_hz.points' must be an integer >= 3");
            grid = linspace(centre - 0.5 * span, centre + 0.5 * span, n->get<int>());
          } else {
            grid = parse_grid(*sweep, "omega_d_hz", "sweep", "_hz");
          }
          std::vector<double> lengths = parse_grid(*sweep, "flat_len_s", "sweep", "_s");
          DriveSweep s =
              drive_frequency_sweep(sys, v, amp, it, grid, lengths, ds.pulse, options.threads, true);
          std::ostringstream os;
          write_sweep_csv(os, s.points);
          b.write("sweep_" + t + ".csv", os.str());
          double drift = 0.0;
          for (const auto& p : s.points) drift = std::max(drift, p.series.max_norm_drift);
          b.results[t] = {{"omega_d_opt_hz", s.omega_opt},
                          {"contrast_opt", s.contrast_opt},
                          {"optimum_on_edge", s.optimum_on_edge},
                          {"max_norm_drift", drift}};
          return;
        }
        MatchedTransfer mt = find_matched_transfer(sys, it, v, amp, search);
        b.write("transfer_" + t + ".csv", series_csv(mt.series, mt.contrast));
        std::ostringstream scan;
        write_sweep_csv(scan, mt.scanned);
        b.write("scan_" + t + ".csv", scan.str());
        b.results[t] = {{"omega_d_opt_hz", mt.omega_d_opt},
                        {"d_omega_t_hz", mt.delta_omega_t},
                        {"omega_sb_hz", mt.omega_sb},
                        {"contrast", mt.contrast},
                        {"transfer_fidelity", mt.transfer_fidelity},
                        {"best_flat_len_s", mt.best_flat_s},
                        {"static_transition_hz", mt.static_transition},
                        {"max_norm_drift", mt.max_norm_drift},
                        {"evaluations", mt.evaluations}};
        if (trajectory) {
          b.write("trajectory_" + t + ".csv",
                  trajectory_csv(sys, DriveTone{v, amp, mt.omega_d_opt},
                                 default_transfer(it, ds.pulse.from_resonator), ds.pulse,
                                 mt.best_flat_s));
        }
      });
    }
  }
}

void run_rate_vs_shift(const json& config, const RunOptions& options, Bundle& b) {
  Device dev = resolve_device(config);
  DynamicsSettings ds = dynamics_settings(config);
  std::vector<double> amps = parse_grid(require_block(config, "sweep"), "amp_d_hz", "sweep", "_hz");
  DrivenSystem sys = DrivenSystem::from_normal_modes(dev.normal, ds.dims);
  SidebandModel a_model = sys.anharmonicity_model();
  const double analytic_slope = dev.model(ParameterBasis::Chi).rate_shift_slope();
  b.resolved["device"] = dev.to_json();
  b.dims = dims_json(ds.dims);
  b.dt_s = ds.pulse.dt;

  SearchOptions search;
  search.pulse = ds.pulse;
  search.threads = options.threads;

  std::ostringstream os;
  os << "interaction,variant,amp_d_hz,d_omega_t_hz,omega_sb_hz,omega_d_opt_hz,contrast,"
        "transfer_fidelity,analytic_d_omega_t_hz,analytic_omega_sb_hz\n";
  json fits = json::object();
  for (Interaction it : interactions_of(config)) {
    std::vector<RateShiftPoint> all;
    for (DriveVariant v : variants_of(config)) {
      std::vector<RateShiftPoint> pts;
      std::vector<RateShiftRow> rows = rate_vs_shift_run(sys, it, v, amps, search);
      for (const auto& r : rows) {
        const std::string item = tag(it, v) + "@" + format_number(r.amp_d);
        if (!r.ok) {
          b.fail(item, r.error);
          continue;
        }
        b.succeed();
        double a_shift = std::numeric_limits<double>::quiet_NaN(), a_rate = a_shift;
        try {
          SidebandPrediction p = self_consistent_matching(a_model, r.amp_d, it, v);
          a_shift = p.delta_omega_t;
          a_rate = p.omega_sb;
        } catch (const Error&) {
        }
        os << to_string(it) << ',' << to_string(v) << ',' << format_number(r.amp_d) << ','
           << format_number(r.delta_omega_t) << ',' << format_number(r.omega_sb) << ','
           << format_number(r.omega_d_opt) << ',' << format_number(r.contrast) << ','
           << format_number(r.transfer_fidelity) << ',' << format_number(a_shift) << ','
           << format_number(a_rate) << '\n';
        pts.push_back({r.delta_omega_t, r.omega_sb});
      }
      if (pts.size() >= 3) {
        LineFit f = rate_shift_line_fit(pts, analytic_slope);
        fits[tag(it, v)] = {{"slope", f.slope}, {"slope_error", f.slope_error},
                            {"relative_deviation", *f.relative_deviation}};
      }
      all.insert(all.end(), pts.begin(), pts.end());
    }
    if (all.size() >= 3) {
      LineFit f = rate_shift_line_fit(all, analytic_slope);
      fits[to_string(it)] = {{"slope", f.slope}, {"slope_error", f.slope_error},
                             {"relative_deviation", *f.relative_deviation}};
    }
  }
  b.write("rate_vs_shift.csv", os.str());
  b.results["analytic_slope"] = analytic_slope;
  b.results["line_fits"] = fits;
}

bool valid_label(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; });
}

EitParams resolve_eit(const json& config) {
  EitParams p = eit_from_json(require_block(config, "eit"), EitParams{}, "eit");
  p.validate();
  return p;
}

SpectrumOptions spectrum_options(const RunOptions& options) {
  SpectrumOptions s;
  s.threads = options.threads;
  return s;
}

void run_spectrum(const json& config, const RunOptions& options, Bundle& b) {
  EitParams base = resolve_eit(config);
  std::vector<double> grid = parse_grid(require_block(config, "sweep"), "omega_p_hz", "sweep", "_hz");
  SpectrumOptions sopt = spectrum_options(options);

  std::vector<std::pair<std::string, EitParams>> cases;
  if (config.contains("cases")) {
    const json& cs = config.at("cases");
    if (!cs.is_array() || cs.empty()) throw Error(ErrorKind::Config, "'cases' must be a non-empty list");
    for (std::size_t k = 0; k < cs.size(); ++k) {
      const std::string path = "cases[" + std::to_string(k) + "]";
      if (!cs[k].is_object()) throw Error(ErrorKind::Config, "'" + path + "' must be an object");
      std::string label = string_or(cs[k], "label", "", path);
      if (!valid_label(label))
        throw Error(ErrorKind::Config, "'" + path + ".label' must be a non-empty [A-Za-z0-9_-] name");
      EitParams p = base;
      for (const auto& name : EitParams::field_names())
        if (cs[k].contains(name)) p.set(name, require_number(cs[k], name, path));
      p.validate();
      cases.emplace_back(label, p);
    }
  } else {
    cases.emplace_back("", base);
  }

  json resolved = json::array();
  json dims = json::array();
  for (const auto& [label, p] : cases) {
    Spectrum s = spectrum(p, grid, sopt);
    std::ostringstream os;
    write_spectrum_csv(os, s);
    const std::string name = label.empty() ? "spectrum.csv" : "spectrum_" + label + ".csv";
    b.write(name, os.str());
    std::size_t bad = s.failures.size();
    for (const auto& [i, msg] : s.failures)
      b.fail((label.empty() ? "" : label + "@") + format_number(grid[i]), msg);
    if (bad < grid.size()) b.succeed();
    json r = to_json(p);
    r["label"] = label;
    r["file"] = name;
    r["dims"] = dims_json(s.dims);
    resolved.push_back(r);
    dims.push_back(dims_json(s.dims));
  }
  b.resolved["cases"] = resolved;
  b.dims = dims.size() == 1 ? dims[0] : dims;
}

FitTarget parse_target(const json& config) {
  std::string t = string_or(config, "target", "complex");
  if (t == "complex") return FitTarget::Complex;
  if (t == "magnitude") return FitTarget::Magnitude;
  throw Error(ErrorKind::Config, "unknown target '" + t + "' (expected complex|magnitude)");
}

Spectrum load_spectrum(const json& data, const std::string& key, const RunOptions& options) {
  auto it = data.find(key);
  if (it == data.end() || !it->is_string())
    throw Error(ErrorKind::Config, "'data." + key + "' must be a path string");
  fs::path path = it->get<std::string>();
  if (path.is_relative()) path = options.config_dir / path;
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Config, "cannot read 'data." + key + "' = " + path.string());
  return read_spectrum_csv(f);
}

struct Synthetic {
  double noise = 0.0;
  unsigned seed = 1;
};

std::optional<Synthetic> synthetic_of(const json& data) {
  if (!data.contains("synthetic")) return std::nullopt;
  const json& s = require_block(data, "synthetic", "data");
  Synthetic out;
  out.noise = number_or(s, "noise", 0.0, "data.synthetic");
  out.seed = static_cast<unsigned>(number_or(s, "seed", 1.0, "data.synthetic"));
  if (out.noise < 0.0) throw Error(ErrorKind::Config, "'data.synthetic.noise' must be >= 0");
  return out;
}

Spectrum synthesize(const EitParams& p, const std::vector<double>& grid, const Synthetic& syn,
                    const SpectrumOptions& sopt) {
  Spectrum s = spectrum(p, grid, sopt);
  if (!s.failures.empty())
    throw Error(ErrorKind::Config, "synthetic spectrum failed at " + std::to_string(s.failures.size()) + " points");
  return syn.noise > 0.0 ? with_noise(s, syn.noise, syn.seed) : s;
}

std::string spectrum_text(const Spectrum& s) {
  std::ostringstream os;
  write_spectrum_csv(os, s);
  return os.str();
}

void run_fit(const json& config, const RunOptions& options, Bundle& b) {
  EitParams truth = resolve_eit(config);
  const json& data = require_block(config, "data");
  SpectrumOptions sopt = spectrum_options(options);

  FitProblem fp;
  fp.model = truth;
  fp.target = parse_target(config);
  fp.spectrum_options = sopt;
  if (auto syn = synthetic_of(data)) {
    std::vector<double> grid = parse_grid(require_block(config, "sweep"), "omega_p_hz", "sweep", "_hz");
    fp.data = synthesize(truth, grid, *syn, sopt);
  } else {
    fp.data = load_spectrum(data, "csv", options);
  }

  auto free = config.find("free");
  if (free == config.end() || !free->is_array() || free->empty())
    throw Error(ErrorKind::Config, "missing required list 'free'");
  for (std::size_t k = 0; k < free->size(); ++k) {
    const json& f = (*free)[k];
    const std::string path = "free[" + std::to_string(k) + "]";
    FreeParameter p;
    p.name = string_or(f, "name", "", path);
    p.initial = require_number(f, "initial_hz", path);
    p.lower = require_number(f, "lower_hz", path);
    p.upper = require_number(f, "upper_hz", path);
    if (f.contains("scale_hz")) p.scale = require_number(f, "scale_hz", path);
    fp.free.push_back(p);
  }
  if (config.contains("fixed")) {
    for (const auto& [name, v] : require_block(config, "fixed").items()) {
      if (!v.is_number()) throw Error(ErrorKind::Config, "'fixed." + name + "' must be a number");
      fp.fixed[name] = v.get<double>();
    }
  }

  FitResult r = fit_spectrum(fp);
  b.write("data.csv", spectrum_text(fp.data));
  Spectrum model = spectrum(r.fitted, fp.data.omega_p, sopt);
  const double scale = r.value("scale");
  for (auto& v : model.s21) {
    if (fp.target == FitTarget::Complex)
      v = scale * v + std::complex<double>(r.value("baseline_re"), r.value("baseline_im"));
    else
      v = scale * std::abs(v) + r.value("baseline");
  }
  b.write("fit_spectrum.csv", spectrum_text(model));
  b.write("fit.json", to_json(r).dump(2) + "\n");
  b.results = to_json(r);
  b.dims = dims_json(r.fitted.dims);
  b.succeed();
}

void run_calibrate(const json& config, const RunOptions& options, Bundle& b) {
  EitParams truth = resolve_eit(config);
  const json& data = require_block(config, "data");
  SpectrumOptions sopt = spectrum_options(options);
  CalibrationOptions copt;
  copt.spectrum_options = sopt;
  copt.target = parse_target(config);
  if (config.contains("calibration")) {
    const json& c = require_block(config, "calibration");
    copt.linear_probe_hz = number_or(c, "linear_probe_hz", copt.linear_probe_hz, "calibration");
    copt.amp_p_guess_hz = number_or(c, "amp_p_guess_hz", copt.amp_p_guess_hz, "calibration");
    copt.A_tr_guess_hz = number_or(c, "A_tr_guess_hz", copt.A_tr_guess_hz, "calibration");
  }

  Spectrum linear, nonlinear;
  if (auto syn = synthetic_of(data)) {
    std::vector<double> grid = parse_grid(require_block(config, "sweep"), "omega_p_hz", "sweep", "_hz");
    EitParams lin = truth;
    lin.amp_p = copt.linear_probe_hz;
    linear = synthesize(lin, grid, *syn, sopt);
    Synthetic second = *syn;
    second.seed += 1;
    nonlinear = synthesize(truth, grid, second, sopt);
  } else {
    linear = load_spectrum(data, "linear_csv", options);
    nonlinear = load_spectrum(data, "nonlinear_csv", options);
  }

  EitParams guess = truth;
  if (config.contains("initial")) {
    for (const auto& [name, v] : require_block(config, "initial").items()) {
      if (!v.is_number()) throw Error(ErrorKind::Config, "'initial." + name + "' must be a number");
      guess.set(name, v.get<double>());
    }
  }
  b.write("linear.csv", spectrum_text(linear));
  b.write("nonlinear.csv", spectrum_text(nonlinear));
  Calibration cal = calibrate_cross_anharmonicity(linear, nonlinear, guess, copt);
  json out{{"stage1", to_json(cal.stage1)}, {"stage2", to_json(cal.stage2)}};
  b.write("calibration.json", out.dump(2) + "\n");
  b.results = out;
  b.dims = dims_json(cal.stage2.fitted.dims);
  b.succeed();
}

using Runner = void (*)(const json&, const RunOptions&, Bundle&);

Runner runner_for(const std::string& kind) {
  if (kind == "analytics-table") return run_analytics_table;
  if (kind == "matching") return run_matching;
  if (kind == "timedomain") return run_timedomain;
  if (kind == "rate-vs-shift") return run_rate_vs_shift;
  if (kind == "spectrum") return run_spectrum;
  if (kind == "fit") return run_fit;
  if (kind == "calibrate") return run_calibrate;
  throw Error(ErrorKind::Config, "unknown experiment kind '" + kind + "'");
}

json apply_overrides(json config, const RunOptions& options) {
  if (options.variant) config["variant"] = to_string(*options.variant);
  if (options.interaction) {
    config["interaction"] = to_string(*options.interaction);
    if (config.contains("eit") && config["eit"].is_object())
      config["eit"]["interaction"] = to_string(*options.interaction);
  }
  return config;
}

std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Success: return "success";
    case RunStatus::Partial: return "partial";
    case RunStatus::TotalFailure: return "failure";
  }
  return "failure";
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"analytics-table", "matching", "timedomain",
                                              "rate-vs-shift",   "spectrum", "fit",
                                              "calibrate"};
  return kinds;
}

int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::Success: return 0;
    case RunStatus::TotalFailure: return 1;
    case RunStatus::Partial: return 2;
  }
  return 1;
}

void validate_config(const json& config) {
  if (!config.is_object()) throw Error(ErrorKind::Config, "config must be an object");
  auto k = config.find("kind");
  if (k == config.end() || !k->is_string()) throw Error(ErrorKind::Config, "missing required field 'kind'");
  const std::string kind = k->get<std::string>();
  runner_for(kind);
  if (kind == "analytics-table" || kind == "matching" || kind == "timedomain" ||
      kind == "rate-vs-shift")
    require_block(config, "device");
  if (kind == "analytics-table" || kind == "matching" || kind == "timedomain")
    require_block(config, "drive");
  if (kind == "rate-vs-shift" || kind == "spectrum") require_block(config, "sweep");
  if (kind == "spectrum" || kind == "fit" || kind == "calibrate")
    eit_from_json(require_block(config, "eit"), EitParams{}, "eit");
  if (kind == "fit" || kind == "calibrate") require_block(config, "data");
  if (config.contains("variant")) variants_of(config);
  if (config.contains("interaction")) interactions_of(config);
}

RunReport run_experiment(const json& input, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  json config = apply_overrides(input, options);
  Bundle b(options.out_dir);
  RunReport report;
  json manifest;
  manifest["tool"] = "sideband";
  manifest["version"] = kVersion;
  manifest["module_versions"] = {{"model", kVersion},    {"analytics", kVersion},
                                 {"dynamics", kVersion}, {"eit", kVersion},
                                 {"fitting", kVersion},  {"cli", kVersion}};
  if (config.is_object() && config.contains("figure")) manifest["figure"] = config["figure"];
  manifest["kind"] = config.is_object() ? config.value("kind", "") : "";
  manifest["config"] = config;
  manifest["threads"] = resolve_threads(options.threads);

  try {
    validate_config(config);
    runner_for(config.at("kind").get<std::string>())(config, options, b);
    if (b.failures.empty())
      report.status = RunStatus::Success;
    else
      report.status = b.succeeded > 0 ? RunStatus::Partial : RunStatus::TotalFailure;
  } catch (const std::exception& e) {
    report.status = RunStatus::TotalFailure;
    manifest["error"] = e.what();
  }

  manifest["resolved"] = b.resolved;
  manifest["dims"] = b.dims;
  manifest["dt_s"] = b.dt_s;
  manifest["outputs"] = b.outputs;
  manifest["failures"] = b.failures;
  manifest["results"] = b.results;
  manifest["status"] = status_name(report.status);
  manifest["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    b.write("manifest.json", manifest.dump(2) + "\n");
  } catch (const Error& e) {
    report.status = RunStatus::TotalFailure;
    manifest["error"] = e.what();
  }
  report.outputs = b.outputs;
  report.manifest = std::move(manifest);
  return report;
}

namespace {

json device_circuit() {
  return {{"omega_t0_hz", 6.8131e9}, {"omega_r0_hz", 4.0823e9}, {"g_hz", 0.1207e9},
          {"chi_t_hz", 137.4e6}};
}

json wide_circuit() {
  return {{"omega_t0_hz", 6.5e9}, {"omega_r0_hz", 4.0e9}, {"g_hz", 0.2e9}, {"chi_t_hz", 0.2e9}};
}

json device_eit(const std::string& interaction, double omega_sb) {
  return {{"interaction", interaction},
          {"omega_t_shifted_hz", 6.8112e9},
          {"omega_r_hz", 4.0755e9},
          {"A_t_hz", 150e6},
          {"A_r_hz", 0.0},
          {"A_tr_hz", 497e3},
          {"omega_sb_hz", omega_sb},
          {"delta_omega_mat_hz", 0.0},
          {"kappa_hz", 10.2e6},
          {"gamma_hz", 129e3},
          {"amp_p_hz", 10e3}};
}

json probe_grid(double half_span, int points) {
  return {{"start_hz", 4.0755e9 - half_span}, {"stop_hz", 4.0755e9 + half_span}, {"points", points}};
}

json eit_ladder(const std::string& figure, const std::string& interaction) {
  return {{"figure", figure},
          {"kind", "spectrum"},
          {"eit", device_eit(interaction, 2e6)},
          {"sweep", {{"omega_p_hz", probe_grid(25e6, 201)}}},
          {"cases", json::array({{{"label", "sb2MHz"}, {"omega_sb_hz", 2e6}},
                                 {{"label", "sb4MHz"}, {"omega_sb_hz", 4e6}},
                                 {{"label", "sb6MHz"}, {"omega_sb_hz", 6e6}}})}};
}

}  // namespace

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"fig1f", "fig1g", "fig3c", "fig4",
                                            "figS1", "figS2", "figS3", "figS5"};
  return ids;
}

json figure_config(const std::string& id) {
  if (id == "fig1f") return eit_ladder(id, "bs");
  if (id == "fig1g") return eit_ladder(id, "tms");
  if (id == "fig3c")
    return {{"figure", id},
            {"kind", "rate-vs-shift"},
            {"device", {{"circuit", device_circuit()}}},
            {"interaction", json::array({"bs", "tms"})},
            {"variant", "full"},
            {"dims", json::array({5, 5})},
            {"sweep", {{"amp_d_hz", json::array({100e6, 150e6, 200e6, 250e6, 300e6})}}}};
  if (id == "fig4")
    return {{"figure", id},
            {"kind", "rate-vs-shift"},
            {"device", {{"circuit", device_circuit()}}},
            {"interaction", json::array({"bs", "tms"})},
            {"variant", json::array({"full", "rwa", "cr"})},
            {"dims", json::array({5, 5})},
            {"sweep", {{"amp_d_hz", json::array({100e6, 200e6, 300e6})}}}};
  if (id == "figS1")
    return {{"figure", id},
            {"kind", "timedomain"},
            {"device", {{"circuit", device_circuit()}}},
            {"interaction", "tms"},
            {"variant", "full"},
            {"dims", json::array({5, 5})},
            {"drive", {{"amp_d_hz", 300e6}}},
            {"trajectory", true}};
  if (id == "figS2")
    return {{"figure", id},
            {"kind", "timedomain"},
            {"device", {{"circuit", device_circuit()}}},
            {"interaction", "tms"},
            {"variant", "full"},
            {"dims", json::array({5, 5})},
            {"drive", {{"amp_d_hz", 300e6}}},
            {"sweep",
             {{"omega_d_hz", {{"span_hz", 2e6}, {"points", 41}}},
              {"flat_len_s", {{"start_s", 0.0}, {"stop_s", 8e-6}, {"points", 81}}}}}};
  if (id == "figS3")
    return {{"figure", id},
            {"kind", "timedomain"},
            {"device", {{"circuit", wide_circuit()}}},
            {"interaction", json::array({"bs", "tms"})},
            {"variant", json::array({"full", "rwa", "cr"})},
            {"dims", json::array({5, 5})},
            {"drive", {{"amp_d_hz", 600e6}}}};
  if (id == "figS5") {
    json eit = device_eit("bs", 1.2e6);
    return {{"figure", id},
            {"kind", "spectrum"},
            {"eit", eit},
            {"sweep", {{"omega_p_hz", probe_grid(20e6, 201)}}},
            {"cases", json::array({{{"label", "linear_Atr0"}, {"amp_p_hz", 10e3}, {"A_tr_hz", 0.0}},
                                   {{"label", "linear_Atr497kHz"}, {"amp_p_hz", 10e3}},
                                   {{"label", "nonlinear_Atr0"}, {"amp_p_hz", 3e6}, {"A_tr_hz", 0.0}},
                                   {{"label", "nonlinear_Atr497kHz"}, {"amp_p_hz", 3e6}}})}};
  }
  throw Error(ErrorKind::UnknownFigure, "unknown figure id '" + id + "'");
}

RunReport reproduce(const std::string& id, const RunOptions& options) {
  return run_experiment(figure_config(id), options);
}

}  // namespace sideband
