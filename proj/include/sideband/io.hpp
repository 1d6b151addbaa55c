#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "sideband/analytics.hpp"
#include "sideband/dynamics.hpp"
#include "sideband/eit.hpp"
#include "sideband/fitting.hpp"
#include "sideband/model.hpp"

namespace sideband {

using json = nlohmann::ordered_json;

inline constexpr const char* kSweepCsvHeader = "omega_d_hz,flat_len_s,p_initial,p_target,contrast";
inline constexpr const char* kSpectrumCsvHeader = "omega_p_hz,s21_re,s21_im,s21_abs";

std::string format_number(double v);

// Reads a numeric field, throwing a config error that names `path/key` when absent.
double require_number(const json& j, const std::string& key, const std::string& path);
double number_or(const json& j, const std::string& key, double fallback, const std::string& path);

json to_json(const CircuitParams& p);
json to_json(const NormalModeParams& p);
json to_json(const ObservedParams& p);
json to_json(const EitParams& p);
json to_json(const SidebandPrediction& p);
json to_json(const TermCatalogEntry& e, const SidebandModel& m, const DriveConfig& d);
json to_json(const FitResult& r);

CircuitParams circuit_from_json(const json& j, const std::string& path = "circuit");
NormalModeParams normal_modes_from_json(const json& j, const std::string& path = "normal_modes");
ObservedParams observed_from_json(const json& j, const std::string& path = "observed");
// Fields absent from j keep the values of `base`; kappa_hz and gamma_hz are required.
EitParams eit_from_json(const json& j, const EitParams& base, const std::string& path = "eit");

void write_sweep_csv(std::ostream& os, const std::vector<DriveSweepPoint>& points);
void write_series_csv(std::ostream& os, const PulseLengthSeries& series, double contrast);
void write_spectrum_csv(std::ostream& os, const Spectrum& s);
Spectrum read_spectrum_csv(std::istream& is);

}  // namespace sideband
