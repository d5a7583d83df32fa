#include "ucspd_app/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "ucspd/analysis.hpp"
#include "ucspd/error.hpp"

namespace ucspd::app {
namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

// Reads one mapping, remembering which keys were consumed so leftovers can be reported.
class MapReader {
 public:
  MapReader(YAML::Node node, std::string path, std::vector<std::string>& missing)
      : node_(std::move(node)), path_(std::move(path)), missing_(missing) {
    if (node_.IsDefined() && !node_.IsNull() && !node_.IsMap()) {
      throw InvalidArgument(where() + ": expected a mapping");
    }
  }

  bool has(const std::string& key) const {
    const YAML::Node& node = node_;
    return present() && node[key].IsDefined() && !node[key].IsNull();
  }

  double number(const std::string& key, double fallback) {
    auto v = lookup(key);
    return v ? to_number(*v, key) : fallback;
  }

  double required_number(const std::string& key) {
    auto v = lookup(key);
    if (!v) {
      missing_.push_back(key_path(key));
      return std::nan("");
    }
    return to_number(*v, key);
  }

  std::optional<double> optional_number(const std::string& key) {
    auto v = lookup(key);
    if (!v) return std::nullopt;
    return to_number(*v, key);
  }

  int integer(const std::string& key, int fallback) {
    auto v = lookup(key);
    if (!v) return fallback;
    int out = 0;
    if (!v->IsScalar() || !YAML::convert<int>::decode(*v, out)) {
      throw InvalidArgument(key_path(key) + ": expected an integer");
    }
    return out;
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) {
    auto v = lookup(key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    if (!v->IsScalar() || v->Scalar().starts_with('-') ||
        !YAML::convert<std::uint64_t>::decode(*v, out)) {
      throw InvalidArgument(key_path(key) + ": expected an unsigned 64-bit integer");
    }
    return out;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    auto v = lookup(key);
    if (!v) return fallback;
    if (!v->IsScalar()) throw InvalidArgument(key_path(key) + ": expected a string");
    return v->Scalar();
  }

  std::string required_string(const std::string& key) {
    if (!has(key)) {
      missing_.push_back(key_path(key));
      return {};
    }
    return string(key, {});
  }

  MapReader child(const std::string& key) {
    auto v = lookup(key);
    return MapReader(v ? *v : YAML::Node(), key_path(key), missing_);
  }

  /// Raw node for a required sequence; records the key as missing when absent.
  std::optional<YAML::Node> required_sequence(const std::string& key) {
    auto v = lookup(key);
    if (!v) {
      missing_.push_back(key_path(key));
      return std::nullopt;
    }
    if (!v->IsSequence()) throw InvalidArgument(key_path(key) + ": expected a list");
    return v;
  }

  /// Rejects any key that was not read.
  void finish() const {
    if (!present()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) throw InvalidArgument("unknown key '" + key_path(key) + "'");
    }
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  bool present() const { return node_.IsDefined() && node_.IsMap(); }
  std::string where() const { return path_.empty() ? "scenario" : path_; }

  std::optional<YAML::Node> lookup(const std::string& key) {
    used_.insert(key);
    if (!present()) return std::nullopt;
    const YAML::Node& node = node_;
    YAML::Node v = node[key];
    if (!v.IsDefined() || v.IsNull()) return std::nullopt;
    return v;
  }

  double to_number(const YAML::Node& v, const std::string& key) const {
    double out = 0.0;
    if (!v.IsScalar() || !YAML::convert<double>::decode(v, out) || !std::isfinite(out)) {
      throw InvalidArgument(key_path(key) + ": expected a finite number");
    }
    return out;
  }

  YAML::Node node_;
  std::string path_;
  std::vector<std::string>& missing_;
  std::set<std::string> used_;
};

void check(bool ok, const std::string& path, const std::string& constraint) {
  if (!ok) throw InvalidArgument(path + ": must be " + constraint);
}

// Runs a module validator and prefixes its message with the section and type it guards.
void validated(const std::string& section, const std::string& type,
               const std::function<void()>& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(section + ": " + e.what() + " (" + type + " invariant)");
  }
}

void read_detector(MapReader& doc, Scenario& s, std::vector<std::string>& missing) {
  auto det = doc.child("detector");
  s.chain.apd_efficiency = det.number("apd_efficiency", s.chain.apd_efficiency);
  s.chain.fiber_coupling = det.number("fiber_coupling", s.chain.fiber_coupling);
  s.chain.filter_transmittance = det.number("filter_transmittance", s.chain.filter_transmittance);

  auto pe = det.child("pump_efficiency");
  s.pump_efficiency.p_sat_mw = pe.number("p_sat_mw", s.pump_efficiency.p_sat_mw);
  if (auto list = pe.required_sequence("calibration")) {
    std::size_t i = 0;
    for (const auto& item : *list) {
      MapReader point(item, pe.key_path("calibration") + "[" + std::to_string(i++) + "]", missing);
      s.pump_efficiency.calibration.push_back(
          {point.required_number("power_mw"), point.required_number("efficiency")});
      point.finish();
    }
    check(!s.pump_efficiency.calibration.empty(), pe.key_path("calibration"),
          "a non-empty list");
  }
  pe.finish();

  auto noise = det.child("noise");
  s.noise.dark_cps = noise.number("dark_cps", s.noise.dark_cps);
  s.noise.growth_per_unit_eta = noise.number("growth_per_unit_eta", s.noise.growth_per_unit_eta);
  auto cal = noise.child("calibration");
  s.noise.calibration_power_mw = cal.required_number("power_mw");
  s.noise.calibration_cps = cal.required_number("cps");
  cal.finish();
  noise.finish();
  det.finish();
}

void validate_scenario(Scenario& s) {
  check(!s.name.empty(), "name", "a non-empty string");
  validated("crystal", "CrystalSpec", [&] { validate(s.crystal); });
  validated("pump", "PulseSpec", [&] { validate(s.pump); });
  check(s.pump_power_mw >= 0.0, "pump.power_mw", ">= 0");
  check(s.rep_rate_hz > 0.0, "pump.rep_rate_hz", "> 0");
  validated("signal", "PulseSpec", [&] { validate(s.signal); });
  check(s.mean_photons_per_pulse >= 0.0, "signal.mean_photons_per_pulse", ">= 0");

  validated("detector.pump_efficiency", "PumpEfficiencyModel", [&] {
    s.pump_model =
        PumpEfficiencyModel::calibrate(s.pump_efficiency.calibration, s.pump_efficiency.p_sat_mw);
    validate(s.pump_model);
  });
  validated("detector", "EfficiencyChain", [&] {
    s.chain.internal_upconversion = efficiency_at_power(s.pump_model, s.pump_power_mw);
    validate(s.chain);
  });
  check(s.noise.calibration_power_mw > 0.0, "detector.noise.calibration.power_mw", "> 0");
  check(s.noise.growth_per_unit_eta >= 0.0, "detector.noise.growth_per_unit_eta", ">= 0");
  validated("detector.noise", "NoiseModel", [&] {
    s.noise_model = NoiseModel::calibrate(
        s.noise.dark_cps, efficiency_at_power(s.pump_model, s.noise.calibration_power_mw),
        s.noise.calibration_cps, s.noise.growth_per_unit_eta);
    validate(s.noise_model);
  });

  check(s.dt_fs > 0.0, "grid.dt_fs", "> 0");
  check(s.scan.step_fs > 0.0, "scan.step_fs", "> 0");
  check(s.scan.stop_fs > s.scan.start_fs, "scan.stop_fs", "greater than scan.start_fs");
  check(s.scan.dwell_s > 0.0, "scan.dwell_s", "> 0");

  check(s.sweep.points >= 5, "sweep.points", ">= 5");
  check(s.sweep.contrast > 0.0 && s.sweep.contrast <= 1.0, "sweep.contrast", "in (0, 1]");
  check(s.sweep.peak_counts >= 0.0, "sweep.peak_counts", ">= 0");
  check(s.sweep.noise_cps >= 0.0, "sweep.noise_cps", ">= 0");
  check(s.sweep.dwell_s > 0.0, "sweep.dwell_s", "> 0");

  check(s.timebin.slot_spacing_fs > 0.0, "timebin.slot_spacing_fs", "> 0");
  check(s.timebin.contrast > 0.0 && s.timebin.contrast <= 1.0, "timebin.contrast", "in (0, 1]");

  validated("deconv", "DeconvolutionSettings", [&] {
    validate(DeconvolutionSettings{"richardson-lucy", s.deconv.iterations, s.deconv.threshold});
  });
  check(s.deconv.dt_fs > 0.0, "deconv.dt_fs", "> 0");
  check(s.deconv.peak_counts > 0.0, "deconv.peak_counts", "> 0");

  check(s.limits.power_min_mw >= 0.0, "limits.power_min_mw", ">= 0");
  check(s.limits.power_max_mw >= s.limits.power_min_mw, "limits.power_max_mw",
        ">= limits.power_min_mw");
  check(s.limits.power_step_mw > 0.0, "limits.power_step_mw", "> 0");
  check(s.limits.integration_s > 0.0, "limits.integration_s", "> 0");
}

}  // namespace

const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys{
      "name",
      "crystal.length_mm",
      "pump.fwhm_fs",
      "pump.power_mw",
      "signal.fwhm_fs",
      "signal.mean_photons_per_pulse",
      "detector.pump_efficiency.calibration",
      "detector.noise.calibration.power_mw",
      "detector.noise.calibration.cps",
  };
  return keys;
}

std::filesystem::path Scenario::resolve_input(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw InvalidArgument(std::string("scenario is not valid YAML: ") + e.what());
  }

  std::vector<std::string> missing;
  MapReader doc(root, "", missing);
  Scenario s;
  s.base_dir = base_dir;
  s.name = doc.required_string("name");
  s.seed = doc.unsigned64("seed", 0);
  s.output_dir = doc.string("output_dir", "");

  auto crystal = doc.child("crystal");
  s.crystal.label = crystal.string("label", "");
  s.crystal.length_mm = crystal.required_number("length_mm");
  s.crystal.tau_g_fs_per_mm = crystal.number("tau_g_fs_per_mm", s.crystal.tau_g_fs_per_mm);
  s.crystal.poling_period_um = crystal.optional_number("poling_period_um");
  s.crystal.temperature_c = crystal.optional_number("temperature_c");
  crystal.finish();

  auto pump = doc.child("pump");
  s.pump.fwhm_fs = pump.required_number("fwhm_fs");
  s.pump_power_mw = pump.required_number("power_mw");
  s.rep_rate_hz = pump.number("rep_rate_hz", s.rep_rate_hz);
  pump.finish();

  auto signal = doc.child("signal");
  s.signal.fwhm_fs = signal.required_number("fwhm_fs");
  s.mean_photons_per_pulse = signal.required_number("mean_photons_per_pulse");
  signal.finish();

  read_detector(doc, s, missing);

  auto grid = doc.child("grid");
  s.dt_fs = grid.number("dt_fs", s.dt_fs);
  grid.finish();

  auto scan = doc.child("scan");
  s.scan.start_fs = scan.number("start_fs", s.scan.start_fs);
  s.scan.stop_fs = scan.number("stop_fs", s.scan.stop_fs);
  s.scan.step_fs = scan.number("step_fs", s.scan.step_fs);
  s.scan.dwell_s = scan.number("dwell_s", s.scan.dwell_s);
  scan.finish();

  auto sweep = doc.child("sweep");
  s.sweep.points = sweep.integer("points", s.sweep.points);
  s.sweep.decoder_phase_rad = sweep.number("decoder_phase_rad", s.sweep.decoder_phase_rad);
  s.sweep.contrast = sweep.number("contrast", s.sweep.contrast);
  s.sweep.peak_counts = sweep.number("peak_counts", s.sweep.peak_counts);
  s.sweep.noise_cps = sweep.number("noise_cps", s.sweep.noise_cps);
  s.sweep.dwell_s = sweep.number("dwell_s", s.sweep.dwell_s);
  s.sweep.input_csv = sweep.string("input_csv", "");
  sweep.finish();

  auto tb = doc.child("timebin");
  s.timebin.slot_spacing_fs = tb.number("slot_spacing_fs", s.timebin.slot_spacing_fs);
  s.timebin.phi_rad = tb.number("phi_rad", s.timebin.phi_rad);
  s.timebin.phi_prime_rad = tb.number("phi_prime_rad", s.timebin.phi_prime_rad);
  s.timebin.contrast = tb.number("contrast", s.timebin.contrast);
  tb.finish();

  auto dc = doc.child("deconv");
  s.deconv.iterations = dc.integer("iterations", s.deconv.iterations);
  s.deconv.threshold = dc.number("threshold", s.deconv.threshold);
  s.deconv.dt_fs = dc.number("dt_fs", s.deconv.dt_fs);
  s.deconv.peak_counts = dc.number("peak_counts", s.deconv.peak_counts);
  s.deconv.input_csv = dc.string("input_csv", "");
  dc.finish();

  auto lim = doc.child("limits");
  s.limits.power_min_mw = lim.number("power_min_mw", s.limits.power_min_mw);
  s.limits.power_max_mw = lim.number("power_max_mw", s.limits.power_max_mw);
  s.limits.power_step_mw = lim.number("power_step_mw", s.limits.power_step_mw);
  s.limits.integration_s = lim.number("integration_s", s.limits.integration_s);
  lim.finish();

  doc.finish();
  if (!missing.empty()) throw InvalidArgument("missing required keys: " + join(missing));

  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open scenario file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

nlohmann::json to_json(const Scenario& s) {
  using nlohmann::json;
  json crystal{{"label", s.crystal.label},
               {"length_mm", s.crystal.length_mm},
               {"tau_g_fs_per_mm", s.crystal.tau_g_fs_per_mm}};
  if (s.crystal.poling_period_um) crystal["poling_period_um"] = *s.crystal.poling_period_um;
  if (s.crystal.temperature_c) crystal["temperature_c"] = *s.crystal.temperature_c;

  json calibration = json::array();
  for (const auto& p : s.pump_efficiency.calibration) {
    calibration.push_back({{"power_mw", p.power_mw}, {"efficiency", p.efficiency}});
  }

  json sweep{{"points", s.sweep.points},
             {"decoder_phase_rad", s.sweep.decoder_phase_rad},
             {"contrast", s.sweep.contrast},
             {"peak_counts", s.sweep.peak_counts},
             {"noise_cps", s.sweep.noise_cps},
             {"dwell_s", s.sweep.dwell_s}};
  if (!s.sweep.input_csv.empty()) sweep["input_csv"] = s.sweep.input_csv;
  json deconv{{"iterations", s.deconv.iterations},
              {"threshold", s.deconv.threshold},
              {"dt_fs", s.deconv.dt_fs},
              {"peak_counts", s.deconv.peak_counts}};
  if (!s.deconv.input_csv.empty()) deconv["input_csv"] = s.deconv.input_csv;

  return {
      {"name", s.name},
      {"seed", s.seed},
      {"output_dir", s.output_dir},
      {"crystal", crystal},
      {"pump",
       {{"fwhm_fs", s.pump.fwhm_fs}, {"power_mw", s.pump_power_mw}, {"rep_rate_hz", s.rep_rate_hz}}},
      {"signal",
       {{"fwhm_fs", s.signal.fwhm_fs}, {"mean_photons_per_pulse", s.mean_photons_per_pulse}}},
      {"detector",
       {{"apd_efficiency", s.chain.apd_efficiency},
        {"fiber_coupling", s.chain.fiber_coupling},
        {"filter_transmittance", s.chain.filter_transmittance},
        {"pump_efficiency",
         {{"p_sat_mw", s.pump_efficiency.p_sat_mw}, {"calibration", calibration}}},
        {"noise",
         {{"dark_cps", s.noise.dark_cps},
          {"growth_per_unit_eta", s.noise.growth_per_unit_eta},
          {"calibration",
           {{"power_mw", s.noise.calibration_power_mw}, {"cps", s.noise.calibration_cps}}}}}}},
      {"grid", {{"dt_fs", s.dt_fs}}},
      {"scan",
       {{"start_fs", s.scan.start_fs},
        {"stop_fs", s.scan.stop_fs},
        {"step_fs", s.scan.step_fs},
        {"dwell_s", s.scan.dwell_s}}},
      {"sweep", sweep},
      {"timebin",
       {{"slot_spacing_fs", s.timebin.slot_spacing_fs},
        {"phi_rad", s.timebin.phi_rad},
        {"phi_prime_rad", s.timebin.phi_prime_rad},
        {"contrast", s.timebin.contrast}}},
      {"deconv", deconv},
      {"limits",
       {{"power_min_mw", s.limits.power_min_mw},
        {"power_max_mw", s.limits.power_max_mw},
        {"power_step_mw", s.limits.power_step_mw},
        {"integration_s", s.limits.integration_s}}},
  };
}

std::string scenario_hash(const Scenario& scenario) {
  auto echo = to_json(scenario);
  echo.erase("output_dir");
  const std::string text = echo.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ucspd::app
