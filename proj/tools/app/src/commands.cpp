#include "ucspd_app/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>

#include "ucspd/analysis.hpp"
#include "ucspd/error.hpp"
#include "ucspd/simulate.hpp"
#include "ucspd/timebin.hpp"
#include "ucspd_app/artifacts.hpp"

namespace ucspd::app {
namespace {

using nlohmann::json;

json model_versions(const std::string& rng) {
  return {{"ucspd", UCSPD_VERSION},
          {"resolution", "gaussian-pump*gate/1"},
          {"detector", "saturating-efficiency+exponential-noise/1"},
          {"rng", rng}};
}

PulseSpec centered(const PulseSpec& p) { return {p.fwhm_fs, 0.0, 1.0}; }

SampledWaveform resolution(const Scenario& s, double dt) {
  const auto pump = centered(s.pump);
  return resolution_function(pump, s.crystal,
                             Grid::centered(resolution_half_span(pump, s.crystal), dt));
}

SampledWaveform signal_pulse(const Scenario& s, double dt) {
  return gaussian_waveform(centered(s.signal), Grid::centered(4.0 * s.signal.fwhm_fs, dt));
}

// Grid holding a three-slot train plus room for the resolution tails, with a sample at t = 0.
Grid train_grid(const Scenario& s, double dt) {
  const double margin =
      3.0 * s.signal.fwhm_fs + resolution_half_span(centered(s.pump), s.crystal);
  const double lo = -std::ceil(margin / dt) * dt;
  const double hi = 2.0 * s.timebin.slot_spacing_fs + margin;
  return {lo, dt, static_cast<std::size_t>(std::ceil((hi - lo) / dt)) + 1};
}

TimeBinState timebin_state(const Scenario& s) {
  return cascade(s.timebin.phi_rad, s.timebin.phi_prime_rad, s.timebin.slot_spacing_fs,
                 s.timebin.contrast);
}

std::vector<std::vector<std::string>> scan_rows(const ScanResult& r) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(r.coordinates.size());
  for (std::size_t i = 0; i < r.coordinates.size(); ++i) {
    rows.push_back({format_shortest(r.coordinates[i]), std::to_string(r.counts[i]),
                    format_shortest(r.expected[i])});
  }
  return rows;
}

json waveform_points(const SampledWaveform& w, const std::vector<std::size_t>& idx) {
  json out = json::array();
  for (auto k : idx) out.push_back({{"t_fs", w.time(k)}, {"value", w[k]}});
  return out;
}

json sine_fit_json(const SineFit& f) {
  return {{"visibility", f.visibility},
          {"sigma_visibility", f.sigma_visibility},
          {"offset_cps", f.offset},
          {"sigma_offset_cps", f.sigma_offset},
          {"amplitude_cps", f.amplitude},
          {"sigma_amplitude_cps", f.sigma_amplitude},
          {"phase0_rad", f.phase0},
          {"sigma_phase0_rad", f.sigma_phase0},
          {"chi2_reduced", f.chi2_reduced},
          {"dof", f.dof},
          {"sigma_method", "fit covariance scaled by reduced chi-square"}};
}

PlotSeries series(std::string label, const SampledWaveform& w) {
  PlotSeries s{std::move(label), {}, {}, false};
  for (std::size_t k = 0; k < w.size(); ++k) {
    s.x.push_back(w.time(k));
    s.y.push_back(w[k]);
  }
  return s;
}

PlotSeries series(std::string label, std::vector<double> x, std::vector<double> y,
                  bool markers) {
  return {std::move(label), std::move(x), std::move(y), markers};
}

CommandResult finish(ArtifactWriter& out, const std::string& json_name, json body) {
  body["files"] = out.files();
  out.json(json_name, body);
  body["scenario_hash"] = out.hash();
  return {body, out.files(), out.warnings()};
}

ScanResult simulate_sweep(const Scenario& s) {
  PhaseSweepConfig cfg;
  for (int i = 0; i < s.sweep.points; ++i) {
    cfg.phases.push_back(2.0 * std::numbers::pi * i / s.sweep.points);
  }
  cfg.decoder_phase_rad = s.sweep.decoder_phase_rad;
  cfg.contrast = s.sweep.contrast;
  // center_bin_expectation peaks at (1 + c) / 3
  cfg.counts_scale = 3.0 * s.sweep.peak_counts / (1.0 + s.sweep.contrast);
  cfg.noise_cps = s.sweep.noise_cps;
  cfg.dwell_s = s.sweep.dwell_s;
  cfg.seed = s.seed;
  return run_phase_sweep(cfg, {0});
}

// coord,counts[,...] with '#' comment lines.
ScanResult read_counts_csv(const std::filesystem::path& path, double dwell_s) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  ScanResult r;
  r.config.kind = ScanKind::phase;
  r.config.dwell_s = dwell_s;
  r.rng = "external data";
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line.rfind("coord,counts", 0) != 0) {
        throw InvalidArgument(path.string() + ": expected header starting 'coord,counts'");
      }
      header = true;
      continue;
    }
    const auto c1 = line.find(',');
    if (c1 == std::string::npos) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": expected 'coord,counts'");
    }
    auto c2 = line.find(',', c1 + 1);
    if (c2 == std::string::npos) c2 = line.size();
    double coord = 0.0, counts = 0.0;
    const char* b = line.data();
    const auto r1 = std::from_chars(b, b + c1, coord);
    const auto r2 = std::from_chars(b + c1 + 1, b + c2, counts);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} ||
        r1.ptr != b + c1 || r2.ptr != b + c2 || counts < 0.0 || counts != std::floor(counts)) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                            ": expected 'coord,counts' with non-negative integer counts");
    }
    r.coordinates.push_back(coord);
    r.counts.push_back(static_cast<std::uint64_t>(counts));
    r.expected.push_back(counts);
  }
  if (!header) throw InvalidArgument(path.string() + ": no data");
  r.config.coordinates = r.coordinates;
  return r;
}

CommandResult cmd_resolve(const Scenario& s, ArtifactWriter& out) {
  const auto t = resolution(s, s.dt_fs);
  const auto measured = predict_measured(signal_pulse(s, s.dt_fs), t, Normalization::peak);
  out.waveform("resolution.csv", t);
  PlotSpec plot{"Temporal resolution function, L = " + format_shortest(s.crystal.length_mm) +
                    " mm",
                "t (fs)", "T(t) (normalized)", false, {series("T(t)", t)}};
  plot.series.push_back(series("signal (*) T", measured));
  out.plot("resolution.svg", plot);
  return finish(out, "resolution.json",
                {{"crystal", s.crystal.label},
                 {"L_mm", s.crystal.length_mm},
                 {"tau_g", s.crystal.tau_g_fs_per_mm},
                 {"gate_width_fs", s.crystal.gate_width_fs()},
                 {"pump_fwhm_fs", s.pump.fwhm_fs},
                 {"fwhm_fs", fwhm(t)},
                 {"signal_fwhm_fs", s.signal.fwhm_fs},
                 {"measured_fwhm_fs", fwhm(measured)},
                 {"pump_power_mw", s.pump_power_mw},
                 {"eta_internal", s.eta_internal()},
                 {"eta_external", s.eta_external()},
                 {"dt_fs", s.dt_fs}});
}

CommandResult cmd_scan(const Scenario& s, ArtifactWriter& out) {
  const auto t = resolution(s, s.dt_fs);
  const OverlapKernel overlap(signal_pulse(s, s.dt_fs), t);
  const RateParameters rate{s.mean_photons_per_pulse, s.eta_external(), s.rep_rate_hz,
                            s.operating_noise_cps()};
  ScanConfig cfg;
  cfg.kind = ScanKind::delay;
  cfg.coordinates = linear_coordinates(s.scan.start_fs, s.scan.stop_fs, s.scan.step_fs);
  cfg.dwell_s = s.scan.dwell_s;
  cfg.mean_photons_per_pulse = s.mean_photons_per_pulse;
  cfg.rep_rate_hz = s.rep_rate_hz;
  cfg.seed = s.seed;
  const auto r =
      run_scan(cfg, [&](double d) { return expected_rate(overlap, d, rate); }, {0});
  out.csv("scan.csv", "coord,counts,expected", scan_rows(r));

  json fit_json;
  PlotSpec plot{"Delay scan, L = " + format_shortest(s.crystal.length_mm) + " mm",
                "pump delay (fs)", "counts", false,
                {series("counts", r.coordinates, as_doubles(r.counts), true),
                 series("expected", r.coordinates, r.expected, false)}};
  try {
    const auto fit = fit_erf_gate(r, s.pump.fwhm_fs, s.signal.fwhm_fs);
    const CrystalSpec fitted{fit.gate_width_fs / s.crystal.tau_g_fs_per_mm,
                             s.crystal.tau_g_fs_per_mm, s.crystal.label, {}, {}};
    const auto pump = centered(s.pump);
    const double fitted_fwhm = fwhm(resolution_function(
        pump, fitted, Grid::centered(resolution_half_span(pump, fitted), s.dt_fs)));
    const double model_fwhm = fwhm(t);
    fit_json = {{"converged", true},
                {"gate_width_fs", fit.gate_width_fs},
                {"sigma_gate_width_fs", fit.uncertainty_fs},
                {"center_fs", fit.params.center_fs},
                {"background_counts", fit.params.background},
                {"chi2_reduced", fit.chi2_reduced},
                {"iterations", fit.iterations},
                {"resolution_fwhm_fs", fitted_fwhm},
                {"model_fwhm_fs", model_fwhm},
                {"relative_difference", fitted_fwhm / model_fwhm - 1.0}};
    std::vector<double> model;
    for (double d : r.coordinates) {
      model.push_back(gate_model(d, fit.params, s.pump.fwhm_fs, s.signal.fwhm_fs));
    }
    plot.series.push_back(series("gate fit", r.coordinates, model, false));
  } catch (const NumericalError& e) {
    fit_json = {{"converged", false}, {"error", e.what()}};
  }
  out.plot("scan.svg", plot);

  return finish(out, "scan.json",
                {{"kind", to_string(cfg.kind)},
                 {"seed", s.seed},
                 {"points", r.coordinates.size()},
                 {"dwell_s", cfg.dwell_s},
                 {"rate",
                  {{"mean_photons_per_pulse", rate.mean_photons_per_pulse},
                   {"eta_external", rate.external_eta},
                   {"rep_rate_hz", rate.rep_rate_hz},
                   {"noise_cps", rate.noise_cps}}},
                 {"model_versions", model_versions(r.rng)},
                 {"gate_fit", fit_json}});
}

CommandResult cmd_sweep(const Scenario& s, ArtifactWriter& out) {
  const auto r = simulate_sweep(s);
  out.csv("sweep.csv", "coord,counts,expected", scan_rows(r));
  const auto fit = fit_sine(r);
  out.plot("sweep.svg",
           {"Phase sweep", "encoder phase (rad)", "center-slot counts", false,
            {series("counts", r.coordinates, as_doubles(r.counts), true),
             series("expected", r.coordinates, r.expected, false)}});
  return finish(out, "sweep.json",
                {{"kind", to_string(r.config.kind)},
                 {"seed", s.seed},
                 {"points", r.coordinates.size()},
                 {"dwell_s", s.sweep.dwell_s},
                 {"contrast", s.sweep.contrast},
                 {"decoder_phase_rad", s.sweep.decoder_phase_rad},
                 {"peak_counts", s.sweep.peak_counts},
                 {"noise_cps", s.sweep.noise_cps},
                 {"model_versions", model_versions(r.rng)},
                 {"fit", sine_fit_json(fit)}});
}

CommandResult cmd_fitvis(const Scenario& s, ArtifactWriter& out) {
  const bool external = !s.sweep.input_csv.empty();
  const auto r = external ? read_counts_csv(s.resolve_input(s.sweep.input_csv), s.sweep.dwell_s)
                          : simulate_sweep(s);
  const auto counts = as_doubles(r.counts);
  const auto fit = fit_sine(r.coordinates, counts, s.sweep.dwell_s);

  json residuals = json::array();
  std::vector<double> model;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double m =
        s.sweep.dwell_s * (fit.offset + fit.amplitude * std::cos(r.coordinates[i] - fit.phase0));
    model.push_back(m);
    residuals.push_back({{"coord", r.coordinates[i]},
                         {"counts", r.counts[i]},
                         {"model", m},
                         {"normalized", (counts[i] - m) / std::sqrt(std::max(counts[i], 1.0))}});
  }
  out.plot("fitvis.svg", {"Visibility fit", "phase (rad)", "counts", false,
                          {series("counts", r.coordinates, counts, true),
                           series("fit", r.coordinates, model, false)}});
  return finish(out, "fitvis.json",
                {{"source", external ? s.sweep.input_csv : std::string("simulated sweep")},
                 {"settings",
                  {{"model", "dwell * offset * (1 + V cos(phi - phase0))"},
                   {"method", "Poisson-weighted linear least squares"},
                   {"dwell_s", s.sweep.dwell_s}}},
                 {"iterations", 1},
                 {"fit", sine_fit_json(fit)},
                 {"residuals", residuals}});
}

CommandResult cmd_timebin(const Scenario& s, ArtifactWriter& out) {
  const auto state = timebin_state(s);
  const auto p = slot_probabilities(state);
  const auto grid = train_grid(s, s.dt_fs);
  const auto synth = synthesize_waveform(state, s.signal.fwhm_fs, grid);
  const auto measured = convolve_same(synth, resolution(s, s.dt_fs).area_normalized());
  out.waveform("timebin_waveform.csv", synth);
  out.waveform("timebin_measured.csv", measured);
  out.plot("timebin.svg", {"Time-bin cascade output", "t (fs)", "intensity", false,
                           {series("synthesized", synth), series("measured (* T)", measured)}});

  json amplitudes = json::array();
  for (const auto& a : state.amplitudes) amplitudes.push_back({a.real(), a.imag()});
  const double dphi = s.timebin.phi_rad - s.timebin.phi_prime_rad;
  return finish(out, "timebin.json",
                {{"slot_spacing_fs", s.timebin.slot_spacing_fs},
                 {"phi_rad", s.timebin.phi_rad},
                 {"phi_prime_rad", s.timebin.phi_prime_rad},
                 {"contrast", s.timebin.contrast},
                 {"amplitudes", amplitudes},
                 {"slot_probabilities", p},
                 {"center_to_side_ratio", p[1] / (0.5 * (p[0] + p[2]))},
                 {"center_bin_expectation", center_bin_expectation(dphi, s.timebin.contrast)}});
}

CommandResult cmd_limits(const Scenario& s, ArtifactWriter& out) {
  const auto powers =
      linear_coordinates(s.limits.power_min_mw, s.limits.power_max_mw, s.limits.power_step_mw);
  const auto sweep = sweep_limits(s.pump_model, s.noise_model, s.chain, powers,
                                  s.limits.integration_s, s.rep_rate_hz);
  std::vector<std::vector<std::string>> rows;
  PlotSeries lim{"detection limit", {}, {}, true};
  for (const auto& pt : sweep.points) {
    rows.push_back({format_shortest(pt.power_mw), format_shortest(pt.eta_internal),
                    format_shortest(pt.eta_external), format_shortest(pt.noise_cps),
                    format_shortest(pt.limit_per_pulse)});
    lim.x.push_back(pt.power_mw);
    lim.y.push_back(pt.limit_per_pulse);
  }
  out.csv("limits.csv", "power_mw,eta_internal,eta_external,noise_cps,limit_per_pulse", rows);
  out.plot("limits.svg",
           {"Detection limit vs pump power", "pump power (mW)", "photons per pulse", true, {lim}});

  const double noise = s.operating_noise_cps();
  const double limit =
      detection_limit(noise, s.limits.integration_s, s.eta_external(), s.rep_rate_hz);
  return finish(out, "limits.json",
                {{"integration_s", s.limits.integration_s},
                 {"rep_rate_hz", s.rep_rate_hz},
                 {"argmin_power_mw", sweep.best().power_mw},
                 {"min_limit_per_pulse", sweep.best().limit_per_pulse},
                 {"operating",
                  {{"power_mw", s.pump_power_mw},
                   {"eta_internal", s.eta_internal()},
                   {"eta_external", s.eta_external()},
                   {"noise_cps", noise},
                   {"limit_per_pulse", limit}}},
                 {"pump_model", {{"eta_max", s.pump_model.eta_max}, {"p_sat_mw", s.pump_model.p_sat_mw}}},
                 {"noise_model",
                  {{"dark_cps", s.noise_model.dark_cps},
                   {"n0_cps", s.noise_model.n0_cps},
                   {"growth_per_unit_eta", s.noise_model.growth_per_unit_eta}}}});
}

CommandResult cmd_deconv(const Scenario& s, ArtifactWriter& out) {
  const bool external = !s.deconv.input_csv.empty();
  std::optional<SampledWaveform> measured;
  json truth;
  if (external) {
    std::ifstream in(s.resolve_input(s.deconv.input_csv));
    if (!in) throw InvalidArgument("cannot open '" + s.deconv.input_csv + "'");
    measured = read_waveform_csv(in);
  } else {
    const auto state = timebin_state(s);
    const auto grid = train_grid(s, s.deconv.dt_fs);
    const auto blurred =
        convolve_same(synthesize_waveform(state, s.signal.fwhm_fs, grid),
                      resolution(s, s.deconv.dt_fs).area_normalized());
    const auto expected = blurred.scaled(s.deconv.peak_counts / blurred.max());
    ScanConfig cfg;
    for (std::size_t k = 0; k < grid.n; ++k) cfg.coordinates.push_back(grid.time(k));
    cfg.seed = s.seed;
    const auto r = run_scan(cfg, [&](double t) { return expected.at(t); }, {0});
    measured.emplace(grid, as_doubles(r.counts));
    const auto p = slot_probabilities(state);
    truth = {{"slot_probabilities", p}, {"center_to_side_ratio", p[1] / (0.5 * (p[0] + p[2]))}};
  }

  const DeconvolutionSettings settings{"richardson-lucy", s.deconv.iterations,
                                       s.deconv.threshold};
  const auto r = deconvolve(*measured, resolution(s, measured->dt()), settings);
  const auto peaks = find_peaks(r.estimate, 0.1, 0.5 * s.timebin.slot_spacing_fs);
  out.waveform("deconv_measured.csv", *measured);
  out.waveform("deconv_estimate.csv", r.estimate);
  out.plot("deconv.svg", {"Richardson-Lucy deconvolution", "t (fs)", "counts", false,
                          {series("measured", *measured), series("estimate", r.estimate)}});

  json body{{"source", external ? s.deconv.input_csv : std::string("simulated three-slot train")},
            {"settings",
             {{"algorithm", settings.algorithm},
              {"iterations", settings.iterations},
              {"threshold", settings.threshold},
              {"dt_fs", measured->dt()},
              {"peak_counts", s.deconv.peak_counts},
              {"seed", s.seed}}},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"relative_change", r.relative_change},
            {"residual", r.residual},
            {"peaks", waveform_points(r.estimate, peaks)}};
  if (peaks.size() == 3) {
    const auto& e = r.estimate;
    body["center_to_side_ratio"] = e[peaks[1]] / (0.5 * (e[peaks[0]] + e[peaks[2]]));
    body["peak_spacing_fs"] = {e.time(peaks[1]) - e.time(peaks[0]),
                               e.time(peaks[2]) - e.time(peaks[1])};
  }
  if (!truth.is_null()) body["truth"] = truth;
  return finish(out, "deconv.json", body);
}

CommandResult cmd_report(const Scenario& s, ArtifactWriter& out) {
  CommandResult all;
  for (const char* step : {"resolve", "scan", "sweep", "timebin", "limits", "deconv"}) {
    auto r = run_command(step, s, out.dir());
    all.files.insert(all.files.end(), r.files.begin(), r.files.end());
    all.warnings.insert(all.warnings.end(), r.warnings.begin(), r.warnings.end());
  }
  auto summary = aggregate_report(out.dir(), out.hash());
  summary["name"] = s.name;
  out.json("report.json", summary);
  summary["scenario_hash"] = out.hash();
  all.files.push_back("report.json");
  all.summary = summary;
  return all;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("report: missing artifact '" + path.string() + "'");
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw InvalidArgument("report: '" + path.string() + "' is not a JSON object");
  }
  return j;
}

void require_hash(const std::filesystem::path& path, const std::string& expected) {
  const auto h = read_artifact_hash(path);
  if (h != expected) {
    throw InvalidArgument("report: '" + path.filename().string() + "' has scenario hash '" + h +
                          "', expected '" + expected + "'");
  }
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"resolve", "scan",   "sweep",  "timebin",
                                              "limits",  "deconv", "fitvis", "report"};
  return names;
}

CommandResult run_command(const std::string& name, const Scenario& scenario,
                          const std::filesystem::path& out_dir) {
  ArtifactWriter out(out_dir, scenario_hash(scenario));
  if (name == "resolve") return cmd_resolve(scenario, out);
  if (name == "scan") return cmd_scan(scenario, out);
  if (name == "sweep") return cmd_sweep(scenario, out);
  if (name == "timebin") return cmd_timebin(scenario, out);
  if (name == "limits") return cmd_limits(scenario, out);
  if (name == "deconv") return cmd_deconv(scenario, out);
  if (name == "fitvis") return cmd_fitvis(scenario, out);
  if (name == "report") return cmd_report(scenario, out);
  throw InvalidArgument("unknown subcommand '" + name + "'");
}

json aggregate_report(const std::filesystem::path& dir, const std::string& expected_hash) {
  std::map<std::string, json> parts;
  for (const char* name : {"resolution", "limits", "sweep", "scan", "deconv", "timebin"}) {
    const auto path = dir / (std::string(name) + ".json");
    const bool required = std::string_view(name) == "resolution" ||
                          std::string_view(name) == "limits" || std::string_view(name) == "sweep";
    if (!required && !std::filesystem::exists(path)) continue;
    auto j = read_json(path);
    require_hash(path, expected_hash);
    if (j.contains("files")) {
      for (const auto& f : j["files"]) require_hash(dir / f.get<std::string>(), expected_hash);
    }
    parts[name] = std::move(j);
  }

  const auto& res = parts.at("resolution");
  const auto& lim = parts.at("limits");
  const auto& fit = parts.at("sweep").at("fit");
  json summary{{"fwhm_fs", res.at("fwhm_fs")},
               {"L_mm", res.at("L_mm")},
               {"eta_internal", lim.at("operating").at("eta_internal")},
               {"eta_external", lim.at("operating").at("eta_external")},
               {"noise_cps", lim.at("operating").at("noise_cps")},
               {"limit", lim.at("operating").at("limit_per_pulse")},
               {"min_limit", lim.at("min_limit_per_pulse")},
               {"argmin_power_mw", lim.at("argmin_power_mw")},
               {"visibility", fit.at("visibility")},
               {"sigma_visibility", fit.at("sigma_visibility")}};
  if (parts.count("scan") && parts["scan"]["gate_fit"].value("converged", false)) {
    summary["fitted_resolution_fwhm_fs"] = parts["scan"]["gate_fit"]["resolution_fwhm_fs"];
  }
  if (parts.count("deconv") && parts["deconv"].contains("center_to_side_ratio")) {
    summary["deconv_center_to_side_ratio"] = parts["deconv"]["center_to_side_ratio"];
  }
  json sources = json::array();
  for (const auto& [name, j] : parts) sources.push_back(name + ".json");
  summary["sources"] = sources;
  return summary;
}

}  // namespace ucspd::app
