#include "qsim/config.hpp"

#include <fstream>
#include <set>

namespace qsim {

namespace {

class Section {
 public:
  Section(const json& parent, const std::string& path, const char* key,
          std::initializer_list<const char*> allowed)
      : path_(path.empty() ? key : path + "." + key) {
    if (parent.contains(key)) {
      node_ = parent.at(key);
      if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
      std::set<std::string> ok(allowed.begin(), allowed.end());
      for (auto it = node_.begin(); it != node_.end(); ++it) {
        if (!ok.count(it.key())) {
          throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
        }
      }
    }
  }

  bool present() const { return !node_.is_null(); }
  bool has(const char* key) const { return node_.contains(key); }
  const json& raw(const char* key) const { return node_.at(key); }
  std::string path(const char* key) const { return path_ + "." + key; }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
    return v.get<double>();
  }
  int integer(const char* key, int fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
    return v.get<int>();
  }
  uint64_t u64(const char* key, uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
      throw ConfigError(path(key) + ": expected an integer");
    }
    return v.get<uint64_t>();
  }
  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError(path(key) + ": expected a boolean");
    return v.get<bool>();
  }
  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
    return v.get<std::string>();
  }

  const json& node() const { return node_; }

 private:
  json node_;
  std::string path_;
};

}  // namespace

const char* to_string(Arrangement a) {
  switch (a) {
    case Arrangement::linear: return "linear";
    case Arrangement::square_unit: return "square_unit";
    case Arrangement::square_tiled: return "square_tiled";
  }
  return "?";
}

const char* to_string(Aggregation a) {
  switch (a) {
    case Aggregation::mean: return "mean";
    case Aggregation::max: return "max";
    case Aggregation::per_peak: return "per_peak";
  }
  return "?";
}

double ExperimentConfig::band_boundary() const {
  if (analysis.band_boundary_hz > 0) return analysis.band_boundary_hz;
  int steps = array.arrangement == Arrangement::linear ? std::min(array.n_qubits, 4) - 1 : 0;
  double f_q_top = array.f_q_base + steps * array.f_q_step;
  return 0.5 * (f_q_top + array.f_r_base);
}

int ExperimentConfig::fidelity_n() const {
  return analysis.n_qubits_for_fidelity > 0 ? analysis.n_qubits_for_fidelity
                                            : array.n_qubits;
}

ExperimentConfig load_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  static const std::set<std::string> kSections = {"qubit", "drive", "array",
                                                  "sweep", "variation", "analysis"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!kSections.count(it.key())) {
      throw ConfigError("unknown section '" + it.key() + "'");
    }
  }
  ExperimentConfig cfg;

  Section qubit(doc, "", "qubit",
                {"f_q_hz", "f_r_hz", "t1_q_s", "c_q_f", "c_r_f", "c_g_f", "c_c_f", "q_r"});
  cfg.qubit.f_q = qubit.number("f_q_hz", cfg.qubit.f_q);
  cfg.qubit.f_r = qubit.number("f_r_hz", cfg.qubit.f_r);
  cfg.qubit.t1_q = qubit.number("t1_q_s", cfg.qubit.t1_q);
  cfg.qubit.c_q = qubit.number("c_q_f", cfg.qubit.c_q);
  cfg.qubit.c_r = qubit.number("c_r_f", cfg.qubit.c_r);
  cfg.qubit.c_g = qubit.number("c_g_f", cfg.qubit.c_g);
  cfg.qubit.c_c = qubit.number("c_c_f", cfg.qubit.c_c);
  cfg.qubit.q_r = qubit.number("q_r", cfg.qubit.q_r);

  Section drive(doc, "", "drive",
                {"f_cv_hz", "kappa_hz", "r0_ohm", "amplitude_mode", "frequency_convention"});
  cfg.drive.f_cv = drive.number("f_cv_hz", cfg.drive.f_cv);
  cfg.drive.kappa = drive.number("kappa_hz", cfg.drive.kappa);
  cfg.drive.r0 = drive.number("r0_ohm", cfg.drive.r0);
  {
    std::string mode = drive.text("amplitude_mode", "unit_volt");
    if (mode == "unit_volt") cfg.drive.amplitude_mode = AmplitudeMode::unit_volt;
    else if (mode == "paper_current") cfg.drive.amplitude_mode = AmplitudeMode::paper_current;
    else throw ConfigError("drive.amplitude_mode: unknown value '" + mode + "'");
    std::string conv = drive.text("frequency_convention", "plain_hz");
    if (conv == "plain_hz") cfg.drive.frequency_convention = FrequencyConvention::plain_hz;
    else if (conv == "angular") cfg.drive.frequency_convention = FrequencyConvention::angular;
    else throw ConfigError("drive.frequency_convention: unknown value '" + conv + "'");
  }

  Section array(doc, "", "array",
                {"arrangement", "n_qubits", "f_q_base_hz", "f_q_step_hz", "f_r_base_hz",
                 "f_r_step_hz", "c_qq_f", "termination_ohm", "io_lines", "probe_internal"});
  {
    std::string arr = array.text("arrangement", "linear");
    if (arr == "linear") cfg.array.arrangement = Arrangement::linear;
    else if (arr == "square_unit") cfg.array.arrangement = Arrangement::square_unit;
    else if (arr == "square_tiled") cfg.array.arrangement = Arrangement::square_tiled;
    else throw ConfigError("array.arrangement: unknown value '" + arr + "'");
  }
  cfg.array.n_qubits = array.integer("n_qubits", cfg.array.n_qubits);
  cfg.array.f_q_base = array.number("f_q_base_hz", cfg.qubit.f_q);
  cfg.array.f_q_step = array.number("f_q_step_hz", cfg.array.f_q_step);
  cfg.array.f_r_base = array.number("f_r_base_hz", cfg.qubit.f_r);
  cfg.array.f_r_step = array.number("f_r_step_hz", cfg.array.f_r_step);
  cfg.array.c_qq = array.number("c_qq_f", cfg.array.c_qq);
  cfg.array.termination = array.number("termination_ohm", cfg.drive.r0);
  cfg.array.probe_internal = array.boolean("probe_internal", cfg.array.probe_internal);
  if (array.has("io_lines") && !array.raw("io_lines").is_null()) {
    Section io(array.node(), "array", "io_lines", {"z0_ohm", "delay_s"});
    IoLines lines;
    lines.z0 = io.number("z0_ohm", lines.z0);
    lines.delay = io.number("delay_s", lines.delay);
    cfg.array.io_lines = lines;
  }

  Section sweep(doc, "", "sweep",
                {"f_min_hz", "f_max_hz", "n_coarse", "spacing", "refine"});
  cfg.sweep.f_min = sweep.number("f_min_hz", cfg.sweep.f_min);
  cfg.sweep.f_max = sweep.number("f_max_hz", cfg.sweep.f_max);
  cfg.sweep.n_coarse = sweep.integer("n_coarse", cfg.sweep.n_coarse);
  {
    std::string spacing = sweep.text("spacing", "linear");
    if (spacing == "linear") cfg.sweep.log_spacing = false;
    else if (spacing == "log") cfg.sweep.log_spacing = true;
    else throw ConfigError("sweep.spacing: unknown value '" + spacing + "'");
  }
  if (sweep.has("refine")) {
    Section refine(sweep.node(), "sweep", "refine",
                   {"enabled", "min_points_per_fwhm", "max_depth"});
    cfg.sweep.refine.enabled = refine.boolean("enabled", cfg.sweep.refine.enabled);
    cfg.sweep.refine.min_points_per_fwhm =
        refine.integer("min_points_per_fwhm", cfg.sweep.refine.min_points_per_fwhm);
    cfg.sweep.refine.max_depth = refine.integer("max_depth", cfg.sweep.refine.max_depth);
  }

  Section variation(doc, "", "variation",
                    {"delta", "targets", "n_runs", "seed", "truncation"});
  cfg.variation.delta = variation.number("delta", cfg.variation.delta);
  cfg.variation.n_runs = variation.integer("n_runs", cfg.variation.n_runs);
  cfg.variation.seed = variation.u64("seed", cfg.variation.seed);
  cfg.variation.truncation = variation.number("truncation", cfg.variation.truncation);
  if (variation.has("targets")) {
    const json& t = variation.raw("targets");
    if (!t.is_array()) throw ConfigError("variation.targets: expected an array");
    static const std::set<std::string> kTargets = {"f_q", "f_r", "t1_q", "c_q",
                                                   "c_r", "c_g", "c_c", "c_qq"};
    for (const auto& v : t) {
      if (!v.is_string() || !kTargets.count(v.get<std::string>())) {
        throw ConfigError("variation.targets: unknown target " + v.dump());
      }
      cfg.variation.targets.push_back(v.get<std::string>());
    }
  }

  Section analysis(doc, "", "analysis",
                   {"tau_op_s", "n_qubits_for_fidelity", "aggregation", "band_boundary_hz"});
  cfg.analysis.tau_op = analysis.number("tau_op_s", cfg.analysis.tau_op);
  cfg.analysis.n_qubits_for_fidelity =
      analysis.integer("n_qubits_for_fidelity", cfg.analysis.n_qubits_for_fidelity);
  cfg.analysis.band_boundary_hz =
      analysis.number("band_boundary_hz", cfg.analysis.band_boundary_hz);
  {
    std::string agg = analysis.text("aggregation", "mean");
    if (agg == "mean") cfg.analysis.aggregation = Aggregation::mean;
    else if (agg == "max") cfg.analysis.aggregation = Aggregation::max;
    else if (agg == "per_peak") cfg.analysis.aggregation = Aggregation::per_peak;
    else throw ConfigError("analysis.aggregation: unknown value '" + agg + "'");
  }

  try {
    check_params(cfg.qubit);
    check_config(cfg.array);
    check_plan(cfg.sweep);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.variation.delta < 0) throw ConfigError("variation.delta must be nonnegative");
  if (cfg.variation.n_runs < 1) throw ConfigError("variation.n_runs must be at least 1");
  if (!(cfg.analysis.tau_op > 0)) throw ConfigError("analysis.tau_op_s must be positive");
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return load_config(doc);
}

json effective_json(const ExperimentConfig& cfg) {
  json io = nullptr;
  if (cfg.array.io_lines) {
    io = {{"z0_ohm", cfg.array.io_lines->z0}, {"delay_s", cfg.array.io_lines->delay}};
  }
  json targets = json::array();
  for (const auto& t :
       (cfg.variation.targets.empty() ? default_variation_targets() : cfg.variation.targets)) {
    targets.push_back(t);
  }
  return json{
      {"qubit",
       {{"f_q_hz", cfg.qubit.f_q},
        {"f_r_hz", cfg.qubit.f_r},
        {"t1_q_s", cfg.qubit.t1_q},
        {"c_q_f", cfg.qubit.c_q},
        {"c_r_f", cfg.qubit.c_r},
        {"c_g_f", cfg.qubit.c_g},
        {"c_c_f", cfg.qubit.c_c},
        {"q_r", cfg.qubit.q_r}}},
      {"drive",
       {{"f_cv_hz", cfg.drive.f_cv},
        {"kappa_hz", cfg.drive.kappa},
        {"r0_ohm", cfg.drive.r0},
        {"amplitude_mode",
         cfg.drive.amplitude_mode == AmplitudeMode::unit_volt ? "unit_volt" : "paper_current"},
        {"frequency_convention",
         cfg.drive.frequency_convention == FrequencyConvention::plain_hz ? "plain_hz"
                                                                         : "angular"}}},
      {"array",
       {{"arrangement", to_string(cfg.array.arrangement)},
        {"n_qubits", cfg.array.n_qubits},
        {"f_q_base_hz", cfg.array.f_q_base},
        {"f_q_step_hz", cfg.array.f_q_step},
        {"f_r_base_hz", cfg.array.f_r_base},
        {"f_r_step_hz", cfg.array.f_r_step},
        {"c_qq_f", cfg.array.c_qq},
        {"termination_ohm", cfg.array.termination},
        {"io_lines", io},
        {"probe_internal", cfg.array.probe_internal}}},
      {"sweep",
       {{"f_min_hz", cfg.sweep.f_min},
        {"f_max_hz", cfg.sweep.f_max},
        {"n_coarse", cfg.sweep.n_coarse},
        {"spacing", cfg.sweep.log_spacing ? "log" : "linear"},
        {"refine",
         {{"enabled", cfg.sweep.refine.enabled},
          {"min_points_per_fwhm", cfg.sweep.refine.min_points_per_fwhm},
          {"max_depth", cfg.sweep.refine.max_depth}}}}},
      {"variation",
       {{"delta", cfg.variation.delta},
        {"targets", targets},
        {"n_runs", cfg.variation.n_runs},
        {"seed", cfg.variation.seed},
        {"truncation", cfg.variation.truncation}}},
      {"analysis",
       {{"tau_op_s", cfg.analysis.tau_op},
        {"n_qubits_for_fidelity", cfg.fidelity_n()},
        {"aggregation", to_string(cfg.analysis.aggregation)},
        {"band_boundary_hz", cfg.band_boundary()}}},
  };
}

json analysis_report_json(int run_id, const std::vector<Peak>& peaks,
                          const AnalysisConfig& analysis, int n_qubits,
                          const RunInfidelity& infidelity) {
  json jp = json::array();
  for (const Peak& p : peaks) {
    jp.push_back({{"probe", p.probe},
                  {"f_peak_hz", p.f_peak},
                  {"fwhm_hz", p.fwhm_hz},
                  {"q", p.q_p},
                  {"t1m_s", p.t1_m},
                  {"gamma1_per_s", p.gamma1},
                  {"band", p.band == Band::qubit ? "qubit" : "resonator"},
                  {"resolved", p.resolved}});
  }
  json flags = json::array();
  for (const Peak& p : peaks) {
    if (p.merged) flags.push_back("merged peak at " + format_value(p.f_peak) + " Hz");
    if (p.truncated) flags.push_back("band-truncated peak at " + format_value(p.f_peak) + " Hz");
  }
  if (!infidelity.reason.empty()) flags.push_back(infidelity.reason);
  json inf = {{"n_qubits", n_qubits},
              {"tau_op_s", analysis.tau_op},
              {"aggregation", to_string(analysis.aggregation)},
              {"value", infidelity.value ? json(*infidelity.value) : json(nullptr)}};
  if (!infidelity.per_peak.empty()) inf["per_peak"] = infidelity.per_peak;
  return json{{"run_id", run_id}, {"peaks", jp}, {"infidelity", inf}, {"flags", flags}};
}

json array_params_json(const ArrayParams& params) {
  json units = json::array();
  for (const auto& u : params.units) {
    units.push_back({{"f_q_hz", u.f_q},
                     {"f_r_hz", u.f_r},
                     {"t1_q_s", u.t1_q},
                     {"c_q_f", u.c_q},
                     {"c_r_f", u.c_r},
                     {"c_g_f", u.c_g},
                     {"c_c_f", u.c_c},
                     {"q_r", u.q_r}});
  }
  return json{{"units", units}, {"couplings", params.couplings}};
}

}  // namespace qsim
