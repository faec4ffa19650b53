#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qsim/analysis.hpp"
#include "qsim/config.hpp"
#include "qsim/mna.hpp"
#include "qsim/montecarlo.hpp"
#include "qsim/netlist.hpp"
#include "qsim/sweep.hpp"
#include "qsim/topology.hpp"

namespace fs = std::filesystem;
using namespace qsim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << data;
}

int default_workers() {
  if (const char* env = std::getenv("QSIM_WORKERS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

Netlist build_from_config(const ExperimentConfig& cfg) {
  return build_array(cfg.array, nominal_array_params(cfg.array, cfg.qubit), cfg.drive);
}

PeakOptions peak_options(const ExperimentConfig& cfg) {
  PeakOptions opts;
  opts.band_boundary_hz = cfg.band_boundary();
  opts.min_points_per_fwhm = cfg.sweep.refine.min_points_per_fwhm;
  return opts;
}

std::string run_name(const char* stem, int id, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", stem, id, ext);
  return buf;
}

struct GlobalArgs {
  std::string config_path;
  std::string out_path;
  std::optional<uint64_t> seed;
  int workers = default_workers();
};

int cmd_build(const GlobalArgs& g) {
  if (g.config_path.empty()) throw ConfigError("build requires --config");
  ExperimentConfig cfg = load_config_file(g.config_path);
  Netlist netlist = build_from_config(cfg);
  auto diags = validate(netlist);
  for (const auto& d : diags) std::cerr << "diagnostic: " << d << '\n';
  if (!diags.empty()) throw ConfigError("built netlist failed validation");

  std::string out = g.out_path.empty() ? "netlist.cir" : g.out_path;
  write_file(out, emit_netlist(netlist, Dialect::native));

  DerivedElements dv = derive_elements(cfg.qubit);
  double g2pi = coupling_strength(cfg.qubit.c_g, cfg.qubit.c_q, cfg.qubit.c_r,
                                  cfg.array.f_q_base, cfg.array.f_r_base);
  DispersiveCheck disp = check_dispersive(g2pi, cfg.array.f_q_base, cfg.array.f_r_base);
  DriveReport drive = drive_current(cfg.drive, cfg.array.f_r_base);
  std::cout << "wrote " << out << " (" << netlist.elements().size() << " elements, "
            << netlist.node_count() << " nodes)\n"
            << "derived: r_q=" << format_value(dv.r_q) << " ohm, l_q=" << format_value(dv.l_q)
            << " H, r_r=" << format_value(dv.r_r) << " ohm, l_r=" << format_value(dv.l_r)
            << " H\n"
            << "g/2pi = " << format_value(g2pi / 1e9) << " GHz, delta = "
            << format_value(disp.delta / 1e9) << " GHz, g/delta = " << format_value(disp.ratio)
            << (disp.ok ? " (dispersive)" : " (NOT dispersive)") << '\n'
            << "drive: I = " << format_value(drive.i) << " A, P = " << format_value(drive.p)
            << " W, n_photons = " << format_value(drive.n_photons) << '\n';
  return 0;
}

struct PlanFlags {
  std::optional<double> f_min, f_max;
  std::optional<int> points, min_points, max_depth;
  bool log_spacing = false;
  bool no_refine = false;

  SweepPlan apply(SweepPlan plan) const {
    if (f_min) plan.f_min = *f_min;
    if (f_max) plan.f_max = *f_max;
    if (points) plan.n_coarse = *points;
    if (min_points) plan.refine.min_points_per_fwhm = *min_points;
    if (max_depth) plan.refine.max_depth = *max_depth;
    if (log_spacing) plan.log_spacing = true;
    if (no_refine) plan.refine.enabled = false;
    return plan;
  }
};

int cmd_run(const GlobalArgs& g, const std::string& netlist_path, const PlanFlags& flags) {
  SweepPlan plan;
  if (!g.config_path.empty()) plan = load_config_file(g.config_path).sweep;
  plan = flags.apply(plan);

  Netlist netlist;
  try {
    netlist = parse_netlist(read_file(netlist_path));
  } catch (const ParseError& e) {
    throw ConfigError(netlist_path + ": " + e.what());
  }
  auto diags = validate(netlist);
  if (!diags.empty()) throw ConfigError(netlist_path + ": " + diags.front());
  if (netlist.probes().empty()) throw ConfigError(netlist_path + ": no probes");

  Spectrum spec = run_sweep(netlist, plan, g.workers);
  std::ostringstream os;
  write_spectrum_csv(os, spec);
  std::string out = g.out_path.empty() ? "spectrum.csv" : g.out_path;
  write_file(out, os.str());
  std::cout << "wrote " << out << " (" << spec.size() << " frequencies, "
            << spec.probes.size() << " probes)\n";
  return 0;
}

int cmd_mc(const GlobalArgs& g) {
  if (g.config_path.empty()) throw ConfigError("mc requires --config");
  ExperimentConfig cfg = load_config_file(g.config_path);
  if (g.seed) cfg.variation.seed = *g.seed;
  std::string out_dir = g.out_path.empty() ? "mc_out" : g.out_path;
  fs::create_directories(out_dir);

  Ensemble ens = run_ensemble(cfg.array, cfg.qubit, cfg.drive, cfg.variation, cfg.sweep,
                              g.workers);
  EnsembleInfidelity inf = ensemble_infidelity(ens, cfg.fidelity_n(), cfg.analysis.tau_op,
                                               cfg.analysis.aggregation, peak_options(cfg));

  json runs = json::array();
  PeakOptions popts = peak_options(cfg);
  for (const RunRecord& run : ens.runs) {
    std::string csv_name, report_name;
    if (run.error.empty()) {
      csv_name = run_name("run", run.sample_id, "csv");
      std::ostringstream os;
      write_spectrum_csv(os, run.spectrum);
      write_file(out_dir + "/" + csv_name, os.str());

      std::vector<Peak> peaks;
      for (const auto& probe : run.spectrum.probes) {
        auto pk = find_peaks(run.spectrum, probe, run.spectrum.freqs.front(),
                             run.spectrum.freqs.back(), popts);
        peaks.insert(peaks.end(), pk.begin(), pk.end());
      }
      report_name = run_name("report", run.sample_id, "json");
      write_file(out_dir + "/" + report_name,
                 analysis_report_json(run.sample_id, peaks, cfg.analysis, cfg.fidelity_n(),
                                      inf.runs[run.sample_id])
                     .dump(2) +
                     "\n");
    }
    runs.push_back({{"sample_id", run.sample_id},
                    {"params", array_params_json(run.params)},
                    {"spectrum_csv", csv_name},
                    {"report_json", report_name},
                    {"error", run.error}});
  }

  json manifest = {{"seed", cfg.variation.seed},
                   {"delta", cfg.variation.delta},
                   {"n_runs", cfg.variation.n_runs},
                   {"topology_digest", ens.base_digest},
                   {"config_digest", [&] {
                      char buf[17];
                      uint64_t h = fnv1a64(read_file(g.config_path));
                      std::snprintf(buf, sizeof(buf), "%016llx",
                                    static_cast<unsigned long long>(h));
                      return std::string(buf);
                    }()},
                   {"effective_config", effective_json(cfg)},
                   {"runs", runs}};
  write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");

  json infid = json::array();
  json failures = json::array();
  for (const auto& r : inf.runs) {
    infid.push_back(r.value ? json(*r.value) : json(nullptr));
    if (!r.value) failures.push_back({{"sample_id", r.sample_id}, {"reason", r.reason}});
  }
  json summary = {{"infidelities", infid},
                  {"histogram",
                   {{"bin_edges", inf.histogram.bin_edges}, {"counts", inf.histogram.counts}}},
                  {"failures", failures}};
  write_file(out_dir + "/summary.json", summary.dump(2) + "\n");

  int failed = static_cast<int>(failures.size());
  std::cout << "wrote " << out_dir << "/manifest.json (" << ens.runs.size() << " runs, "
            << failed << " without infidelity)\n";
  return 0;
}

int cmd_analyze(const GlobalArgs& g, const std::string& csv_path,
                std::optional<double> tau_op, std::optional<int> n_qubits,
                const std::string& aggregation, std::optional<double> band_boundary) {
  ExperimentConfig cfg;
  if (!g.config_path.empty()) cfg = load_config_file(g.config_path);
  if (tau_op) cfg.analysis.tau_op = *tau_op;
  if (n_qubits) cfg.analysis.n_qubits_for_fidelity = *n_qubits;
  if (band_boundary) cfg.analysis.band_boundary_hz = *band_boundary;
  if (!aggregation.empty()) {
    if (aggregation == "mean") cfg.analysis.aggregation = Aggregation::mean;
    else if (aggregation == "max") cfg.analysis.aggregation = Aggregation::max;
    else if (aggregation == "per_peak") cfg.analysis.aggregation = Aggregation::per_peak;
    else throw ConfigError("unknown aggregation '" + aggregation + "'");
  }

  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open spectrum: " + csv_path);
  Spectrum spec = read_spectrum_csv(in);
  if (spec.freqs.empty()) throw ConfigError(csv_path + ": empty spectrum");

  PeakOptions popts = peak_options(cfg);
  std::vector<Peak> peaks;
  for (const auto& probe : spec.probes) {
    auto pk = find_peaks(spec, probe, spec.freqs.front(), spec.freqs.back(), popts);
    peaks.insert(peaks.end(), pk.begin(), pk.end());
  }
  RunInfidelity inf = infidelity_from_spectrum(spec, cfg.fidelity_n(), cfg.analysis.tau_op,
                                               cfg.analysis.aggregation, popts);
  json report = analysis_report_json(0, peaks, cfg.analysis, cfg.fidelity_n(), inf);
  if (g.out_path.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_file(g.out_path, report.dump(2) + "\n");
    std::cout << "wrote " << g.out_path << '\n';
  }
  return 0;
}

int cmd_fidelity(int n, double tau_op, double gamma1, std::optional<double> gamma2) {
  FidelityInput in;
  in.n_qubits = n;
  in.tau_op = tau_op;
  in.gamma1 = gamma1;
  in.gamma2 = gamma2;
  FidelityResult r = fidelity(in);
  json out = {{"f", r.f},
              {"infidelity", r.infidelity},
              {"prefactor", r.prefactor},
              {"saturated", r.saturated}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_rb_extract(const std::string& matrix_path, double t_f) {
  json doc;
  try {
    doc = json::parse(read_file(matrix_path));
  } catch (const json::exception& e) {
    throw ConfigError(matrix_path + ": " + e.what());
  }
  for (const char* key : {"a", "c", "re_b", "im_b", "alpha0", "beta0"}) {
    if (!doc.contains(key) || !doc[key].is_number()) {
      throw ConfigError(matrix_path + ": missing numeric field '" + key + "'");
    }
  }
  RbDensityMatrix rho;
  rho.a = doc["a"].get<double>();
  rho.c = doc["c"].get<double>();
  rho.b = {doc["re_b"].get<double>(), doc["im_b"].get<double>()};
  rho.alpha0 = doc["alpha0"].get<double>();
  rho.beta0 = doc["beta0"].get<double>();
  rho.t_f = t_f;
  RbRates rates;
  try {
    rates = rb_extract(rho);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  json out = {{"gamma1_per_s", rates.gamma1},
              {"gamma2_per_s", std::isinf(rates.gamma2) ? json("inf") : json(rates.gamma2)},
              {"delta_omega_rad_per_s", rates.delta_omega},
              {"flags", rates.flags}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_export_ltspice(const GlobalArgs& g, const std::string& netlist_path,
                       const PlanFlags& flags) {
  SweepPlan plan;
  if (!g.config_path.empty()) plan = load_config_file(g.config_path).sweep;
  plan = flags.apply(plan);
  Netlist netlist;
  try {
    netlist = parse_netlist(read_file(netlist_path));
  } catch (const ParseError& e) {
    throw ConfigError(netlist_path + ": " + e.what());
  }
  AcCard card{plan.f_min, plan.f_max, plan.n_coarse, plan.log_spacing};
  std::string out = g.out_path.empty() ? "netlist.net" : g.out_path;
  write_file(out, emit_netlist(netlist, Dialect::ltspice, card));
  std::cout << "wrote " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsim: frequency-domain simulation of qubit readout circuits"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "experiment config JSON");
  app.add_option("--out", g.out_path, "output path (file or directory)");
  uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Monte Carlo seed override");
  app.add_option("--workers", g.workers, "parallel workers (default env QSIM_WORKERS or 1)");

  auto* build = app.add_subcommand("build", "construct a netlist from a config");
  auto* run = app.add_subcommand("run", "AC sweep of a netlist to a spectrum CSV");
  auto* mc = app.add_subcommand("mc", "Monte Carlo ensemble with analysis reports");
  auto* analyze = app.add_subcommand("analyze", "peak/fidelity report from a spectrum CSV");
  auto* fid = app.add_subcommand("fidelity", "evaluate the fidelity formula");
  auto* rb = app.add_subcommand("rb-extract", "relaxation rates from a density matrix file");
  auto* exp = app.add_subcommand("export-ltspice", "emit an LTspice-dialect netlist");
  for (auto* sub : {build, run, mc, analyze, fid, rb, exp}) sub->fallthrough();

  std::string netlist_path, csv_path, matrix_path, aggregation;
  PlanFlags run_flags, export_flags;
  run->add_option("netlist", netlist_path, "netlist .cir path")->required();
  for (auto [sub, fl] : {std::pair{run, &run_flags}, std::pair{exp, &export_flags}}) {
    sub->add_option("--f-min", fl->f_min, "sweep start, Hz");
    sub->add_option("--f-max", fl->f_max, "sweep end, Hz");
    sub->add_option("--points", fl->points, "coarse grid points");
    sub->add_flag("--log", fl->log_spacing, "logarithmic spacing");
    sub->add_flag("--no-refine", fl->no_refine, "disable peak refinement");
    sub->add_option("--min-points-fwhm", fl->min_points, "refinement density target");
    sub->add_option("--max-depth", fl->max_depth, "refinement depth limit");
  }

  std::optional<double> an_tau, an_boundary;
  std::optional<int> an_n;
  analyze->add_option("spectrum", csv_path, "spectrum CSV path")->required();
  analyze->add_option("--tau-op", an_tau, "operating time, s");
  analyze->add_option("--n-qubits", an_n, "qubit count for the prefactor");
  analyze->add_option("--aggregation", aggregation, "mean | max | per_peak");
  analyze->add_option("--band-boundary", an_boundary, "qubit/resonator split, Hz");

  int fid_n = 1;
  double fid_tau = 1e-11, fid_g1 = 0;
  std::optional<double> fid_g2;
  fid->add_option("--n", fid_n, "qubit count")->required();
  fid->add_option("--tau-op", fid_tau, "operating time, s")->required();
  fid->add_option("--gamma1", fid_g1, "relaxation rate, 1/s")->required();
  fid->add_option("--gamma2", fid_g2, "dephasing rate, 1/s (optional)");

  double rb_tf = 0;
  rb->add_option("matrix", matrix_path, "density matrix JSON")->required();
  rb->add_option("--tf", rb_tf, "final time, s")->required();

  exp->add_option("netlist", netlist_path, "netlist .cir path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitConfig;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;
  if (g.workers < 1) g.workers = 1;

  try {
    if (build->parsed()) return cmd_build(g);
    if (run->parsed()) return cmd_run(g, netlist_path, run_flags);
    if (mc->parsed()) return cmd_mc(g);
    if (analyze->parsed()) return cmd_analyze(g, csv_path, an_tau, an_n, aggregation, an_boundary);
    if (fid->parsed()) return cmd_fidelity(fid_n, fid_tau, fid_g1, fid_g2);
    if (rb->parsed()) return cmd_rb_extract(matrix_path, rb_tf);
    if (exp->parsed()) return cmd_export_ltspice(g, netlist_path, export_flags);
  } catch (const SolveError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
