#include "qsim/topology.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void check_params(const QubitUnitParams& p) {
  require(p.f_q > 0, "f_q must be positive");
  require(p.f_r > 0, "f_r must be positive");
  require(p.f_r > p.f_q, "f_r must exceed f_q");
  require(p.t1_q > 0, "t1_q must be positive");
  require(p.c_q > 0, "c_q must be positive");
  require(p.c_r > 0, "c_r must be positive");
  require(p.c_g >= 0, "c_g must be nonnegative");
  require(p.c_c >= 0, "c_c must be nonnegative");
  require(p.q_r > 0, "q_r must be positive");
}

DerivedElements derive_elements(const QubitUnitParams& p) {
  check_params(p);
  double wq = kTwoPi * p.f_q;
  double wr = kTwoPi * p.f_r;
  return DerivedElements{
      .r_q = p.t1_q / p.c_q,
      .l_q = 1.0 / (p.c_q * wq * wq),
      .r_r = p.q_r / (wr * p.c_r),
      .l_r = 1.0 / (p.c_r * wr * wr),
  };
}

double coupling_strength(double c_g, double c_q, double c_r, double f_q, double f_r) {
  return 0.5 * (c_g / std::sqrt(c_q * c_r)) * std::sqrt(f_q * f_r);
}

DispersiveCheck check_dispersive(double g_over_2pi, double f_q, double f_r,
                                 double threshold) {
  double delta = std::abs(f_r - f_q);
  double ratio = g_over_2pi / delta;
  return DispersiveCheck{delta, ratio, ratio < threshold};
}

DriveReport drive_current(const DriveSpec& d, double f_resonator) {
  require(d.f_cv > 0 && d.kappa > 0 && d.r0 > 0, "drive spec fields must be positive");
  double f_res = f_resonator > 0 ? f_resonator : d.f_cv;
  double f_cv = d.f_cv;
  double kappa = d.kappa;
  if (d.frequency_convention == FrequencyConvention::angular) {
    f_cv *= kTwoPi;
    kappa *= kTwoPi;
    f_res *= kTwoPi;
  }
  double i = std::sqrt(kHbar * f_cv * kappa / d.r0);
  double p = d.r0 * i * i;
  double n = p / (kappa * kHbar * f_res);
  return DriveReport{i, p, n};
}

void check_config(const ArrayConfig& cfg) {
  require(cfg.n_qubits >= 1, "n_qubits must be positive");
  require(cfg.c_qq >= 0, "c_qq must be nonnegative");
  require(cfg.termination > 0, "termination must be positive");
  require(cfg.f_q_base > 0 && cfg.f_r_base > 0, "frequency bases must be positive");
  if (cfg.arrangement == Arrangement::square_unit) {
    require(cfg.n_qubits == 4, "square_unit requires n_qubits == 4");
  }
  if (cfg.arrangement == Arrangement::square_tiled) {
    require(cfg.n_qubits % 4 == 0, "square_tiled requires n_qubits divisible by 4");
  }
  if (cfg.io_lines) {
    require(cfg.io_lines->z0 > 0, "io line z0 must be positive");
    require(cfg.io_lines->delay > 0, "io line delay must be positive");
  }
}

ArrayParams nominal_array_params(const ArrayConfig& cfg, const QubitUnitParams& base) {
  check_config(cfg);
  ArrayParams out;
  out.units.reserve(cfg.n_qubits);
  for (int i = 0; i < cfg.n_qubits; ++i) {
    QubitUnitParams u = base;
    if (cfg.arrangement == Arrangement::linear) {
      // period-4 reuse of the staggering pattern beyond four qubits
      int k = i % 4;
      u.f_q = cfg.f_q_base + k * cfg.f_q_step;
      u.f_r = cfg.f_r_base + k * cfg.f_r_step;
    } else {
      u.f_q = cfg.f_q_base;
      u.f_r = cfg.f_r_base;
    }
    check_params(u);
    out.units.push_back(u);
  }
  out.couplings.assign(coupling_edges(cfg).size(), cfg.c_qq);
  return out;
}

std::vector<CouplingEdge> coupling_edges(const ArrayConfig& cfg) {
  std::vector<CouplingEdge> edges;
  if (cfg.arrangement == Arrangement::linear) {
    for (int i = 0; i + 1 < cfg.n_qubits; ++i) edges.push_back({i, i + 1});
    return edges;
  }
  // square: units per tile laid out 0=UL, 1=UR, 2=LR, 3=LL; rings C12..C41
  int tiles = cfg.n_qubits / 4;
  for (int t = 0; t < tiles; ++t) {
    int b = 4 * t;
    edges.push_back({b + 0, b + 1});
    edges.push_back({b + 1, b + 2});
    edges.push_back({b + 2, b + 3});
    edges.push_back({b + 3, b + 0});
  }
  if (cfg.arrangement == Arrangement::square_tiled) {
    int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(tiles))));
    for (int t = 0; t < tiles; ++t) {
      int row = t / side, col = t % side;
      if (col + 1 < side && t + 1 < tiles) {  // right neighbor: UR-UL, LR-LL
        edges.push_back({4 * t + 1, 4 * (t + 1) + 0});
        edges.push_back({4 * t + 2, 4 * (t + 1) + 3});
      }
      if (t + side < tiles) {  // down neighbor: LL-UL, LR-UR
        edges.push_back({4 * t + 3, 4 * (t + side) + 0});
        edges.push_back({4 * t + 2, 4 * (t + side) + 1});
      }
      (void)row;
    }
  }
  return edges;
}

namespace {

void add_readout_unit(Netlist& nl, int index_1based, const std::string& feed,
                      const std::string& tank, const std::string& qubit,
                      const QubitUnitParams& p) {
  DerivedElements dv = derive_elements(p);
  std::string s = std::to_string(index_1based);
  if (p.c_c > 0) nl.add_capacitor("Cc" + s, feed, tank, p.c_c);
  nl.add_capacitor("Cr" + s, tank, "0", p.c_r);
  nl.add_inductor("Lr" + s, tank, "0", dv.l_r);
  nl.add_resistor("Rr" + s, tank, "0", dv.r_r);
  if (p.c_g > 0) nl.add_capacitor("Cg" + s, tank, qubit, p.c_g);
  nl.add_capacitor("Cq" + s, qubit, "0", p.c_q);
  nl.add_inductor("Lq" + s, qubit, "0", dv.l_q);
  nl.add_resistor("Rq" + s, qubit, "0", dv.r_q);
}

/// Source branch feeding `feed`: 1 V Thevenin behind r0, or the paper's
/// drive current as a Norton pair.
void add_source(Netlist& nl, const std::string& feed, const DriveSpec& d) {
  if (d.amplitude_mode == AmplitudeMode::unit_volt) {
    nl.add_ac_voltage_source("V1", "vin", "0", 1.0);
    nl.add_resistor("Rs", "vin", feed, d.r0);
  } else {
    nl.add_ac_current_source("I1", "0", feed, drive_current(d).i);
    nl.add_resistor("Rs", feed, "0", d.r0);
  }
}

std::string tank_name(int g) { return "tk" + std::to_string(g); }
std::string qubit_name(int g) { return "qb" + std::to_string(g); }

void add_internal_probes(Netlist& nl, int first, int last) {
  for (int g = first; g <= last; ++g) nl.add_probe(tank_name(g));
  for (int g = first; g <= last; ++g) nl.add_probe(qubit_name(g));
}

Netlist build_linear(const ArrayConfig& cfg, const ArrayParams& params, const DriveSpec& d) {
  Netlist nl;
  nl.title = "linear array N=" + std::to_string(cfg.n_qubits);
  std::string feed = "out1";
  if (cfg.io_lines) {
    add_source(nl, "na", d);
    nl.add_lossless_line("Tin", "na", "0", "fd", "0", cfg.io_lines->z0, cfg.io_lines->delay);
    feed = "fd";
  } else {
    add_source(nl, feed, d);
  }
  for (int i = 0; i < cfg.n_qubits; ++i) {
    add_readout_unit(nl, i + 1, feed, tank_name(i + 1), qubit_name(i + 1), params.units[i]);
  }
  if (cfg.io_lines) {
    nl.add_lossless_line("Tout", feed, "0", "out1", "0", cfg.io_lines->z0,
                         cfg.io_lines->delay);
  }
  nl.add_resistor("Rt1", "out1", "0", cfg.termination);
  auto edges = coupling_edges(cfg);
  for (size_t k = 0; k < edges.size(); ++k) {
    double c = params.couplings[k];
    if (c > 0) {
      nl.add_capacitor("Cqq" + std::to_string(edges[k].unit_a + 1) + "_" +
                           std::to_string(edges[k].unit_b + 1),
                       tank_name(edges[k].unit_a + 1), tank_name(edges[k].unit_b + 1), c);
    }
  }
  nl.add_probe("out1");
  if (cfg.probe_internal) add_internal_probes(nl, 1, std::min(cfg.n_qubits, 4));
  return nl;
}

Netlist build_square(const ArrayConfig& cfg, const ArrayParams& params, const DriveSpec& d) {
  Netlist nl;
  nl.title = (cfg.arrangement == Arrangement::square_unit ? "square unit" : "square tiling N=") +
             (cfg.arrangement == Arrangement::square_unit ? std::string()
                                                          : std::to_string(cfg.n_qubits));
  int n = cfg.n_qubits;
  auto feed_name = [&](int g) {
    return g <= 4 ? "out" + std::to_string(g) : "fd" + std::to_string(g);
  };
  std::string driven_feed = cfg.io_lines ? "fd1" : feed_name(1);
  for (int g = 1; g <= n; ++g) {
    std::string feed = (g == 1) ? driven_feed : feed_name(g);
    if (g == 1) {
      if (cfg.io_lines) {
        add_source(nl, "na", d);
        nl.add_lossless_line("Tin", "na", "0", feed, "0", cfg.io_lines->z0,
                             cfg.io_lines->delay);
        nl.add_lossless_line("Tout", feed, "0", "out1", "0", cfg.io_lines->z0,
                             cfg.io_lines->delay);
        nl.add_resistor("Rt1", "out1", "0", cfg.termination);
      } else {
        add_source(nl, feed, d);
        nl.add_resistor("Rt1", feed, "0", cfg.termination);
      }
    } else {
      nl.add_resistor("Rt" + std::to_string(g), feed, "0", cfg.termination);
    }
    add_readout_unit(nl, g, feed, tank_name(g), qubit_name(g), params.units[g - 1]);
  }
  auto edges = coupling_edges(cfg);
  for (size_t k = 0; k < edges.size(); ++k) {
    double c = params.couplings[k];
    if (c > 0) {
      nl.add_capacitor("Cqq" + std::to_string(edges[k].unit_a + 1) + "_" +
                           std::to_string(edges[k].unit_b + 1),
                       tank_name(edges[k].unit_a + 1), tank_name(edges[k].unit_b + 1), c);
    }
  }
  for (int g = 1; g <= std::min(n, 4); ++g) nl.add_probe(g == 1 ? "out1" : feed_name(g));
  if (cfg.probe_internal) add_internal_probes(nl, 1, std::min(n, 4));
  return nl;
}

}  // namespace

Netlist build_array(const ArrayConfig& cfg, const ArrayParams& params, const DriveSpec& d) {
  check_config(cfg);
  if (static_cast<int>(params.units.size()) != cfg.n_qubits) {
    throw std::invalid_argument("parameter table size does not match n_qubits");
  }
  if (params.couplings.size() != coupling_edges(cfg).size()) {
    throw std::invalid_argument("coupling table size does not match edge count");
  }
  if (cfg.arrangement == Arrangement::linear) return build_linear(cfg, params, d);
  return build_square(cfg, params, d);
}

Netlist build_linear_array(const ArrayConfig& cfg, const QubitUnitParams& p,
                           const DriveSpec& d) {
  if (cfg.arrangement != Arrangement::linear) {
    throw std::invalid_argument("build_linear_array requires linear arrangement");
  }
  return build_array(cfg, nominal_array_params(cfg, p), d);
}

Netlist build_square_array(const ArrayConfig& cfg, const QubitUnitParams& p,
                           const DriveSpec& d) {
  if (cfg.arrangement == Arrangement::linear) {
    throw std::invalid_argument("build_square_array requires a square arrangement");
  }
  return build_array(cfg, nominal_array_params(cfg, p), d);
}

Netlist build_unit(const QubitUnitParams& p, const DriveSpec& d) {
  ArrayConfig cfg;
  cfg.arrangement = Arrangement::linear;
  cfg.n_qubits = 1;
  cfg.f_q_base = p.f_q;
  cfg.f_q_step = 0;
  cfg.f_r_base = p.f_r;
  cfg.f_r_step = 0;
  cfg.c_qq = 0;
  cfg.termination = d.r0;
  Netlist nl = build_array(cfg, nominal_array_params(cfg, p), d);
  nl.title = "single readout unit";
  return nl;
}

}  // namespace qsim
