#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsim/netlist.hpp"

namespace qsim {

inline constexpr double kHbar = 1.054571817e-34;  // J*s

/// Physical parameters of one qubit + tank readout unit.
/// c_c couples feedline to tank, c_g couples tank to qubit; either may be
/// zero, which omits the coupling capacitor entirely.
struct QubitUnitParams {
  double f_q = 6e9;       // qubit frequency, Hz
  double f_r = 8e9;       // tank (readout resonator) frequency, Hz
  double t1_q = 1e-6;     // qubit relaxation time, s
  double c_q = 30e-15;    // qubit capacitance, F
  double c_r = 20e-15;    // tank capacitance, F
  double c_g = 0.1e-15;   // tank-qubit coupling capacitance, F
  double c_c = 0.1e-15;   // feedline-tank coupling capacitance, F
  double q_r = 8000.0;    // tank loaded quality factor (sets tank loss)

  friend bool operator==(const QubitUnitParams&, const QubitUnitParams&) = default;
};

/// Throws std::invalid_argument when a field is out of range (f_r > f_q required).
void check_params(const QubitUnitParams& p);

struct DerivedElements {
  double r_q;  // qubit loss resistance, T1/Cq
  double l_q;  // qubit inductance, 1/(Cq wq^2)
  double r_r;  // tank loss resistance, Qr/(wr Cr)
  double l_r;  // tank inductance, 1/(Cr wr^2)
};

DerivedElements derive_elements(const QubitUnitParams& p);

/// Eq.-style qubit-line coupling: g/2pi = (1/2) (Cg/sqrt(Cq Cr)) sqrt(fq fr), Hz.
double coupling_strength(double c_g, double c_q, double c_r, double f_q, double f_r);

struct DispersiveCheck {
  double delta;  // |f_r - f_q|, Hz
  double ratio;  // g / delta
  bool ok;       // ratio below threshold
};

DispersiveCheck check_dispersive(double g_over_2pi, double f_q, double f_r,
                                 double threshold = 0.1);

enum class AmplitudeMode { unit_volt, paper_current };
enum class FrequencyConvention { plain_hz, angular };

struct DriveSpec {
  double f_cv = 3e9;    // transmission-line resonant frequency, Hz
  double kappa = 1e6;   // photon decay rate, Hz
  double r0 = 50.0;     // reference impedance, ohms
  AmplitudeMode amplitude_mode = AmplitudeMode::unit_volt;
  FrequencyConvention frequency_convention = FrequencyConvention::plain_hz;

  friend bool operator==(const DriveSpec&, const DriveSpec&) = default;
};

struct DriveReport {
  double i;          // drive current, A
  double p;          // input power, W
  double n_photons;  // photon number in the readout resonator
};

/// I = sqrt(hbar f_cv kappa / r0) with plain_hz; angular adds the 2pi factors.
/// f_resonator enters the photon estimate n = P/(kappa hbar f); pass 0 to use f_cv.
DriveReport drive_current(const DriveSpec& d, double f_resonator = 0.0);

enum class Arrangement { linear, square_unit, square_tiled };

struct IoLines {
  double z0 = 50.0;
  double delay = 10e-9;

  friend bool operator==(const IoLines&, const IoLines&) = default;
};

struct ArrayConfig {
  Arrangement arrangement = Arrangement::linear;
  int n_qubits = 4;
  double f_q_base = 6e9;
  double f_q_step = 0.2e9;
  double f_r_base = 8e9;
  double f_r_step = 0.2e9;
  double c_qq = 0.0;  // nearest-neighbor readout coupling capacitance; 0 disables
  std::optional<IoLines> io_lines;
  double termination = 50.0;
  bool probe_internal = true;  // also probe tank/qubit nodes (first tile)

  friend bool operator==(const ArrayConfig&, const ArrayConfig&) = default;
};

void check_config(const ArrayConfig& cfg);

/// Full parameter table of an array build: one entry per unit plus one
/// coupling value per edge (edge order fixed by coupling_edges). This is the
/// surface the Monte Carlo module perturbs before rebuilding.
struct ArrayParams {
  std::vector<QubitUnitParams> units;
  std::vector<double> couplings;
};

/// Nominal per-unit parameters: staggering with period-4 frequency reuse for
/// linear chains, the base pair everywhere for square arrangements.
ArrayParams nominal_array_params(const ArrayConfig& cfg, const QubitUnitParams& base);

struct CouplingEdge {
  int unit_a;
  int unit_b;
};

/// Deterministic edge enumeration shared by builders and the Monte Carlo
/// perturbation (linear chain: i,i+1; square: per-tile ring then inter-tile).
std::vector<CouplingEdge> coupling_edges(const ArrayConfig& cfg);

Netlist build_unit(const QubitUnitParams& p, const DriveSpec& d);

Netlist build_linear_array(const ArrayConfig& cfg, const QubitUnitParams& p, const DriveSpec& d);
Netlist build_square_array(const ArrayConfig& cfg, const QubitUnitParams& p, const DriveSpec& d);

/// Rebuild from an explicit (possibly perturbed) parameter table.
Netlist build_array(const ArrayConfig& cfg, const ArrayParams& params, const DriveSpec& d);

}  // namespace qsim
