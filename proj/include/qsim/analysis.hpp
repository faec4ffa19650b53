#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "qsim/montecarlo.hpp"
#include "qsim/sweep.hpp"

namespace qsim {

enum class Band { qubit, resonator };

struct Peak {
  std::string probe;
  double f_peak = 0.0;         // Hz, at the sampled maximum
  double height = 0.0;         // |V| at the maximum
  double fwhm_hz = 0.0;
  double delta_omega_p = 0.0;  // 2*pi*fwhm_hz, rad/s
  double q_p = 0.0;            // f_peak / fwhm_hz
  double t1_m = 0.0;           // 1 / delta_omega_p, s
  double gamma1 = 0.0;         // 1 / t1_m, 1/s
  Band band = Band::resonator;
  bool resolved = false;       // enough samples inside the width interval
  bool merged = false;         // absorbed an overlapping neighbor
  bool truncated = false;      // a half-height crossing fell outside the band
};

struct PeakOptions {
  /// A maximum qualifies when its height exceeds this multiple of the band
  /// median magnitude.
  double prominence_factor = 3.0;
  /// Crossing level as a fraction of peak height. The default 1/sqrt(2) is the
  /// half-power width measured on |V|, which makes a parallel RLC report
  /// delta_omega = 1/(RC) exactly; 0.5 gives the plain half-magnitude width.
  double half_level = 0.70710678118654752;
  int min_points_per_fwhm = 20;
  /// Peaks below this frequency classify as qubit band, above as resonator.
  double band_boundary_hz = 7.3e9;
};

std::vector<Peak> find_peaks(const Spectrum& spectrum, const std::string& probe,
                             double f_lo, double f_hi, const PeakOptions& options = {});

/// Eq.-style lifetime from a peak width: T1(m) = 1/delta_omega_p.
double t1m_from_width(double delta_omega_p);

struct FidelityInput {
  int n_qubits = 1;
  double tau_op = 1e-11;            // s; absorbs Gamma2 ~ 2*Gamma1 when gamma2 absent
  double gamma1 = 0.0;              // 1/s
  std::optional<double> gamma2;     // 1/s; enables the unabsorbed two-rate form
};

struct FidelityResult {
  double f = 0.0;
  double infidelity = 0.0;
  double prefactor = 0.0;
  bool saturated = false;  // linear formula left [0, 1]; f was clamped
};

/// N 2^N / (2 (2^N + 1)) evaluated as N / (2 (1 + 2^-N)); stable to N ~ 1e5+.
double fidelity_prefactor(double n_qubits);

FidelityResult fidelity(const FidelityInput& input);

enum class Aggregation { mean, max, per_peak };

struct RunInfidelity {
  int sample_id = 0;
  std::optional<double> value;      // absent when no usable peaks (see reason)
  std::vector<double> per_peak;     // filled for Aggregation::per_peak
  std::string reason;
};

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<int> counts;
};

struct EnsembleInfidelity {
  std::vector<RunInfidelity> runs;
  Histogram histogram;
};

/// Resolved resonator-band peaks across all probes -> gamma1 values ->
/// aggregated -> Eq.-style infidelity for one spectrum.
RunInfidelity infidelity_from_spectrum(const Spectrum& spectrum, int n_qubits,
                                       double tau_op, Aggregation aggregation,
                                       const PeakOptions& options = {});

/// Per run: resolved resonator-band peaks across all probes -> gamma1 values
/// -> aggregated -> Eq.-style infidelity. Output ordered by sample_id.
EnsembleInfidelity ensemble_infidelity(const Ensemble& ensemble, int n_qubits,
                                       double tau_op, Aggregation aggregation,
                                       const PeakOptions& options = {});

/// Bloch-Redfield density matrix snapshot at time t_f.
struct RbDensityMatrix {
  double a = 1.0;                   // upper diagonal
  double c = 0.0;                   // lower diagonal
  std::complex<double> b;           // upper off-diagonal
  double t_f = 0.0;                 // s
  std::complex<double> alpha0{1.0, 0.0};
  std::complex<double> beta0{0.0, 0.0};
};

struct RbRates {
  double gamma1 = 0.0;
  double gamma2 = 0.0;       // +infinity sentinel when |b| == 0
  double delta_omega = 0.0;  // rad/s, modulo 2*pi/t_f
  std::vector<std::string> flags;
};

RbRates rb_extract(const RbDensityMatrix& rho);

RbDensityMatrix synthesize_rb_state(std::complex<double> alpha0, std::complex<double> beta0,
                                    double gamma1, double gamma2, double delta_omega,
                                    double t);

}  // namespace qsim
