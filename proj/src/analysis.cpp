#include "qsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double band_median(std::vector<double> mags) {
  size_t mid = mags.size() / 2;
  std::nth_element(mags.begin(), mags.begin() + mid, mags.end());
  double hi = mags[mid];
  if (mags.size() % 2 == 1) return hi;
  double lo = *std::max_element(mags.begin(), mags.begin() + mid);
  return 0.5 * (lo + hi);
}

struct Crossing {
  bool found = false;
  double f = 0.0;
};

Crossing left_crossing(const std::vector<double>& f, const std::vector<double>& m,
                       size_t i, double level) {
  for (size_t k = i; k > 0; --k) {
    if (m[k - 1] < level && level <= m[k]) {
      double t = (level - m[k - 1]) / (m[k] - m[k - 1]);
      return {true, f[k - 1] + t * (f[k] - f[k - 1])};
    }
  }
  return {};
}

Crossing right_crossing(const std::vector<double>& f, const std::vector<double>& m,
                        size_t i, double level) {
  for (size_t k = i; k + 1 < f.size(); ++k) {
    if (m[k + 1] < level && level <= m[k]) {
      double t = (m[k] - level) / (m[k] - m[k + 1]);
      return {true, f[k] + t * (f[k + 1] - f[k])};
    }
  }
  return {};
}

}  // namespace

std::vector<Peak> find_peaks(const Spectrum& spectrum, const std::string& probe,
                             double f_lo, double f_hi, const PeakOptions& options) {
  int p = spectrum.probe_index(probe);
  if (p < 0) throw std::invalid_argument("unknown probe '" + probe + "'");
  Spectrum band = band_select(spectrum, f_lo, f_hi);
  const auto& f = band.freqs;
  std::vector<double> m(f.size());
  for (size_t i = 0; i < f.size(); ++i) m[i] = std::abs(band.response[p][i]);

  double threshold = options.prominence_factor * band_median(m);

  struct Candidate {
    Peak peak;
    double lo, hi;  // half-height interval (band edges when truncated)
  };
  std::vector<Candidate> cands;
  for (size_t i = 1; i + 1 < m.size(); ++i) {
    if (!(m[i] > m[i - 1] && m[i] > m[i + 1])) continue;
    if (!(m[i] > threshold)) continue;
    double level = m[i] * options.half_level;
    Crossing left = left_crossing(f, m, i, level);
    Crossing right = right_crossing(f, m, i, level);
    Candidate c;
    c.peak.probe = probe;
    c.peak.f_peak = f[i];
    c.peak.height = m[i];
    c.peak.truncated = !left.found || !right.found;
    if (left.found && right.found) {
      c.lo = left.f;
      c.hi = right.f;
    } else if (left.found) {
      c.lo = left.f;
      c.hi = f[i] + (f[i] - left.f);  // mirror the available side
    } else if (right.found) {
      c.hi = right.f;
      c.lo = f[i] - (right.f - f[i]);
    } else {
      c.lo = f.front();
      c.hi = f.back();
    }
    cands.push_back(c);
  }

  // Overlapping half-height regions merge into the taller peak.
  std::vector<Candidate> merged;
  for (const auto& c : cands) {
    if (!merged.empty() && c.lo < merged.back().hi) {
      Candidate& prev = merged.back();
      if (c.peak.height > prev.peak.height) {
        Candidate keep = c;
        keep.lo = std::min(prev.lo, c.lo);
        keep.peak.merged = true;
        prev = keep;
      } else {
        prev.hi = std::max(prev.hi, c.hi);
        prev.peak.merged = true;
      }
      continue;
    }
    merged.push_back(c);
  }

  std::vector<Peak> out;
  out.reserve(merged.size());
  for (auto& c : merged) {
    Peak& pk = c.peak;
    pk.fwhm_hz = c.hi - c.lo;
    pk.delta_omega_p = kTwoPi * pk.fwhm_hz;
    pk.q_p = pk.f_peak / pk.fwhm_hz;
    pk.t1_m = t1m_from_width(pk.delta_omega_p);
    pk.gamma1 = 1.0 / pk.t1_m;
    pk.band = pk.f_peak < options.band_boundary_hz ? Band::qubit : Band::resonator;
    auto a = std::upper_bound(f.begin(), f.end(), c.lo);
    auto b = std::lower_bound(f.begin(), f.end(), c.hi);
    size_t inside = a < b ? static_cast<size_t>(b - a) : 0;
    pk.resolved = !pk.truncated &&
                  inside >= static_cast<size_t>(options.min_points_per_fwhm);
    out.push_back(pk);
  }
  return out;
}

double t1m_from_width(double delta_omega_p) {
  if (!(delta_omega_p > 0)) throw std::invalid_argument("width must be positive");
  return 1.0 / delta_omega_p;
}

double fidelity_prefactor(double n_qubits) {
  return n_qubits / (2.0 * (1.0 + std::exp2(-n_qubits)));
}

FidelityResult fidelity(const FidelityInput& input) {
  if (input.n_qubits < 1) throw std::invalid_argument("n_qubits must be positive");
  if (!(input.tau_op > 0)) throw std::invalid_argument("tau_op must be positive");
  FidelityResult out;
  out.prefactor = fidelity_prefactor(static_cast<double>(input.n_qubits));
  double rate = input.gamma2 ? input.gamma1 + *input.gamma2 : input.gamma1;
  out.infidelity = out.prefactor * input.tau_op * rate;
  double f = 1.0 - out.infidelity;
  out.saturated = f < 0.0 || f > 1.0;
  out.f = std::clamp(f, 0.0, 1.0);
  return out;
}

RunInfidelity infidelity_from_spectrum(const Spectrum& spectrum, int n_qubits,
                                       double tau_op, Aggregation aggregation,
                                       const PeakOptions& options) {
  RunInfidelity r;
  std::vector<double> gammas;
  for (const auto& probe : spectrum.probes) {
    auto peaks = find_peaks(spectrum, probe, options.band_boundary_hz,
                            spectrum.freqs.back(), options);
    for (const Peak& pk : peaks) {
      if (pk.band == Band::resonator && pk.resolved) gammas.push_back(pk.gamma1);
    }
  }
  if (gammas.empty()) {
    r.reason = "no resolved resonator-band peaks";
    return r;
  }
  FidelityInput in;
  in.n_qubits = n_qubits;
  in.tau_op = tau_op;
  switch (aggregation) {
    case Aggregation::mean: {
      double s = 0;
      for (double g : gammas) s += g;
      in.gamma1 = s / gammas.size();
      r.value = fidelity(in).infidelity;
      break;
    }
    case Aggregation::max:
      in.gamma1 = *std::max_element(gammas.begin(), gammas.end());
      r.value = fidelity(in).infidelity;
      break;
    case Aggregation::per_peak: {
      double s = 0;
      for (double g : gammas) {
        in.gamma1 = g;
        r.per_peak.push_back(fidelity(in).infidelity);
        s += r.per_peak.back();
      }
      r.value = s / r.per_peak.size();
      break;
    }
  }
  return r;
}

EnsembleInfidelity ensemble_infidelity(const Ensemble& ensemble, int n_qubits,
                                       double tau_op, Aggregation aggregation,
                                       const PeakOptions& options) {
  EnsembleInfidelity out;
  out.runs.reserve(ensemble.runs.size());
  for (const RunRecord& run : ensemble.runs) {
    if (!run.error.empty()) {
      RunInfidelity r;
      r.sample_id = run.sample_id;
      r.reason = "run failed: " + run.error;
      out.runs.push_back(std::move(r));
      continue;
    }
    RunInfidelity r =
        infidelity_from_spectrum(run.spectrum, n_qubits, tau_op, aggregation, options);
    r.sample_id = run.sample_id;
    out.runs.push_back(std::move(r));
  }

  std::vector<double> values;
  for (const auto& r : out.runs) {
    if (r.value) values.push_back(*r.value);
  }
  if (!values.empty()) {
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (lo == hi) hi = lo + std::max(std::abs(lo) * 1e-9, 1e-300);
    const int bins = 20;
    out.histogram.bin_edges.resize(bins + 1);
    out.histogram.counts.assign(bins, 0);
    for (int i = 0; i <= bins; ++i) {
      out.histogram.bin_edges[i] = lo + (hi - lo) * i / bins;
    }
    for (double v : values) {
      int b = static_cast<int>((v - lo) / (hi - lo) * bins);
      out.histogram.counts[std::clamp(b, 0, bins - 1)]++;
    }
  }
  return out;
}

RbRates rb_extract(const RbDensityMatrix& rho) {
  if (!(rho.t_f > 0)) throw std::invalid_argument("t_f must be positive");
  double b2 = std::norm(rho.beta0);
  double ab = std::abs(rho.alpha0) * std::abs(rho.beta0);
  if (!(rho.c > 0) || !(b2 > 0) || !(ab > 0)) {
    throw std::invalid_argument("rb_extract needs c > 0 and nonzero alpha0, beta0");
  }
  RbRates out;
  out.gamma1 = -std::log(rho.c / b2) / rho.t_f;
  if (rho.c > b2) out.flags.push_back("unphysical: c exceeds |beta0|^2 (negative gamma1)");
  double babs = std::abs(rho.b);
  if (babs == 0.0) {
    out.gamma2 = std::numeric_limits<double>::infinity();
    out.flags.push_back("|b| = 0: gamma2 unbounded");
    out.delta_omega = 0.0;
    return out;
  }
  out.gamma2 = -std::log(babs / ab) / rho.t_f;
  if (babs > ab) out.flags.push_back("unphysical: |b| exceeds |alpha0 beta0| (negative gamma2)");
  // b = alpha0 conj(beta0) e^{+i dw t} e^{-Gamma2 t}; divide out the initial phase
  std::complex<double> rot = rho.b / (rho.alpha0 * std::conj(rho.beta0));
  out.delta_omega = std::atan2(rot.imag(), rot.real()) / rho.t_f;
  return out;
}

RbDensityMatrix synthesize_rb_state(std::complex<double> alpha0, std::complex<double> beta0,
                                    double gamma1, double gamma2, double delta_omega,
                                    double t) {
  double norm = std::norm(alpha0) + std::norm(beta0);
  if (std::abs(norm - 1.0) > 1e-9) {
    throw std::invalid_argument("initial state must be normalized");
  }
  RbDensityMatrix rho;
  rho.alpha0 = alpha0;
  rho.beta0 = beta0;
  rho.t_f = t;
  double e1 = std::exp(-gamma1 * t);
  rho.a = 1.0 + (std::norm(alpha0) - 1.0) * e1;
  rho.c = std::norm(beta0) * e1;
  rho.b = alpha0 * std::conj(beta0) *
          std::polar(std::exp(-gamma2 * t), delta_omega * t);
  return rho;
}

}  // namespace qsim
