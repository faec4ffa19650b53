#pragma once

// Test-only reference implementations, deliberately independent of the
// production stamping/solve path: closed-form ladder reduction of the single
// readout unit, a naive dense nodal stamper for small circuits, and synthetic
// line shapes.

#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "qsim/netlist.hpp"
#include "qsim/topology.hpp"

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct UnitVoltages {
  cplx feed;
  cplx tank;
  cplx qubit;
};

/// Series/parallel impedance-ladder reduction of the single unit driven by
/// 1 V behind r0 with an r0 termination on the feed node.
inline UnitVoltages ladder_unit(const qsim::QubitUnitParams& p, double r0, double f) {
  qsim::DerivedElements dv = qsim::derive_elements(p);
  cplx jw(0.0, kTwoPi * f);
  cplx y_q = 1.0 / dv.r_q + jw * p.c_q + 1.0 / (jw * dv.l_q);
  cplx z_q = 1.0 / y_q;
  cplx y_t = 1.0 / dv.r_r + jw * p.c_r + 1.0 / (jw * dv.l_r);
  cplx z_qc;
  if (p.c_g > 0) {
    z_qc = z_q + 1.0 / (jw * p.c_g);
    y_t += 1.0 / z_qc;
  }
  cplx z_t = 1.0 / y_t;
  UnitVoltages v;
  if (p.c_c > 0) {
    cplx z_b = z_t + 1.0 / (jw * p.c_c);
    cplx z_par = 1.0 / (1.0 / r0 + 1.0 / z_b);
    v.feed = z_par / (z_par + r0);
    v.tank = v.feed * z_t / z_b;
  } else {
    v.feed = 0.5;  // plain divider, branch absent
    v.tank = 0.0;
  }
  v.qubit = (p.c_g > 0) ? v.tank * z_q / z_qc : cplx(0.0);
  return v;
}

/// Dense nodal matrix of a netlist built element by element with textbook
/// formulas; voltage sources are not supported (tests use current drives).
/// sign=-1 evaluates the formal conjugate stamp (j -> -j).
inline Eigen::MatrixXcd dense_admittance(const qsim::Netlist& n, double omega,
                                         double sign = 1.0, double line_eps = 1e-9) {
  int nn = n.node_count() - 1;
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(nn, nn);
  auto stamp2 = [&](int a, int b, cplx adm) {
    if (a > 0) y(a - 1, a - 1) += adm;
    if (b > 0) y(b - 1, b - 1) += adm;
    if (a > 0 && b > 0) {
      y(a - 1, b - 1) -= adm;
      y(b - 1, a - 1) -= adm;
    }
  };
  for (const auto& e : n.elements()) {
    switch (e.kind) {
      case qsim::ElementKind::resistor:
        stamp2(e.nodes[0], e.nodes[1], cplx(1.0 / e.value, 0.0));
        break;
      case qsim::ElementKind::capacitor:
        stamp2(e.nodes[0], e.nodes[1], cplx(0.0, sign * omega * e.value));
        break;
      case qsim::ElementKind::inductor:
        stamp2(e.nodes[0], e.nodes[1], cplx(0.0, -sign / (omega * e.value)));
        break;
      case qsim::ElementKind::lossless_line: {
        cplx gamma(line_eps, sign * omega * e.delay);
        cplx sh = std::sinh(gamma);
        cplx y11 = std::cosh(gamma) / (e.z0 * sh);
        cplx y12 = -1.0 / (e.z0 * sh);
        int p[4] = {e.nodes[0], e.nodes[1], e.nodes[2], e.nodes[3]};
        auto port = [&](int a, int b, int c, int d, cplx adm) {
          // current into a..b from the (c,d) port voltage
          auto at = [&](int r, int col, cplx v) {
            if (r > 0 && col > 0) y(r - 1, col - 1) += v;
          };
          at(a, c, adm);
          at(a, d, -adm);
          at(b, c, -adm);
          at(b, d, adm);
        };
        port(p[0], p[1], p[0], p[1], y11);
        port(p[2], p[3], p[2], p[3], y11);
        port(p[0], p[1], p[2], p[3], y12);
        port(p[2], p[3], p[0], p[1], y12);
        break;
      }
      case qsim::ElementKind::ac_current_source:
        break;
      case qsim::ElementKind::ac_voltage_source:
        throw std::logic_error("dense oracle does not stamp voltage sources");
    }
  }
  return y;
}

/// |v| = h / sqrt(1 + (2 (f - f0) / w)^2): half-power full width exactly w.
inline double lorentzian_mag(double f, double f0, double w, double h) {
  double x = 2.0 * (f - f0) / w;
  return h / std::sqrt(1.0 + x * x);
}

}  // namespace oracle
