#pragma once

#include <complex>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "qsim/netlist.hpp"

namespace qsim {

using cplx = std::complex<double>;

class SolveError : public std::runtime_error {
 public:
  SolveError(double omega, const std::string& message)
      : std::runtime_error(message + " (omega = " + format_value(omega) + " rad/s)"),
        omega_(omega) {}
  double omega() const { return omega_; }

 private:
  double omega_;
};

struct StampOptions {
  /// Propagation loss e^-eps regularizing the lossless line at omega*tau = k*pi.
  /// Zero disables regularization; singular frequencies then raise SolveError.
  double line_loss_epsilon = 1e-9;
  double singular_sin_floor = 1e-12;
  /// Accepted residual: ||y v - i|| <= tol * ||i|| after at most one refinement.
  double residual_tolerance = 1e-10;
};

/// Complex nodal admittance system at one angular frequency.
/// y is symmetric (reciprocal R/L/C/line network, Norton-transformed sources).
struct AcSystem {
  Eigen::SparseMatrix<cplx> y;  // unknowns = non-ground, non-eliminated nodes
  Eigen::VectorXcd i_src;
  double omega = 0.0;
};

/// Node voltages indexed by netlist node index; v[0] (ground) is exactly 0.
struct Solution {
  Eigen::VectorXcd v;
  double omega = 0.0;
};

/// Frequency-independent stamping structure for one netlist: the sparse
/// pattern with per-element slot maps, Norton-transformed voltage sources,
/// and constant (resistive) base values. Assembly per frequency is O(nnz).
///
/// Each voltage source is converted to a Norton pair through its dedicated
/// series element: the source's private terminal (a node touching only the
/// source and one R/L/C) is eliminated from the system and reconstructed
/// after the solve from v(private) = v(other terminal) +/- V.
class AcModel {
 public:
  explicit AcModel(const Netlist& netlist, const StampOptions& options = {});

  int unknowns() const { return unknowns_; }
  int node_count() const { return node_count_; }
  /// System column of a netlist node; -1 for ground, -2 for eliminated nodes.
  int system_index(int node) const { return sys_index_[node]; }
  const StampOptions& options() const { return options_; }

  /// Structure-only copy of the admittance matrix (values zero), compressed.
  Eigen::SparseMatrix<cplx> pattern() const;

  /// Writes admittances and Norton currents for `omega` into a matrix that
  /// shares pattern() structure. Throws SolveError at singular line
  /// frequencies when regularization is disabled.
  void assemble(double omega, Eigen::SparseMatrix<cplx>& y, Eigen::VectorXcd& rhs) const;

  /// Full netlist-node voltage vector from the system solution, including
  /// ground and backfilled source-internal nodes.
  Eigen::VectorXcd expand(const Eigen::VectorXcd& x) const;

 private:
  struct CapStamp { int slots[4]; double c; };
  struct IndStamp { int slots[4]; double l; };
  struct LineStamp {
    int self_slots[8];    // y11-pattern entries for both ports
    int cross_slots[8];   // y12-pattern entries
    double z0, tau;
  };
  struct NortonStamp {
    int slots[4];
    int rhs_plus = -1;   // system row receiving +Y*V
    int rhs_minus = -1;  // system row receiving -Y*V
    ElementKind series_kind;
    double series_value;
    cplx v_phasor;       // sign-folded source phasor
  };
  struct CurrentStamp { int row_minus, row_plus; cplx j; };
  struct Backfill { int node, from_node; cplx v; };

  int slot_of(int row, int col) const;
  void map_two_terminal(int a, int b, int out[4]) const;

  StampOptions options_;
  int node_count_ = 0;
  int unknowns_ = 0;
  std::vector<int> sys_index_;
  Eigen::SparseMatrix<cplx> pattern_;
  std::vector<cplx> base_values_;  // resistive contributions, constant in omega
  std::vector<CapStamp> caps_;
  std::vector<IndStamp> inductors_;
  std::vector<LineStamp> lines_;
  std::vector<NortonStamp> nortons_;
  std::vector<CurrentStamp> currents_;
  std::vector<Backfill> backfills_;
};

/// One-shot stamp of the nodal system. Requires validate(netlist) empty and
/// omega > 0.
AcSystem stamp(const Netlist& netlist, double omega, const StampOptions& options = {});

/// Direct sparse solve of one system (fresh factorization). The returned
/// vector is indexed by system unknown + 1, with [0] = ground; source-internal
/// nodes are not reconstructed here (use AcSolver for netlist-indexed output).
Solution solve(const AcSystem& system, const StampOptions& options = {});

/// Reusable frequency-domain solver: symbolic analysis (ordering, pattern)
/// runs once per netlist and is reused across all frequencies. One instance
/// per worker thread; the shared AcModel is immutable.
class AcSolver {
 public:
  explicit AcSolver(const Netlist& netlist, const StampOptions& options = {});
  explicit AcSolver(std::shared_ptr<const AcModel> model);

  Solution solve_at(double omega);
  const AcModel& model() const { return *model_; }

 private:
  std::shared_ptr<const AcModel> model_;
  Eigen::SparseMatrix<cplx> y_;
  Eigen::VectorXcd rhs_;
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
};

}  // namespace qsim
