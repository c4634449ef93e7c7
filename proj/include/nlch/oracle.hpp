#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nlch/dynamics.hpp"
#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"

namespace nlch {

struct OracleOptions {
  std::size_t modes = 8;  // per axis, at most 16
  /// Quadrature grid for the nonlinear projection, relative to `modes`.
  /// 1 reproduces collocation on a grid with `modes` nodes.
  double dealias = 1.5;
};

/// Galerkin truncation of the system onto the lowest cosine modes, integrated
/// with classical RK4. All operators are assembled densely from direct
/// quadrature, independently of the transform-based solver.
class GalerkinOracle {
 public:
  static constexpr std::size_t kMaxModes = 16;

  GalerkinOracle(const Kernel& k, const Potential& pot, const Params& p, OracleOptions opt = {});

  /// Number of retained tensor modes.
  std::size_t size() const { return lam_.size(); }
  const std::vector<double>& eigenvalues() const { return lam_; }
  /// Matrix of the nonlocal operator a f - J*f on the retained modes (row-major).
  const std::vector<double>& nonlocal_matrix() const { return K_; }

  std::vector<double> project(const Field& f) const;
  /// Values on the kernel's grid of the truncated expansion.
  Field synthesize(std::span<const double> coeffs) const;

  struct Derivative {
    std::vector<double> da, db;
    std::vector<double> mu;
    double dissipation = 0.0;  // |grad mu|^2 + alpha |phi_t|^2 + |grad theta|^2
  };
  Derivative rhs(std::span<const double> a, std::span<const double> b) const;
  double energy(std::span<const double> a, std::span<const double> b) const;

  struct Snapshot {
    double t = 0.0;
    std::vector<double> a, b;
    double energy = 0.0;
    double dissipated = 0.0;  // integral of the dissipation rate since the start
    double residual = 0.0;    // energy + dissipated - initial energy
  };

  Snapshot initial(const State& s0) const;
  void step(Snapshot& s, double dt) const;
  /// Integrates to t_end with fixed dt; the observer sees every step.
  Snapshot run(const State& s0, double dt, double t_end,
               const std::function<void(const Snapshot&)>& observer = {}) const;
  State to_state(const Snapshot& s) const;

 private:
  const Kernel* k_;
  const Potential* pot_;
  Params p_;
  std::size_t nt_ = 0;
  std::vector<double> lam_;
  std::vector<double> K_;
  std::vector<double> grid_basis_;    // grid nodes x modes
  std::vector<double> quad_basis_;    // quadrature nodes x modes
  std::size_t quad_nodes_ = 0;
  double quad_weight_ = 0.0;
};

}  // namespace nlch
