#include "nlch/oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nlch/kernels.hpp"

namespace nlch {

namespace {

// Basis values psi_m(x_q) for midpoint nodes with `nodes` points per axis.
std::vector<double> basis_matrix(const SpectralSpace& sp, std::size_t nodes_per_axis_x,
                                 std::size_t nodes_per_axis_y, std::size_t nt) {
  const int dims = sp.dims();
  const std::size_t modes = dims == 1 ? nt : nt * nt;
  const std::size_t nodes = dims == 1 ? nodes_per_axis_x : nodes_per_axis_x * nodes_per_axis_y;
  std::vector<double> B(nodes * modes);
  const double hx = sp.lengths()[0] / static_cast<double>(nodes_per_axis_x);
  if (dims == 1) {
    for (std::size_t q = 0; q < nodes; ++q) {
      const double x = (static_cast<double>(q) + 0.5) * hx;
      for (std::size_t m = 0; m < nt; ++m) B[q * modes + m] = sp.basis_1d(0, m, x);
    }
    return B;
  }
  const double hy = sp.lengths()[1] / static_cast<double>(nodes_per_axis_y);
  for (std::size_t qx = 0; qx < nodes_per_axis_x; ++qx) {
    for (std::size_t qy = 0; qy < nodes_per_axis_y; ++qy) {
      const double x = (static_cast<double>(qx) + 0.5) * hx;
      const double y = (static_cast<double>(qy) + 0.5) * hy;
      const std::size_t q = qx * nodes_per_axis_y + qy;
      for (std::size_t mx = 0; mx < nt; ++mx) {
        for (std::size_t my = 0; my < nt; ++my) {
          B[q * modes + mx * nt + my] = sp.basis_1d(0, mx, x) * sp.basis_1d(1, my, y);
        }
      }
    }
  }
  return B;
}

}  // namespace

GalerkinOracle::GalerkinOracle(const Kernel& k, const Potential& pot, const Params& p, OracleOptions opt)
    : k_(&k), pot_(&pot), p_(p), nt_(opt.modes) {
  const auto& sp = k.space();
  const int dims = sp.dims();
  if (nt_ < 1 || nt_ > kMaxModes) throw std::invalid_argument("oracle supports 1 to 16 modes per axis");
  for (int a = 0; a < dims; ++a) {
    if (nt_ > sp.n(a)) throw std::invalid_argument("oracle modes exceed the grid resolution");
  }
  if (!(opt.dealias >= 1.0)) throw std::invalid_argument("dealias factor must be at least 1");

  const std::size_t m = dims == 1 ? nt_ : nt_ * nt_;
  lam_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t kx = dims == 1 ? i : i / nt_;
    const double wx = static_cast<double>(kx) * std::numbers::pi / sp.lengths()[0];
    lam_[i] = wx * wx;
    if (dims == 2) {
      const double wy = static_cast<double>(i % nt_) * std::numbers::pi / sp.lengths()[1];
      lam_[i] += wy * wy;
    }
  }

  // Nonlocal operator by direct quadrature on the kernel's grid.
  const std::size_t N = sp.size();
  grid_basis_ = basis_matrix(sp, sp.n(0), dims == 2 ? sp.n(1) : 1, nt_);
  const auto& conv = k.convolver();
  const auto a_direct = kernels::serial::convolve_direct(conv.offsets(), conv.weight(), conv.samples(),
                                                         std::vector<double>(N, 1.0));
  const double w = sp.cell_volume();
  K_.assign(m * m, 0.0);
  std::vector<double> col(N);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t q = 0; q < N; ++q) col[q] = grid_basis_[q * m + j];
    const auto jc = kernels::serial::convolve_direct(conv.offsets(), conv.weight(), conv.samples(), col);
    for (std::size_t q = 0; q < N; ++q) {
      const double qv = a_direct[q] * col[q] - jc[q];
      for (std::size_t i = 0; i < m; ++i) K_[i * m + j] += w * grid_basis_[q * m + i] * qv;
    }
  }
  // Symmetrize away quadrature round-off; the operator is self-adjoint.
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double s = 0.5 * (K_[i * m + j] + K_[j * m + i]);
      K_[i * m + j] = K_[j * m + i] = s;
    }
  }

  const auto nq = static_cast<std::size_t>(std::ceil(opt.dealias * static_cast<double>(nt_) - 1e-12));
  quad_basis_ = basis_matrix(sp, nq, dims == 2 ? nq : 1, nt_);
  quad_nodes_ = dims == 1 ? nq : nq * nq;
  quad_weight_ = sp.volume() / static_cast<double>(quad_nodes_);
}

std::vector<double> GalerkinOracle::project(const Field& f) const {
  const auto& sp = k_->space();
  sp.require_compatible(f);
  const std::size_t m = size();
  std::vector<double> c(m, 0.0);
  const double w = sp.cell_volume();
  for (std::size_t q = 0; q < f.size(); ++q) {
    for (std::size_t i = 0; i < m; ++i) c[i] += w * grid_basis_[q * m + i] * f[q];
  }
  return c;
}

Field GalerkinOracle::synthesize(std::span<const double> coeffs) const {
  const auto& sp = k_->space();
  const std::size_t m = size();
  std::vector<double> v(sp.size(), 0.0);
  for (std::size_t q = 0; q < v.size(); ++q) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += grid_basis_[q * m + i] * coeffs[i];
    v[q] = s;
  }
  return Field(std::move(v));
}

GalerkinOracle::Derivative GalerkinOracle::rhs(std::span<const double> a, std::span<const double> b) const {
  const std::size_t m = size();
  Derivative d;
  d.da.assign(m, 0.0);
  d.db.assign(m, 0.0);
  d.mu.assign(m, 0.0);

  std::vector<double> g(m, 0.0);
  for (std::size_t q = 0; q < quad_nodes_; ++q) {
    double phi = 0.0;
    for (std::size_t i = 0; i < m; ++i) phi += quad_basis_[q * m + i] * a[i];
    const double fp = quad_weight_ * pot_->dF(phi);
    for (std::size_t i = 0; i < m; ++i) g[i] += quad_basis_[q * m + i] * fp;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double ka = 0.0;
    for (std::size_t j = 0; j < m; ++j) ka += K_[i * m + j] * a[j];
    g[i] += ka - p_.delta * b[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double l = lam_[i];
    d.da[i] = -l * g[i] / (1.0 + p_.alpha * l);
    d.mu[i] = g[i] + p_.alpha * d.da[i];
    d.db[i] = (-l * b[i] - p_.delta * d.da[i]) / p_.epsilon;
    d.dissipation += l * d.mu[i] * d.mu[i] + p_.alpha * d.da[i] * d.da[i] + l * b[i] * b[i];
  }
  return d;
}

double GalerkinOracle::energy(std::span<const double> a, std::span<const double> b) const {
  const std::size_t m = size();
  double e = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double ka = 0.0;
    for (std::size_t j = 0; j < m; ++j) ka += K_[i * m + j] * a[j];
    e += 0.5 * a[i] * ka + 0.5 * p_.epsilon * b[i] * b[i];
  }
  for (std::size_t q = 0; q < quad_nodes_; ++q) {
    double phi = 0.0;
    for (std::size_t i = 0; i < m; ++i) phi += quad_basis_[q * m + i] * a[i];
    e += quad_weight_ * pot_->F(phi);
  }
  return e;
}

GalerkinOracle::Snapshot GalerkinOracle::initial(const State& s0) const {
  Snapshot s;
  s.t = s0.t;
  s.a = project(s0.phi);
  s.b = project(s0.theta);
  s.energy = energy(s.a, s.b);
  return s;
}

void GalerkinOracle::step(Snapshot& s, double dt) const {
  const std::size_t m = size();
  // The dissipated energy rides along as an extra RK4 component.
  const auto stage = [&](const std::vector<double>& a, const std::vector<double>& b) { return rhs(a, b); };
  const auto axpy = [m](const std::vector<double>& x, const std::vector<double>& dx, double h) {
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = x[i] + h * dx[i];
    return y;
  };
  const auto k1 = stage(s.a, s.b);
  const auto k2 = stage(axpy(s.a, k1.da, dt / 2), axpy(s.b, k1.db, dt / 2));
  const auto k3 = stage(axpy(s.a, k2.da, dt / 2), axpy(s.b, k2.db, dt / 2));
  const auto k4 = stage(axpy(s.a, k3.da, dt), axpy(s.b, k3.db, dt));
  for (std::size_t i = 0; i < m; ++i) {
    s.a[i] += dt / 6.0 * (k1.da[i] + 2.0 * k2.da[i] + 2.0 * k3.da[i] + k4.da[i]);
    s.b[i] += dt / 6.0 * (k1.db[i] + 2.0 * k2.db[i] + 2.0 * k3.db[i] + k4.db[i]);
  }
  s.dissipated += dt / 6.0 * (k1.dissipation + 2.0 * k2.dissipation + 2.0 * k3.dissipation + k4.dissipation);
  s.t += dt;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(s.a[i]) || !std::isfinite(s.b[i])) {
      throw BlowUpError(s.t - dt, "oracle integration overflowed; use a smaller dt");
    }
  }
  s.energy = energy(s.a, s.b);
}

GalerkinOracle::Snapshot GalerkinOracle::run(const State& s0, double dt, double t_end,
                                             const std::function<void(const Snapshot&)>& observer) const {
  Snapshot s = initial(s0);
  const double e0 = s.energy;
  const auto n = static_cast<std::size_t>(std::llround((t_end - s0.t) / dt));
  for (std::size_t i = 0; i < n; ++i) {
    step(s, dt);
    s.t = s0.t + static_cast<double>(i + 1) * dt;
    s.residual = s.energy + s.dissipated - e0;
    if (observer) observer(s);
  }
  return s;
}

State GalerkinOracle::to_state(const Snapshot& s) const {
  return State::make(k_->space(), synthesize(s.a), synthesize(s.b), s.t);
}

}  // namespace nlch
