#include "nlch/kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "fftw_lock.hpp"
#include "nlch/kernels.hpp"

namespace nlch {

namespace {

constexpr int kRefine = 4;
constexpr double kResolutionCells = 8.0;

// Unit bump g(u) = exp(-1/(1-u^2)) for |u| < 1.
double bump(double u) {
  const double s = 1.0 - u * u;
  return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

double simpson(double lo, double hi, int intervals, auto&& f) {
  const double h = (hi - lo) / intervals;
  double s = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Integrals of the unit bump over R^d and of its gradient magnitude.
double bump_mass(int dims) {
  if (dims == 1) return simpson(-1.0, 1.0, 20000, bump);
  return 2.0 * std::numbers::pi * simpson(0.0, 1.0, 20000, [](double u) { return bump(u) * u; });
}

double bump_gradient_mass(int dims) {
  if (dims == 1) return 2.0 * bump(0.0);
  return 2.0 * std::numbers::pi * simpson(0.0, 1.0, 20000, [](double u) {
           const double s = 1.0 - u * u;
           return s > 0.0 ? bump(u) * 2.0 * u * u / (s * s) : 0.0;
         });
}

double resolved_amplitude(const KernelSpec& spec, int dims) {
  if (spec.family == KernelFamily::table) return 1.0;
  if (!(spec.width > 0.0) || !std::isfinite(spec.width)) {
    throw KernelError(KernelError::Kind::bad_parameters, "kernel width must be positive");
  }
  if (spec.mass > 0.0) {
    if (spec.family == KernelFamily::gaussian) {
      return spec.mass / std::pow(spec.width * std::sqrt(2.0 * std::numbers::pi), dims);
    }
    return spec.mass / (std::pow(spec.width, dims) * bump_mass(dims));
  }
  if (!(spec.amplitude > 0.0)) {
    throw KernelError(KernelError::Kind::bad_parameters, "kernel amplitude must be positive");
  }
  return spec.amplitude;
}

// Analytic profile as a function of |x|^2, which makes J(-x) = J(x) bit-exact.
double radial_value(const KernelSpec& spec, double amp, double r2) {
  if (spec.family == KernelFamily::gaussian) {
    return amp * std::exp(-r2 / (2.0 * spec.width * spec.width));
  }
  const double s = 1.0 - r2 / (spec.width * spec.width);
  return s > 0.0 ? amp * std::exp(-1.0 / s) : 0.0;
}

double radial_gradient(const KernelSpec& spec, double amp, double r2) {
  const double rho = std::sqrt(r2);
  const double w2 = spec.width * spec.width;
  if (spec.family == KernelFamily::gaussian) return rho / w2 * radial_value(spec, amp, r2);
  const double s = 1.0 - r2 / w2;
  if (s <= 0.0) return 0.0;
  return radial_value(spec, amp, r2) * 2.0 * rho / (w2 * s * s);
}

std::vector<double> sample_analytic(const KernelSpec& spec, double amp,
                                    const std::vector<std::size_t>& n, const std::vector<double>& h) {
  OffsetGrid g{n};
  std::vector<double> out(g.size());
  if (n.size() == 1) {
    const long nx = static_cast<long>(n[0]);
    for (long m = -(nx - 1); m <= nx - 1; ++m) {
      const double x = static_cast<double>(std::labs(m)) * h[0];
      out[g.index(m)] = radial_value(spec, amp, x * x);
    }
  } else {
    const long nx = static_cast<long>(n[0]);
    const long ny = static_cast<long>(n[1]);
    for (long mx = -(nx - 1); mx <= nx - 1; ++mx) {
      for (long my = -(ny - 1); my <= ny - 1; ++my) {
        const double x = static_cast<double>(std::labs(mx)) * h[0];
        const double y = static_cast<double>(std::labs(my)) * h[1];
        out[g.index(mx, my)] = radial_value(spec, amp, x * x + y * y);
      }
    }
  }
  return out;
}

std::vector<double> sample_table(const KernelSpec& spec, const SpectralSpace& sp) {
  const int dims = sp.dims();
  OffsetGrid g{sp.n_modes()};
  std::vector<double> out(g.size(), 0.0);
  for (const auto& e : spec.table) {
    if (static_cast<int>(e.offset.size()) != dims) {
      throw KernelError(KernelError::Kind::bad_table, "kernel table row has the wrong number of offsets");
    }
    long m[2] = {0, 0};
    bool inside = true;
    for (int a = 0; a < dims; ++a) {
      const double q = e.offset[a] / sp.spacing(a);
      const double r = std::round(q);
      if (std::abs(q - r) > 1e-6) {
        throw KernelError(KernelError::Kind::bad_table,
                          "kernel table offset is not a multiple of the grid spacing");
      }
      m[a] = static_cast<long>(r);
      if (std::labs(m[a]) > static_cast<long>(sp.n(a)) - 1) inside = false;
    }
    if (!inside) continue;  // never reached by any pair of nodes
    out[dims == 1 ? g.index(m[0]) : g.index(m[0], m[1])] = e.value;
  }
  return out;
}

std::vector<double> spacings(const SpectralSpace& sp, double refine = 1.0) {
  std::vector<double> h;
  for (int a = 0; a < sp.dims(); ++a) h.push_back(sp.spacing(a) / refine);
  return h;
}

// Sum of |grad J| over the difference grid, with the gradient obtained by
// spectral differentiation of the zero-padded samples.
double table_gradient_l1(const std::vector<double>& samples, const SpectralSpace& sp) {
  const int dims = sp.dims();
  OffsetGrid g{sp.n_modes()};
  std::vector<int> p;
  for (int a = 0; a < dims; ++a) p.push_back(static_cast<int>(2 * g.extent(a)));
  const std::size_t total = dims == 1 ? p[0] : static_cast<std::size_t>(p[0]) * p[1];

  std::vector<std::complex<double>> buf(total), spec(total), deriv(total);
  auto* bp = reinterpret_cast<fftw_complex*>(buf.data());
  auto* sp_ = reinterpret_cast<fftw_complex*>(spec.data());
  auto* dp = reinterpret_cast<fftw_complex*>(deriv.data());
  fftw_plan fwd, bwd;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (dims == 1) {
      fwd = fftw_plan_dft_1d(p[0], bp, sp_, FFTW_FORWARD, FFTW_ESTIMATE);
      bwd = fftw_plan_dft_1d(p[0], sp_, dp, FFTW_BACKWARD, FFTW_ESTIMATE);
    } else {
      fwd = fftw_plan_dft_2d(p[0], p[1], bp, sp_, FFTW_FORWARD, FFTW_ESTIMATE);
      bwd = fftw_plan_dft_2d(p[0], p[1], sp_, dp, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
  }

  const std::size_t ey = dims == 1 ? 1 : g.extent(1);
  const std::size_t py = dims == 1 ? 1 : static_cast<std::size_t>(p[1]);
  std::fill(buf.begin(), buf.end(), 0.0);
  for (std::size_t i = 0; i < g.extent(0); ++i) {
    for (std::size_t j = 0; j < ey; ++j) buf[i * py + j] = samples[i * ey + j];
  }
  fftw_execute(fwd);
  std::vector<double> grad2(total, 0.0);
  const std::vector<std::complex<double>> base = spec;
  for (int axis = 0; axis < dims; ++axis) {
    const double h = sp.spacing(axis);
    const int pa = p[axis];
    for (std::size_t idx = 0; idx < total; ++idx) {
      const int j = static_cast<int>(axis == 0 ? idx / py : idx % py);
      const int freq = j < pa / 2 ? j : (j == pa / 2 ? 0 : j - pa);
      const double k = 2.0 * std::numbers::pi * freq / (pa * h);
      spec[idx] = base[idx] * std::complex<double>(0.0, k);
    }
    fftw_execute(bwd);
    for (std::size_t idx = 0; idx < total; ++idx) {
      const double d = deriv[idx].real() / static_cast<double>(total);
      grad2[idx] += d * d;
    }
  }
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < g.extent(0); ++i) {
    for (std::size_t j = 0; j < ey; ++j) s += std::sqrt(grad2[i * py + j]);
  }
  double cell = 1.0;
  for (int a = 0; a < dims; ++a) cell *= sp.spacing(a);
  return s * cell;
}

struct Extremes {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t lo_at = 0;
};

Extremes extremes(const std::vector<double>& v) {
  Extremes e;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < e.lo) {
      e.lo = v[i];
      e.lo_at = i;
    }
    e.hi = std::max(e.hi, v[i]);
  }
  return e;
}

std::vector<double> node_location(const std::vector<std::size_t>& n, const std::vector<double>& h,
                                  std::size_t flat) {
  if (n.size() == 1) return {(static_cast<double>(flat) + 0.5) * h[0]};
  return {(static_cast<double>(flat / n[1]) + 0.5) * h[0],
          (static_cast<double>(flat % n[1]) + 0.5) * h[1]};
}

}  // namespace

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "mollifier") return KernelFamily::mollifier;
  if (name == "table") return KernelFamily::table;
  throw KernelError(KernelError::Kind::bad_parameters, "unknown kernel family '" + name + "'");
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::mollifier: return "mollifier";
    case KernelFamily::table: return "table";
  }
  return "?";
}

std::vector<TableEntry> read_kernel_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw KernelError(KernelError::Kind::bad_table, "cannot open kernel table " + path);
  std::vector<TableEntry> rows;
  std::string line;
  std::size_t width = 0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> cols;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        cols.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && width == 0) continue;  // header
      throw KernelError(KernelError::Kind::bad_table,
                        path + ":" + std::to_string(lineno) + ": non-numeric row");
    }
    if (cols.size() != 2 && cols.size() != 3) {
      throw KernelError(KernelError::Kind::bad_table,
                        path + ":" + std::to_string(lineno) + ": expected 2 or 3 columns");
    }
    if (width == 0) width = cols.size();
    if (cols.size() != width) {
      throw KernelError(KernelError::Kind::bad_table,
                        path + ":" + std::to_string(lineno) + ": inconsistent column count");
    }
    TableEntry e;
    e.offset.assign(cols.begin(), cols.end() - 1);
    e.value = cols.back();
    rows.push_back(std::move(e));
  }
  return rows;
}

Kernel::Kernel(const KernelSpec& spec, const SpectralSpace& space)
    : spec_(spec),
      space_(space),
      amplitude_(resolved_amplitude(spec, space.dims())),
      conv_(space.n_modes(), space.cell_volume(),
            spec.family == KernelFamily::table
                ? sample_table(spec, space)
                : sample_analytic(spec, amplitude_, space.n_modes(), spacings(space))) {
  if (spec_.family != KernelFamily::table) {
    const double diameter = spec_.family == KernelFamily::gaussian ? 6.0 * spec_.width : 2.0 * spec_.width;
    for (int a = 0; a < space_.dims(); ++a) {
      if (diameter < kResolutionCells * space_.spacing(a)) {
        throw KernelError(KernelError::Kind::under_resolved,
                          "kernel support spans fewer than 8 grid cells; refine the grid or widen the kernel");
      }
    }
  }
  compute_constants();
}

double Kernel::value(std::span<const double> x) const {
  if (spec_.family != KernelFamily::table) {
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    return radial_value(spec_, amplitude_, r2);
  }
  const auto& g = conv_.offsets();
  long m[2] = {0, 0};
  for (int a = 0; a < space_.dims(); ++a) {
    m[a] = std::lround(x[a] / space_.spacing(a));
    if (std::labs(m[a]) > static_cast<long>(g.n[a]) - 1) return 0.0;
  }
  return samples()[space_.dims() == 1 ? g.index(m[0]) : g.index(m[0], m[1])];
}

Field Kernel::convolve(const Field& f) const {
  space_.require_compatible(f);
  // J*m = m a for constants; keeps a*phi - J*phi exactly zero on constant states.
  const auto v = f.values();
  if (!a_.vector().empty() && std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = a_[i] * v[0];
    return Field(std::move(out));
  }
  return Field(conv_.apply(v));
}

Field Kernel::convolve_direct(const Field& f) const {
  space_.require_compatible(f);
  return Field(kernels::convolve_direct(conv_.offsets(), conv_.weight(), samples(), f.values()));
}

void Kernel::compute_constants() {
  const int dims = space_.dims();
  a_ = convolve(Field::constant(space_, 1.0));

  // Symmetry on the sampled difference grid.
  const auto& g = conv_.offsets();
  const auto& s = samples();
  double peak = 0.0;
  for (double v : s) peak = std::max(peak, std::abs(v));
  double asym = 0.0;
  if (dims == 1) {
    const long nx = static_cast<long>(g.n[0]);
    for (long m = 0; m <= nx - 1; ++m) asym = std::max(asym, std::abs(s[g.index(m)] - s[g.index(-m)]));
  } else {
    const long nx = static_cast<long>(g.n[0]);
    const long ny = static_cast<long>(g.n[1]);
    for (long mx = -(nx - 1); mx <= nx - 1; ++mx) {
      for (long my = -(ny - 1); my <= ny - 1; ++my) {
        asym = std::max(asym, std::abs(s[g.index(mx, my)] - s[g.index(-mx, -my)]));
      }
    }
  }
  sym_residual_ = peak > 0.0 ? asym / peak : 0.0;

  auto a_ext = extremes(a_.vector());
  a0_ = a_ext.lo;
  a_star_ = a_ext.hi;
  a0_at_ = node_location(space_.n_modes(), spacings(space_), a_ext.lo_at);

  if (spec_.family == KernelFamily::table) {
    double c = 0.0;
    for (double v : s) c += std::abs(v);
    c_J_ = c * space_.cell_volume();
    d_J_ = table_gradient_l1(s, space_);
    c_J_full_ = c_J_;
    d_J_full_ = d_J_;
    return;
  }

  // a on the refined grid, through the same convolution path.
  std::vector<std::size_t> nr;
  for (int a = 0; a < dims; ++a) nr.push_back(kRefine * space_.n(a));
  const auto hr = spacings(space_, kRefine);
  double cell_r = 1.0;
  for (double h : hr) cell_r *= h;
  LinearConvolver refined(nr, cell_r, sample_analytic(spec_, amplitude_, nr, hr));
  std::size_t nr_total = 1;
  for (auto v : nr) nr_total *= v;
  const auto a_ref = refined.apply(std::vector<double>(nr_total, 1.0));
  const auto r_ext = extremes(a_ref);
  if (r_ext.lo < a0_) {
    a0_ = r_ext.lo;
    a0_at_ = node_location(nr, hr, r_ext.lo_at);
  }
  a_star_ = std::max(a_star_, r_ext.hi);

  // L1 norms over the difference set [-L, L]^d, midpoint rule with refined cells.
  std::vector<std::vector<double>> mids(dims);
  for (int a = 0; a < dims; ++a) {
    const double L = space_.lengths()[a];
    const std::size_t cells = 2 * kRefine * space_.n(a);
    for (std::size_t i = 0; i < cells; ++i) mids[a].push_back(-L + (static_cast<double>(i) + 0.5) * hr[a]);
  }
  double c = 0.0, d = 0.0;
  if (dims == 1) {
    for (double x : mids[0]) {
      c += radial_value(spec_, amplitude_, x * x);
      d += radial_gradient(spec_, amplitude_, x * x);
    }
  } else {
    for (double x : mids[0]) {
      for (double y : mids[1]) {
        c += radial_value(spec_, amplitude_, x * x + y * y);
        d += radial_gradient(spec_, amplitude_, x * x + y * y);
      }
    }
  }
  c_J_ = c * cell_r;
  d_J_ = d * cell_r;

  const double w = spec_.width;
  if (spec_.family == KernelFamily::gaussian) {
    c_J_full_ = amplitude_ * std::pow(w * std::sqrt(2.0 * std::numbers::pi), dims);
    d_J_full_ = dims == 1 ? 2.0 * amplitude_
                          : 2.0 * std::numbers::pi * amplitude_ * w * std::sqrt(std::numbers::pi / 2.0);
  } else {
    c_J_full_ = amplitude_ * std::pow(w, dims) * bump_mass(dims);
    d_J_full_ = amplitude_ * std::pow(w, dims - 1) * bump_gradient_mass(dims);
  }
}

H1Report certify_H1(const Kernel& k) {
  H1Report r;
  r.a0 = k.a0();
  r.a_star = k.a_star();
  r.c_J = k.c_J();
  r.d_J = k.d_J();
  r.c_J_full = k.c_J_full();
  r.d_J_full = k.d_J_full();
  r.symmetry_residual = k.symmetry_residual();
  r.worst_point = k.a0_location();
  r.symmetric = r.symmetry_residual <= 1e-12;
  r.positive = r.a0 > 0.0;
  r.pass = r.symmetric && r.positive;
  std::ostringstream msg;
  if (!r.symmetric) msg << "kernel is not even (symmetry residual " << r.symmetry_residual << "); ";
  if (!r.positive) {
    msg << "a(x) = " << r.a0 << " <= 0 at (";
    for (std::size_t i = 0; i < r.worst_point.size(); ++i) msg << (i ? ", " : "") << r.worst_point[i];
    msg << "); ";
  }
  r.message = r.pass ? "ok" : msg.str();
  return r;
}

Kernel build_kernel(const KernelSpec& spec, const SpectralSpace& space) {
  Kernel k(spec, space);
  const auto report = certify_H1(k);
  if (!report.pass) throw KernelError(KernelError::Kind::h1_violation, "H1 fails: " + report.message);
  return k;
}

}  // namespace nlch
