#include "srgeo/geodesics.hpp"

#include <algorithm>
#include <array>
#include <boost/math/special_functions/ellint_rf.hpp>
#include <boost/math/special_functions/ellint_rj.hpp>
#include <cmath>
#include <limits>

#include "srgeo/errors.hpp"

namespace srgeo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <std::size_t N, typename Deriv>
std::array<double, N> rk4_step(const std::array<double, N>& y, double h,
                               const Deriv& f) {
  std::array<double, N> k1 = f(y), k2{}, k3{}, k4{}, tmp{};
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  k2 = f(tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  k3 = f(tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * k3[i];
  k4 = f(tmp);
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

void check_normalized(const Momentum& h0, double xi) {
  if (std::abs(h0.hamiltonian(xi) - 0.5) > 1e-10) {
    throw ConfigError("geodesics: momentum not on H = 1/2");
  }
}

// State layout for the full flow: h1, h2, h3, R row-major (9).
using FlowState = std::array<double, 12>;

FlowState flow_deriv(const FlowState& y, double inv_xi2) {
  const double h1 = y[0], h2 = y[1], h3 = y[2];
  FlowState d{};
  d[0] = -h2 * h3;
  d[1] = inv_xi2 * h1 * h3;
  d[2] = (1.0 - inv_xi2) * h1 * h2;
  // Omega = -(h1/xi^2) A2 + h2 A1; Rdot = R * Omega.
  const double a = h1 * inv_xi2, b = h2;
  // Omega = [[0,0,-a],[0,0,-b],[a,b,0]]
  for (int r = 0; r < 3; ++r) {
    const double r0 = y[3 + 3 * r], r1 = y[4 + 3 * r], r2 = y[5 + 3 * r];
    d[3 + 3 * r] = r2 * a;
    d[4 + 3 * r] = r2 * b;
    d[5 + 3 * r] = -r0 * a - r1 * b;
  }
  return d;
}

Mat3 matrix_from_state(const FlowState& y) {
  Mat3 r;
  r << y[3], y[4], y[5], y[6], y[7], y[8], y[9], y[10], y[11];
  return r;
}

// Vertical subsystem plus the running integral I(t) = int h3^2/(M^2-h2^2).
using VertState = std::array<double, 4>;

VertState vert_deriv(const VertState& y, double inv_xi2, double m2) {
  const double h1 = y[0], h2 = y[1], h3 = y[2];
  VertState d{};
  d[0] = -h2 * h3;
  d[1] = inv_xi2 * h1 * h3;
  d[2] = (1.0 - inv_xi2) * h1 * h2;
  const double den = m2 - h2 * h2;
  d[3] = den > 0.0 ? h3 * h3 / den : 1.0;
  return d;
}

// Advance (h, I) from t to t_target with micro-steps of at most `step`.
void vert_advance(VertState& y, double& t, double t_target, double step,
                  double inv_xi2, double m2) {
  while (t < t_target - 1e-15) {
    const double h = std::min(step, t_target - t);
    y = rk4_step(y, h, [&](const VertState& s) {
      return vert_deriv(s, inv_xi2, m2);
    });
    t += h;
  }
  t = t_target;
}

Mat3 d0_matrix(double h1, double h2, double h3) {
  const double m = std::sqrt(h1 * h1 + h2 * h2 + h3 * h3);
  const double mu2 = m * m - h2 * h2;
  const double mu = std::sqrt(std::max(mu2, 0.0));
  Mat3 d;
  d << mu, h2 * h1 / mu, -h2 * h3 / mu,  //
      0.0, m * h3 / mu, m * h1 / mu,     //
      h2, -h1, h3;
  return d / m;
}

Mat3 assemble_from_tilde(const Mat3& d0, double xt, double yt, double tt) {
  return d0.transpose() * rotation_from_angles(xt, yt, tt);
}

struct TildeAngles {
  double xt, yt, tt;
};

// Adaptive Simpson, absolute tolerance.
template <typename F>
double simpson_rec(const F& f, double a, double fa, double b, double fb,
                   double fm, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol || (b - a) < 1e-14) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, fa, b, fb, fm, whole, tol, 55);
}

// ---- vertical solution in s, shared pieces ----

struct VerticalSParams {
  double xi;
  double h20, h30;
  double m;   // Casimir of the s-parametrized family
  double smax;
};

Momentum vertical_s_eval(double h20, double h30, double xi, double s) {
  double h2, h3;
  const double d = xi * xi - 1.0;
  if (std::abs(d) <= 1e-9) {
    h2 = h20 + h30 * s;
    h3 = h30;
  } else if (d > 0.0) {
    const double chi = std::sqrt(d);
    const double ch = std::cosh(s * chi), sh = std::sinh(s * chi);
    h2 = h20 * ch + h30 / chi * sh;
    h3 = h30 * ch + chi * h20 * sh;
  } else {
    const double a = std::sqrt(-d);
    const double ca = std::cos(s * a), sa = std::sin(s * a);
    h2 = h20 * ca + h30 / a * sa;
    h3 = h30 * ca - a * h20 * sa;
  }
  const double rem = 1.0 - h2 * h2;
  if (rem < -1e-12) {
    throw PastCuspError("vertical_solution_s: past the first cusp");
  }
  return Momentum{xi * std::sqrt(std::max(rem, 0.0)), h2, h3};
}

double ybar_integrand_s(double h20, double h30, double xi, double m2,
                        double s) {
  const Momentum h = vertical_s_eval(h20, h30, xi, s);
  const double num = std::sqrt(std::max(1.0 - h.h2 * h.h2, 0.0));
  const double den = m2 - h.h2 * h.h2;
  return num / den;
}

// Incomplete elliptic integrals via Carlson forms. Principal branch
// |phi| <= pi/2; callers handle period reduction.
double ellint_f_principal(double phi, double k2) {
  const double s = std::sin(phi), c = std::cos(phi);
  const double q = std::max(1.0 - k2 * s * s, 0.0);
  return s * boost::math::ellint_rf(c * c, q, 1.0);
}

double ellint_pi_principal(double n, double phi, double k2) {
  const double s = std::sin(phi), c = std::cos(phi);
  const double q = std::max(1.0 - k2 * s * s, 0.0);
  const double p = 1.0 - n * s * s;
  if (p <= 0.0) throw NumericError("ellint_pi: characteristic singularity");
  return s * boost::math::ellint_rf(c * c, q, 1.0) +
         n / 3.0 * s * s * s * boost::math::ellint_rj(c * c, q, 1.0, p);
}

// G(psi) = F(psi,k) - (1 - 1/M^2) * Pi(n; psi, k) with n = rho^2/M^2,
// k^2 = rho^2, extended over period branches when rho <= 1.
double elliptic_g(double psi, double rho2, double m2) {
  const double n = rho2 / m2;
  const double coef = 1.0 - 1.0 / m2;
  if (rho2 <= 1.0) {
    const double mshift = std::round(psi / kPi);
    const double pr = psi - mshift * kPi;
    double val = ellint_f_principal(pr, rho2) -
                 coef * ellint_pi_principal(n, pr, rho2);
    if (mshift != 0.0) {
      const double kc = boost::math::ellint_rf(0.0, 1.0 - rho2, 1.0);
      const double pic =
          kc + n / 3.0 *
                   boost::math::ellint_rj(0.0, 1.0 - rho2, 1.0, 1.0 - n);
      val += 2.0 * mshift * (kc - coef * pic);
    }
    return val;
  }
  // rho > 1: the trajectory stays within one branch around m*pi; reduce both
  // endpoints with the same shift (handled by the caller passing raw psi;
  // the difference of two G values only ever spans a single branch).
  const double mshift = std::round(psi / kPi);
  const double pr = psi - mshift * kPi;
  return ellint_f_principal(pr, rho2) -
         coef * ellint_pi_principal(n, pr, rho2);
}

// ybar integral I(s) = int_0^s sqrt(1-h2^2)/(M^2-h2^2) dsigma for xi < 1 via
// elliptic integrals; quadrature otherwise.
double ybar_integral_s(double h20, double h30, double xi, double m2,
                       double s) {
  if (s == 0.0) return 0.0;
  if (xi < 1.0 && 1.0 - xi * xi > 1e-9) {
    const double w = std::sqrt(1.0 - xi * xi);
    const double rho2 = (m2 - xi * xi) / (1.0 - xi * xi);
    if (rho2 > 1e-14) {
      const double psi0 = std::atan2(h20, h30 / w);
      const double psi1 = w * s + psi0;
      if (rho2 > 1.0 &&
          std::round(psi0 / kPi) != std::round(psi1 / kPi)) {
        // Should not happen before the cusp; fall through to quadrature.
      } else {
        return (elliptic_g(psi1, rho2, m2) - elliptic_g(psi0, rho2, m2)) / w;
      }
    }
  }
  return adaptive_simpson(
      [&](double sig) { return ybar_integrand_s(h20, h30, xi, m2, sig); }, 0.0,
      s, 1e-10);
}

}  // namespace

double Momentum::hamiltonian(double xi) const {
  return 0.5 * (h1 * h1 / (xi * xi) + h2 * h2);
}

double Momentum::casimir() const {
  return std::sqrt(h1 * h1 + h2 * h2 + h3 * h3);
}

double pendulum_r(double xi) { return 1.0 / (xi * xi) - 1.0; }

PendulumState pendulum_from_momentum(const Momentum& h, double xi) {
  PendulumState p;
  p.beta = 2.0 * std::atan2(h.h2, h.h1 / xi);
  if (p.beta < 0.0) p.beta += 2.0 * kTwoPi;  // [0, 4*pi)
  p.c = 2.0 * h.h3 / xi;
  return p;
}

Momentum momentum_from_pendulum(const PendulumState& p, double xi) {
  return Momentum{xi * std::cos(0.5 * p.beta), std::sin(0.5 * p.beta),
                  0.5 * xi * p.c};
}

ChiParam::ChiParam(double xi_in) : xi(xi_in) {
  if (!(xi_in > 0.0)) throw ConfigError("ChiParam: xi must be positive");
  const double d = xi_in * xi_in - 1.0;
  chi = d >= 0.0 ? std::complex<double>(std::sqrt(d), 0.0)
                 : std::complex<double>(0.0, std::sqrt(-d));
}

GeodesicPath hamiltonian_flow_t(const Momentum& h0, double xi, double t_end,
                                double step, int stride) {
  check_normalized(h0, xi);
  if (!(step > 0.0 && step <= 1e-3 + 1e-15)) {
    throw ConfigError("hamiltonian_flow_t: step must be in (0, 1e-3]");
  }
  if (stride < 1) throw ConfigError("hamiltonian_flow_t: stride >= 1");
  const double inv_xi2 = 1.0 / (xi * xi);
  const long n = std::max<long>(1, static_cast<long>(std::ceil(t_end / step)));
  const double h = t_end / static_cast<double>(n);

  FlowState y{h0.h1, h0.h2, h0.h3, 1, 0, 0, 0, 1, 0, 0, 0, 1};
  GeodesicPath path;
  path.parametrization = Parametrization::SrArclength;
  path.provenance = Provenance::Ode;
  path.xi = xi;
  path.samples.reserve(static_cast<std::size_t>(n / stride + 2));

  auto record = [&](double t) {
    PathSample s;
    s.param = t;
    s.g = GroupPoint::from_matrix(matrix_from_state(y));
    s.h = Momentum{y[0], y[1], y[2]};
    s.u1 = y[0] * inv_xi2;
    s.u2 = y[1];
    s.flagged = s.g.chart().degenerate;
    path.samples.push_back(std::move(s));
  };

  record(0.0);
  for (long i = 1; i <= n; ++i) {
    y = rk4_step(y, h, [&](const FlowState& s) {
      return flow_deriv(s, inv_xi2);
    });
    if (i % stride == 0 || i == n) record(h * static_cast<double>(i));
  }
  return path;
}

GeodesicPath geodesic_closed_form_t_path(const Momentum& h0, double xi,
                                         const std::vector<double>& ts) {
  check_normalized(h0, xi);
  const double m = h0.casimir();
  const double mu2 = m * m - h0.h2 * h0.h2;

  GeodesicPath path;
  path.parametrization = Parametrization::SrArclength;
  path.provenance = Provenance::ClosedForm;
  path.xi = xi;

  if (mu2 < 1e-28) {
    // mu = 0 forces h1 = h3 = 0, h2 = +-1 on H = 1/2: the vertical
    // equilibrium whose geodesic is the pure fiber rotation. D0 is undefined
    // there; emit the exact rotation, flagged.
    for (double t : ts) {
      PathSample s;
      s.param = t;
      Mat3 r = rotation_from_angles(0.0, 0.0, h0.h2 * t);
      s.g = GroupPoint::from_matrix(r);
      s.h = h0;
      s.u1 = 0.0;
      s.u2 = h0.h2;
      s.flagged = true;
      path.samples.push_back(std::move(s));
    }
    return path;
  }

  const Mat3 d0 = d0_matrix(h0.h1, h0.h2, h0.h3);
  const double inv_xi2 = 1.0 / (xi * xi);
  const double m2 = m * m;

  VertState y{h0.h1, h0.h2, h0.h3, 0.0};
  double tcur = 0.0;
  for (double t : ts) {
    if (t < tcur - 1e-12) {
      throw ConfigError("geodesic_closed_form_t_path: times must be sorted");
    }
    vert_advance(y, tcur, t, 1e-3, inv_xi2, m2);
    const double h1 = y[0], h2 = y[1], h3 = y[2];
    TildeAngles a;
    a.xt = std::atan2(h2, std::sqrt(h1 * h1 + h3 * h3));
    a.yt = m * inv_xi2 * (t - y[3]);
    a.tt = std::atan2(-h1, h3);
    PathSample s;
    s.param = t;
    s.g = GroupPoint::from_matrix(assemble_from_tilde(d0, a.xt, a.yt, a.tt));
    s.h = Momentum{h1, h2, h3};
    s.u1 = h1 * inv_xi2;
    s.u2 = h2;
    path.samples.push_back(std::move(s));
  }
  return path;
}

GroupPoint geodesic_closed_form_t(const Momentum& h0, double xi, double t) {
  return geodesic_closed_form_t_path(h0, xi, {t}).samples.front().g;
}

Momentum vertical_solution_s(double h20, double h30, double xi, double s) {
  if (std::abs(h20) > 1.0 + 1e-12) {
    throw ConfigError("vertical_solution_s: |h2(0)| must be <= 1");
  }
  return vertical_s_eval(h20, h30, xi, s);
}

double cusp_time_smax(double h20, double h30, double xi) {
  if (std::abs(h20) > 1.0 + 1e-12) {
    throw ConfigError("cusp_time_smax: |h2(0)| must be <= 1");
  }
  const double d = xi * xi - 1.0;
  if (std::abs(d) <= 1e-9) {
    if (h30 == 0.0) return kInf;
    return ((h30 > 0.0 ? 1.0 : -1.0) - h20) / h30;
  }
  const ChiParam cp(xi);
  const std::complex<double> chi = cp.chi;
  const double kappa = h30 * h30 + (1.0 - h20 * h20) * d;
  if (kappa < 0.0) return kInf;
  const std::complex<double> denom = h20 * chi + h30;
  if (std::abs(denom) < 1e-15) return kInf;
  const double s1 = denom.real() > 0.0 ? 1.0 : (denom.real() < 0.0 ? -1.0 : 0.0);
  if (s1 == 0.0) return kInf;
  const std::complex<double> val =
      std::log(s1 * (std::sqrt(kappa) + chi) / denom) / chi;
  if (std::abs(val.imag()) > 1e-10 * (1.0 + std::abs(val.real()))) {
    throw NumericError("cusp_time_smax: non-real result");
  }
  const double smax = val.real();
  if (!(smax > -1e-12)) return kInf;
  return std::max(smax, 0.0);
}

GeodesicPath geodesic_closed_form_s_path(double h20, double h30, double xi,
                                         const std::vector<double>& ss) {
  if (std::abs(h20) > 1.0) {
    throw ConfigError("geodesic_closed_form_s: |h2(0)| must be <= 1");
  }
  const double h10 = xi * std::sqrt(std::max(1.0 - h20 * h20, 0.0));
  const double m2 = h10 * h10 + h20 * h20 + h30 * h30;
  const double m = std::sqrt(m2);
  const double smax = cusp_time_smax(h20, h30, xi);

  GeodesicPath path;
  path.parametrization = Parametrization::SphericalArclength;
  path.provenance = Provenance::ClosedForm;
  path.xi = xi;

  const double mu2 = m2 - h20 * h20;
  if (mu2 < 1e-24) {
    throw NumericError(
        "geodesic_closed_form_s: degenerate momentum (|h2(0)| = 1, h3(0) = 0)");
  }
  const Mat3 d0 = d0_matrix(h10, h20, h30);
  for (double s : ss) {
    if (s > smax + 1e-9) {
      throw PastCuspError("geodesic_closed_form_s: s beyond the first cusp");
    }
    const Momentum h = vertical_s_eval(h20, h30, xi, std::min(s, smax));
    TildeAngles a;
    a.xt = std::atan2(h.h2, std::sqrt(std::max(m2 - h.h2 * h.h2, 0.0)));
    a.yt = xi * m * ybar_integral_s(h20, h30, xi, m2, std::min(s, smax));
    a.tt = std::atan2(-h.h1, h.h3);
    PathSample ps;
    ps.param = s;
    ps.g = GroupPoint::from_matrix(assemble_from_tilde(d0, a.xt, a.yt, a.tt));
    ps.h = h;
    // s-parametrized controls: unit spherical speed and geodesic curvature.
    ps.u1 = 1.0;
    ps.u2 = h.h1 > 1e-14 ? xi * xi * h.h2 / h.h1 : 0.0;
    ps.flagged = h.h1 <= 1e-14;
    path.samples.push_back(std::move(ps));
  }
  return path;
}

GroupPoint geodesic_closed_form_s(double h20, double h30, double xi,
                                  double s) {
  return geodesic_closed_form_s_path(h20, h30, xi, {s}).samples.front().g;
}

GeodesicPath reparametrize(const GeodesicPath& path, Parametrization target,
                           const SphericalCost& cost) {
  if (path.samples.size() < 2) {
    throw ConfigError("reparametrize: need at least two samples");
  }
  GeodesicPath out = path;
  if (path.parametrization == target) return out;
  out.parametrization = target;

  const std::size_t n = path.samples.size();
  std::vector<double> integrand(n);

  if (target == Parametrization::SphericalArclength) {
    // t -> s: ds = u1 dt; requires a strictly cuspless source.
    for (std::size_t i = 0; i < n; ++i) {
      const double u1 = path.samples[i].u1;
      if (u1 <= 0.0) {
        throw PastCuspError("reparametrize: u1 <= 0 at t = " +
                            std::to_string(path.samples[i].param));
      }
      integrand[i] = u1;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) {
        const double dt = path.samples[i].param - path.samples[i - 1].param;
        s += 0.5 * dt * (integrand[i - 1] + integrand[i]);
      }
      PathSample& ps = out.samples[i];
      const double kg = path.samples[i].u2 / path.samples[i].u1;
      ps.param = s;
      ps.u1 = 1.0;
      ps.u2 = kg;
    }
  } else {
    // s -> t: dt/ds = C(n) sqrt(xi^2 + k_g^2).
    for (std::size_t i = 0; i < n; ++i) {
      const PathSample& ps = path.samples[i];
      const double kg = ps.u2 / ps.u1;
      double c = 1.0;
      if (cost) {
        const ChartPoint& ch = ps.g.chart();
        c = cost(ch.x, ch.y);
      }
      integrand[i] = c * std::sqrt(path.xi * path.xi + kg * kg);
    }
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) {
        const double ds = path.samples[i].param - path.samples[i - 1].param;
        t += 0.5 * ds * (integrand[i - 1] + integrand[i]);
      }
      PathSample& ps = out.samples[i];
      const double kg = path.samples[i].u2 / path.samples[i].u1;
      const double dsdt = 1.0 / integrand[i];
      ps.param = t;
      ps.u1 = dsdt;
      ps.u2 = kg * dsdt;
    }
  }
  return out;
}

std::vector<WavefrontPoint> wavefront_sample(double xi, double t_end,
                                             int n_total, double c_max) {
  if (n_total < 8) throw ConfigError("wavefront_sample: need N >= 8");
  const int n_beta =
      std::max(8, static_cast<int>(std::ceil(std::sqrt(2.0 * n_total))));
  int n_c = std::max(3, (n_total + n_beta - 1) / n_beta);
  if (n_c % 2 == 0) ++n_c;  // keep c = 0 in the sample
  const double vmax = std::asinh(c_max);

  std::vector<WavefrontPoint> points;
  points.reserve(static_cast<std::size_t>(n_beta) * n_c);
  for (int i = 0; i < n_beta; ++i) {
    const double beta0 = 2.0 * kTwoPi * i / n_beta;
    for (int j = 0; j < n_c; ++j) {
      const double v = n_c == 1 ? 0.0 : -vmax + 2.0 * vmax * j / (n_c - 1);
      const double c0 = std::sinh(v);
      const Momentum h0 = momentum_from_pendulum({beta0, c0}, xi);
      GeodesicPath p = geodesic_closed_form_t_path(h0, xi, {t_end});
      WavefrontPoint wp;
      wp.chart = p.samples.front().g.chart();
      wp.n = spherical_projection(p.samples.front().g);
      wp.h0 = h0;
      wp.beta0 = beta0;
      wp.c0 = c0;
      wp.flagged = p.samples.front().flagged;
      points.push_back(std::move(wp));
    }
  }
  return points;
}

}  // namespace srgeo
