#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "srgeo/lie_so3.hpp"

namespace srgeo {

// Momentum covector (h1, h2, h3) in the left-invariant coframe.
struct Momentum {
  double h1 = 0.0;
  double h2 = 0.0;
  double h3 = 0.0;

  // H = (h1^2/xi^2 + h2^2)/2; equals 1/2 on SR-arclength geodesics.
  double hamiltonian(double xi) const;
  // Casimir M = sqrt(h1^2 + h2^2 + h3^2), conserved along the flow.
  double casimir() const;
};

// Pendulum chart of the vertical subsystem: h1 = xi cos(beta/2),
// h2 = sin(beta/2), h3 = xi c / 2, with beta'(t) = c, c'(t) = -r sin(beta).
struct PendulumState {
  double beta = 0.0;  // mod 4*pi
  double c = 0.0;
};

double pendulum_r(double xi);  // r = 1/xi^2 - 1
PendulumState pendulum_from_momentum(const Momentum& h, double xi);
Momentum momentum_from_pendulum(const PendulumState& p, double xi);

// chi = principal sqrt(xi^2 - 1): imaginary for xi < 1, zero at xi = 1.
struct ChiParam {
  double xi;
  std::complex<double> chi;
  explicit ChiParam(double xi_in);
};

enum class Parametrization { SrArclength, SphericalArclength };
enum class Provenance { ClosedForm, Ode };

struct PathSample {
  double param = 0.0;
  GroupPoint g;
  Momentum h;
  double u1 = 0.0;
  double u2 = 0.0;
  bool flagged = false;
};

struct GeodesicPath {
  Parametrization parametrization = Parametrization::SrArclength;
  Provenance provenance = Provenance::Ode;
  double xi = 1.0;
  std::vector<PathSample> samples;
};

// Fixed-step RK4 integration of the full Hamiltonian system (vertical part
// for momenta plus matrix propagation Rdot = R Omega). Serves as the oracle
// for the closed-form operations. Requires H(h0) = 1/2 within 1e-10 and
// step <= 1e-3; samples every `stride` steps.
GeodesicPath hamiltonian_flow_t(const Momentum& h0, double xi, double t_end,
                                double step = 1e-3, int stride = 1);

// Endpoint of the SR-arclength geodesic via the D0-factorized closed form.
GroupPoint geodesic_closed_form_t(const Momentum& h0, double xi, double t);
GeodesicPath geodesic_closed_form_t_path(const Momentum& h0, double xi,
                                         const std::vector<double>& ts);

// Exact vertical solution in spherical arclength. Throws PastCuspError once
// h2^2 > 1.
Momentum vertical_solution_s(double h20, double h30, double xi, double s);

// First cusp time in spherical arclength; +infinity when the trajectory
// stays cuspless.
double cusp_time_smax(double h20, double h30, double xi);

// Cuspless geodesic in spherical arclength (h1(0) = xi sqrt(1-h20^2) >= 0).
GroupPoint geodesic_closed_form_s(double h20, double h30, double xi, double s);
GeodesicPath geodesic_closed_form_s_path(double h20, double h30, double xi,
                                         const std::vector<double>& ss);

// External cost on the sphere chart; empty means uniform cost 1.
using SphericalCost = std::function<double(double x, double y)>;

// Relabel a sampled path between SR arclength t and spherical arclength s
// via trapezoidal integration of the monotone parameter map. Controls are
// transformed accordingly; s-parametrized paths carry (1, k_g).
GeodesicPath reparametrize(const GeodesicPath& path, Parametrization target,
                           const SphericalCost& cost = nullptr);

struct WavefrontPoint {
  ChartPoint chart;
  Vec3 n;  // spherical projection
  Momentum h0;
  double beta0 = 0.0;
  double c0 = 0.0;
  bool flagged = false;
};

// Endpoints of all geodesics of SR length T, sampled over the H = 1/2
// cylinder (beta0 uniform, c0 arcsinh-warped). n_total >= 8.
std::vector<WavefrontPoint> wavefront_sample(double xi, double t_end,
                                             int n_total, double c_max = 30.0);

}  // namespace srgeo
