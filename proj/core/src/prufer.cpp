#include "pushedfront/prufer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pushedfront/errors.hpp"

namespace pushedfront {

namespace {

constexpr double kPi = std::numbers::pi;

// Continuous monotone map between theta and the angle of (scale * u, u'); both stay in
// [m pi - pi/2, m pi + pi/2] for the same m.
double rescale_angle(double angle, double scale) {
  const double m = std::round(angle / kPi);
  const double d = angle - m * kPi;
  return m * kPi + std::atan2(std::sin(d) * scale, std::cos(d));
}

// theta at the end of a non-oscillatory segment. (u, du) are propagated from the reduced
// start angle theta0 - n0 pi, so only the zeros crossed inside the segment change the branch.
double rebuild_theta(double n0, int zeros, double u, double du) {
  const double sign = zeros % 2 == 0 ? 1.0 : -1.0;
  double r = std::atan2(sign * u, sign * du);
  if (r < -0.5 * kPi) {
    r += 2.0 * kPi;
  } else if (r < 0.0) {
    r = 0.0;
  }
  return (n0 + zeros) * kPi + r;
}

PhaseState constant_step(double c, PhaseState s, double len) {
  if (c < -1e-14) {
    const double u0 = std::sin(s.theta), p0 = std::cos(s.theta);
    const double k = std::sqrt(-c);
    const double phi1 = rescale_angle(s.theta, k) + k * len;
    const double cs = std::cos(k * len), sn = std::sin(k * len);
    const double u1 = u0 * cs + p0 * sn / k;
    const double p1 = -u0 * k * sn + p0 * cs;
    return {rescale_angle(phi1, 1.0 / k), s.log_rho + std::log(std::hypot(u1, p1))};
  }
  const double n0 = std::floor(s.theta / kPi);
  const double r0 = s.theta - n0 * kPi;
  const double u0 = std::sin(r0), p0 = std::cos(r0);
  if (c > 1e-14) {
    const double kap = std::sqrt(c);
    const double e2 = std::exp(-2.0 * kap * len);
    const double ch = 0.5 * (1.0 + e2), sh = 0.5 * (1.0 - e2);
    const double u1 = u0 * ch + p0 * sh / kap;
    const double p1 = u0 * kap * sh + p0 * ch;
    // u(s) is proportional to a e^{kap s} + b e^{-kap s}
    const double a = u0 + p0 / kap, b = u0 - p0 / kap;
    int zeros = 0;
    if (a != 0.0 && -b / a > 1.0) {
      const double s_zero = std::log(-b / a) / (2.0 * kap);
      if (s_zero <= len) zeros = 1;
    }
    return {rebuild_theta(n0, zeros, u1, p1),
            s.log_rho + kap * len + std::log(std::hypot(u1, p1))};
  }
  const double u1 = u0 + p0 * len;
  int zeros = 0;
  if (p0 != 0.0) {
    const double s_zero = -u0 / p0;
    if (s_zero > 0.0 && s_zero <= len) zeros = 1;
  }
  return {rebuild_theta(n0, zeros, u1, p0), s.log_rho + std::log(std::hypot(u1, p0))};
}

PhaseState rk4_segment(const Potential& pot, double lambda, PhaseState s, double a, double b,
                       double max_step) {
  const int n = std::max(1, static_cast<int>(std::ceil((b - a) / max_step - 1e-9)));
  const double h = (b - a) / n;
  auto rhs = [&](double x, double th, double& dth, double& dlr) {
    const double w = pot.W(x);
    const double sn = std::sin(th), cs = std::cos(th);
    dth = cs * cs + (w - 2.0 * lambda) * sn * sn;
    dlr = (0.5 * (1.0 - w) + lambda) * 2.0 * sn * cs;
  };
  double th = s.theta, lr = s.log_rho;
  for (int i = 0; i < n; ++i) {
    const double x = a + i * h;
    double k1, l1, k2, l2, k3, l3, k4, l4;
    rhs(x, th, k1, l1);
    rhs(x + 0.5 * h, th + 0.5 * h * k1, k2, l2);
    rhs(x + 0.5 * h, th + 0.5 * h * k2, k3, l3);
    rhs(x + h, th + h * k3, k4, l4);
    th += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    lr += h / 6.0 * (l1 + 2 * l2 + 2 * l3 + l4);
  }
  return {th, lr};
}

LinearState linear_constant(double c, LinearState s, double len) {
  // len may be negative
  if (c < -1e-14) {
    const double k = std::sqrt(-c);
    const double cs = std::cos(k * len), sn = std::sin(k * len);
    return {s.u * cs + s.du * sn / k, -s.u * k * sn + s.du * cs};
  }
  if (c > 1e-14) {
    const double kap = std::sqrt(c);
    const double ch = std::cosh(kap * len), sh = std::sinh(kap * len);
    return {s.u * ch + s.du * sh / kap, s.u * kap * sh + s.du * ch};
  }
  return {s.u + s.du * len, s.du};
}

LinearState linear_rk4(const Potential& pot, double lambda, LinearState s, double a, double b,
                       double max_step) {
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / max_step - 1e-9)));
  const double h = (b - a) / n;
  double u = s.u, p = s.du;
  for (int i = 0; i < n; ++i) {
    const double x = a + i * h;
    const double c0 = 2 * lambda - pot.W(x), cm = 2 * lambda - pot.W(x + 0.5 * h),
                 c1 = 2 * lambda - pot.W(x + h);
    const double ku1 = p, kp1 = c0 * u;
    const double ku2 = p + 0.5 * h * kp1, kp2 = cm * (u + 0.5 * h * ku1);
    const double ku3 = p + 0.5 * h * kp2, kp3 = cm * (u + 0.5 * h * ku2);
    const double ku4 = p + h * kp3, kp4 = c1 * (u + h * ku3);
    u += h / 6.0 * (ku1 + 2 * ku2 + 2 * ku3 + ku4);
    p += h / 6.0 * (kp1 + 2 * kp2 + 2 * kp3 + kp4);
  }
  return {u, p};
}

// Piece containing [x, x + something) when moving forward, or (x - something, x] backward.
struct LocalPiece {
  double left, right;
  bool constant;
  double value;
};

LocalPiece piece_at(const Potential& pot, double x, bool forward) {
  const double sr = pot.support_right();
  if (forward ? x >= sr : x > sr) return {sr, 1e300, true, 0.0};
  for (const auto& p : pot.pieces()) {
    if (forward ? (x >= p.left && x < p.right) : (x > p.left && x <= p.right))
      return {p.left, p.right, p.constant, p.value};
  }
  return {-1e300, 0.0, true, 0.0};
}

}  // namespace

int PruferTrace::interior_zeros() const {
  if (theta.size() < 2) return 0;
  // theta(L) sits on (or just below) a multiple of pi for an eigenfunction; count crossings
  // strictly before the last node.
  return static_cast<int>(std::floor(theta[theta.size() - 2] / kPi + 1e-12));
}

PhaseState advance_phase(const Potential& potential, double lambda, PhaseState state, double from,
                         double to, double max_step) {
  double x = from;
  while (x < to) {
    const auto piece = piece_at(potential, x, true);
    const double end = std::min(to, piece.right);
    if (piece.constant) {
      state = constant_step(2.0 * lambda - piece.value, state, end - x);
    } else {
      state = rk4_segment(potential, lambda, state, x, end, max_step);
    }
    if (!std::isfinite(state.theta) || !std::isfinite(state.log_rho))
      throw SpectralError("phase integration produced a non-finite state");
    x = end;
  }
  return state;
}

PruferTrace prufer_integrate(const Potential& potential, double lambda, const Grid& grid,
                             double max_step) {
  PruferTrace trace;
  trace.lambda = lambda;
  trace.grid = grid.nodes();
  trace.theta.resize(grid.size());
  trace.log_rho.resize(grid.size());
  PhaseState s;
  trace.theta[0] = 0.0;
  trace.log_rho[0] = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    s = advance_phase(potential, lambda, s, grid[i - 1], grid[i], max_step);
    trace.theta[i] = s.theta;
    trace.log_rho[i] = s.log_rho;
  }
  return trace;
}

PruferTrace prufer_integrate(const Potential& potential, double lambda, double L, double step) {
  if (!(L > 0.0) || !(step > 0.0)) throw ConfigError("prufer_integrate needs L > 0 and step > 0");
  return prufer_integrate(potential, lambda, Grid(L, step), std::min(step, 1e-3));
}

double phase_at(const Potential& potential, double lambda, double x, double max_step) {
  return advance_phase(potential, lambda, PhaseState{}, 0.0, x, max_step).theta;
}

LinearState propagate_linear(const Potential& potential, double lambda, LinearState state,
                             double from, double to, double max_step) {
  const bool forward = to >= from;
  double x = from;
  while (forward ? x < to : x > to) {
    const auto piece = piece_at(potential, x, forward);
    const double end = forward ? std::min(to, piece.right) : std::max(to, piece.left);
    if (piece.constant) {
      state = linear_constant(2.0 * lambda - piece.value, state, end - x);
    } else {
      state = linear_rk4(potential, lambda, state, x, end, max_step);
    }
    x = end;
  }
  return state;
}

}  // namespace pushedfront
