#include "hyptimes/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include "hyptimes/compensated.hpp"

namespace hyptimes {

namespace {

struct SimpsonCtx {
  const std::function<double(double)>& f;
  std::int64_t evals = 0;
  bool converged = true;
};

double eval_f(SimpsonCtx& ctx, double x) {
  ctx.evals += 1;
  return ctx.f(x);
}

double simpson_rec(SimpsonCtx& ctx, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = eval_f(ctx, lm);
  double frm = eval_f(ctx, rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (std::fabs(delta) <= 15.0 * tol || depth <= 0) {
    if (depth <= 0 && std::fabs(delta) > 15.0 * tol) ctx.converged = false;
    return left + right + delta / 15.0;
  }
  return simpson_rec(ctx, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(ctx, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, std::int64_t* evals, bool* converged,
                        int max_depth) {
  if (!(b > a)) return 0.0;
  SimpsonCtx ctx{f};
  double fa = eval_f(ctx, a);
  double m = 0.5 * (a + b);
  double fm = eval_f(ctx, m);
  double fb = eval_f(ctx, b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double result = simpson_rec(ctx, a, b, fa, fm, fb, whole, tol, max_depth);
  if (evals) *evals += ctx.evals;
  if (converged && !ctx.converged) *converged = false;
  return result;
}

double log_power_tail(double p, double eps) {
  if (!(eps > 0.0) || eps >= 1.0) {
    throw std::invalid_argument("log_power_tail: need 0 < eps < 1");
  }
  if (p < 0.0) throw std::invalid_argument("log_power_tail: need p >= 0");
  double t_cut = -std::log(eps);
  if (p == std::floor(p)) {
    // I_p = eps T^p + p I_{p-1}, I_0 = eps.
    double ip = eps;
    for (int k = 1; k <= static_cast<int>(p); ++k) {
      ip = eps * std::pow(t_cut, k) + k * ip;
    }
    return ip;
  }
  // Substituted form: integral of t^p e^{-t} over [T, inf); the integrand
  // is negligible past T + 80 at these magnitudes.
  auto g = [p](double t) { return std::pow(t, p) * std::exp(-t); };
  return adaptive_simpson(g, t_cut, t_cut + 80.0, 1e-14);
}

}  // namespace hyptimes
