#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

namespace hdxgeo {

// Adaptive Gauss-Kronrod quadrature, 7-point Gauss rule embedded in the
// 15-point Kronrod extension.  The error of a panel is estimated by the
// difference between the two rules; a panel that misses its share of the
// tolerance is bisected.  Recursion splits the tolerance between halves, so
// the returned absolute-error estimate is a sum of accepted panel estimates.
//
// The integrand is passed as a template parameter so hot callers compile to
// a tight loop; integrate_adaptive_fn wraps std::function for casual use.

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
  int max_depth_hit = 0;  // nonzero when some panel hit the depth cap
};

namespace qk15 {
// Abscissae (positive half) and weights of the G7-K15 pair on [-1, 1].
inline constexpr double xk[8] = {
    0.000000000000000000000000000000000e+00,
    2.077849550078984676006894037732449e-01,
    4.058451513773971669066064120769615e-01,
    5.860872354676911302941448382587296e-01,
    7.415311855993944398638647732807884e-01,
    8.648644233597690727897127886409262e-01,
    9.491079123427585245261896840478513e-01,
    9.914553711208126392068546975263285e-01};
inline constexpr double wk[8] = {
    2.094821410847278280129991748917143e-01,
    2.044329400752988924141619992346491e-01,
    1.903505780647854099132564024210137e-01,
    1.690047266392679028265834265985503e-01,
    1.406532597155259187451895905102379e-01,
    1.047900103222501838398763225415180e-01,
    6.309209262997855329070066318920429e-02,
    2.293532201052922496373200805896959e-02};
inline constexpr double wg[4] = {
    4.179591836734693877551020408163265e-01,
    3.818300505051189449503697754889751e-01,
    2.797053914892766679014677714237796e-01,
    1.294849661688696932706114326790820e-01};
}  // namespace qk15

template <typename F>
inline void gk15_panel(const F& f, double a, double b, double* k15,
                       double* g7) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double f0 = f(c);
  double acc_k = qk15::wk[0] * f0;
  double acc_g = qk15::wg[0] * f0;
  for (int i = 1; i < 8; ++i) {
    const double dx = h * qk15::xk[i];
    const double fl = f(c - dx);
    const double fr = f(c + dx);
    acc_k += qk15::wk[i] * (fl + fr);
    if ((i & 1) == 0) acc_g += qk15::wg[i / 2] * (fl + fr);
  }
  *k15 = acc_k * h;
  *g7 = acc_g * h;
}

namespace detail {
template <typename F>
inline double adapt(const F& f, double a, double b, double tol, int depth,
                    int max_depth, QuadResult* out) {
  double k15, g7;
  gk15_panel(f, a, b, &k15, &g7);
  out->evaluations += 15;
  const double err = std::fabs(k15 - g7);
  if (err <= tol || depth >= max_depth) {
    out->error_estimate += err;
    if (depth >= max_depth && err > tol) out->max_depth_hit = depth;
    return k15;
  }
  const double m = 0.5 * (a + b);
  return adapt(f, a, m, 0.5 * tol, depth + 1, max_depth, out) +
         adapt(f, m, b, 0.5 * tol, depth + 1, max_depth, out);
}
}  // namespace detail

// abs_tol is interpreted on the scale of the integrand handed in; callers
// integrating a rescaled integrand (max about 1) get a relative contract.
template <typename F>
inline QuadResult integrate_adaptive(const F& f, double a, double b,
                                     double abs_tol, int max_depth = 45) {
  QuadResult r;
  if (!(b > a)) return r;
  r.value = detail::adapt(f, a, b, abs_tol, 0, max_depth, &r);
  return r;
}

QuadResult integrate_adaptive_fn(const std::function<double(double)>& f,
                                 double a, double b, double abs_tol,
                                 int max_depth = 45);

}  // namespace hdxgeo
