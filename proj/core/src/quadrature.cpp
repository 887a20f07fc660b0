#include "hdxgeo/quadrature.hpp"

namespace hdxgeo {

QuadResult integrate_adaptive_fn(const std::function<double(double)>& f,
                                 double a, double b, double abs_tol,
                                 int max_depth) {
  return integrate_adaptive(f, a, b, abs_tol, max_depth);
}

}  // namespace hdxgeo
