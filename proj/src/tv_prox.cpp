#include "graphdict/tv_prox.hpp"

#include <stdexcept>

namespace graphdict {

Vector tv1d_prox(const Vector& y, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("tv1d_prox: negative weight");
  const Index n = y.size();
  Vector x(n);
  if (n == 0) return x;
  if (lambda == 0.0 || n == 1) return y;

  Index k = 0, k0 = 0, kplus = 0, kminus = 0;
  double umin = lambda, umax = -lambda;
  double vmin = y(0) - lambda, vmax = y(0) + lambda;
  const double twolambda = 2.0 * lambda;
  const double minlambda = -lambda;

  for (;;) {
    while (k == n - 1) {
      if (umin < 0.0) {
        do x(k0++) = vmin; while (k0 <= kminus);
        k = kminus = k0;
        vmin = y(k);
        umin = lambda;
        umax = vmin + umin - vmax;
      } else if (umax > 0.0) {
        do x(k0++) = vmax; while (k0 <= kplus);
        k = kplus = k0;
        vmax = y(k);
        umax = minlambda;
        umin = vmax + umax - vmin;
      } else {
        vmin += umin / static_cast<double>(k - k0 + 1);
        do x(k0++) = vmin; while (k0 <= k);
        return x;
      }
    }
    umin += y(k + 1) - vmin;
    if (umin < minlambda) {
      do x(k0++) = vmin; while (k0 <= kminus);
      k = kplus = kminus = k0;
      vmin = y(k);
      vmax = vmin + twolambda;
      umin = lambda;
      umax = minlambda;
      continue;
    }
    umax += y(k + 1) - vmax;
    if (umax > lambda) {
      do x(k0++) = vmax; while (k0 <= kplus);
      k = kplus = kminus = k0;
      vmax = y(k);
      vmin = vmax - twolambda;
      umin = lambda;
      umax = minlambda;
      continue;
    }
    ++k;
    if (umin >= lambda) {
      kminus = k;
      vmin += (umin - lambda) / static_cast<double>(kminus - k0 + 1);
      umin = lambda;
    }
    if (umax <= minlambda) {
      kplus = k;
      vmax += (umax + lambda) / static_cast<double>(kplus - k0 + 1);
      umax = minlambda;
    }
  }
}

}  // namespace graphdict
