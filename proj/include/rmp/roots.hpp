#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "rmp/error.hpp"

namespace rmp::detail {

struct RootOptions {
  double xtol = 1e-12;
  double ftol = 0.0;
  int max_iter = 300;
};

// Root of a continuous f on [lo, hi] given a sign change. Bisection shrinks the
// bracket to 1/64 of its width, then Illinois-modified secant steps finish.
// The bracket is kept at all times, so the result is within xtol of a root.
template <class F>
double find_root(F&& f, double lo, double hi, RootOptions opt = {}) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!(std::signbit(flo) != std::signbit(fhi))) {
    throw NumericalFailure("root search: no sign change on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
  }

  const double coarse = (hi - lo) / 64.0;
  int iter = 0;
  while (hi - lo > coarse && iter < opt.max_iter) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
    ++iter;
  }

  int side = 0;
  while (hi - lo > opt.xtol && iter < opt.max_iter) {
    double x = (lo * fhi - hi * flo) / (fhi - flo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const double fx = f(x);
    if (fx == 0.0 || std::abs(fx) <= opt.ftol) return x;
    if (std::signbit(fx) == std::signbit(flo)) {
      lo = x;
      flo = fx;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = x;
      fhi = fx;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    ++iter;
    // Illinois can stall on one side for flat functions; force a bisection.
    if (iter % 8 == 0) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if (fm == 0.0) return mid;
      if (std::signbit(fm) == std::signbit(flo)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
        fhi = fm;
      }
      side = 0;
    }
  }
  if (hi - lo > opt.xtol && (opt.ftol <= 0.0 || std::min(std::abs(flo), std::abs(fhi)) > opt.ftol)) {
    throw NumericalFailure("root search: iteration limit reached");
  }
  return std::abs(flo) < std::abs(fhi) ? lo : hi;
}

}  // namespace rmp::detail
