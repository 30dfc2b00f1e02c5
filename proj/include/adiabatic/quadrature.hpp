#pragma once

// Composite Gauss-Legendre quadrature on uniform panels. Used instead of
// adaptive rules for integrands that vanish to all orders at the endpoints,
// where relative error control never terminates.

#include <boost/math/quadrature/gauss.hpp>

namespace adiabatic {

template <typename F>
double composite_gauss(F&& f, double a, double b, int panels = 64) {
    if (b == a) return 0.0;
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double lo = a + k * h;
        const double hi = k + 1 == panels ? b : lo + h;
        acc += boost::math::quadrature::gauss<double, 20>::integrate(f, lo, hi);
    }
    return acc;
}

}  // namespace adiabatic
