#pragma once

#include <functional>

namespace adaptrial {

// Composite Gauss-Legendre quadrature with adaptive bisection.
// Integrates f over [a, b] until the panel-vs-split discrepancy summed over
// accepted panels is below abs_tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12);

}  // namespace adaptrial
