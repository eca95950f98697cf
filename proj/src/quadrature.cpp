#include "adaptrial/quadrature.hpp"

#include <cmath>
#include <vector>

#include "adaptrial/errors.hpp"

namespace adaptrial {

namespace {

constexpr int kOrder = 15;

struct GaussRule {
    double x[kOrder];  // nodes on [-1, 1]
    double w[kOrder];
};

// Nodes and weights by Newton iteration on the Legendre polynomial.
GaussRule make_rule() {
    GaussRule rule{};
    const int n = kOrder;
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        rule.x[i] = -z;
        rule.x[n - 1 - i] = z;
        rule.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.w[n - 1 - i] = rule.w[i];
    }
    return rule;
}

double panel(const GaussRule& rule, const std::function<double(double)>& f,
             double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < kOrder; ++i) s += rule.w[i] * f(mid + half * rule.x[i]);
    return s * half;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol) {
    static const GaussRule rule = make_rule();
    if (!(b > a)) return 0.0;

    struct Interval {
        double a, b, estimate;
    };
    std::vector<Interval> stack;
    stack.push_back({a, b, panel(rule, f, a, b)});

    const double total_len = b - a;
    double sum = 0.0;
    int panels = 0;
    while (!stack.empty()) {
        Interval iv = stack.back();
        stack.pop_back();
        const double mid = 0.5 * (iv.a + iv.b);
        const double left = panel(rule, f, iv.a, mid);
        const double right = panel(rule, f, mid, iv.b);
        const double err = std::abs(left + right - iv.estimate);
        const double local_tol = abs_tol * (iv.b - iv.a) / total_len;
        if (err <= local_tol || (iv.b - iv.a) < 1e-14 * total_len) {
            sum += left + right;
            continue;
        }
        if (++panels > 100000)
            throw NumericError("quadrature: interval budget exhausted (integrand too rough)");
        stack.push_back({iv.a, mid, left});
        stack.push_back({mid, iv.b, right});
    }
    return sum;
}

}  // namespace adaptrial
