#include "ifp/special.hpp"

#include <cmath>

#include "ifp/errors.hpp"

namespace ifp {

namespace {

double simpson_rule(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& f,
                   double a, double b, double fa, double fb, double fm,
                   double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson_rule(a, fa, m, fm, flm);
    double right = simpson_rule(m, fm, b, fb, frm);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1)
         + simpson_rec(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

} // namespace

double simpson_adaptive(const std::function<double(double)>& f,
                        double a, double b, double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (b < a) { std::swap(a, b); sign = -1.0; }
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
        throw SolverError(Errc::quadrature_failure, "non-finite integrand sample");
    double whole = simpson_rule(a, fa, b, fb, fm);
    return sign * simpson_rec(f, a, b, fa, fb, fm, whole, abs_tol, max_depth);
}

} // namespace ifp
