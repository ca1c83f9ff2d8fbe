#include "ifp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ifp/special.hpp"

namespace ifp {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
}

// ---------------------------------------------------------------------------
// InitialDensity

InitialDensity InitialDensity::delta(double x0) {
    InitialDensity d;
    d.kind = Kind::delta;
    d.delta_x0 = x0;
    d.support_floor = x0;
    d.support_ceiling = x0;
    return d;
}

InitialDensity InitialDensity::tabulated(std::vector<double> x, std::vector<double> v) {
    if (x.size() < 2 || x.size() != v.size())
        throw SolverError(Errc::invalid_argument, "tabulated density needs matching knots/values");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (x[i] <= x[i - 1])
            throw SolverError(Errc::invalid_argument, "tabulated density knots must ascend");
    InitialDensity d;
    d.kind = Kind::tabulated;
    d.knots = std::move(x);
    d.values = std::move(v);
    d.support_floor = d.knots.front();
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        if (d.values[i] > 0.0) { d.support_floor = d.knots[i == 0 ? 0 : i - 1]; break; }
    }
    d.support_ceiling = d.knots.back();
    d.validate();
    return d;
}

InitialDensity InitialDensity::analytic(std::function<double(double)> f,
                                        double floor, double ceiling) {
    if (!(floor < ceiling))
        throw SolverError(Errc::invalid_argument, "analytic density needs floor < ceiling");
    InitialDensity d;
    d.kind = Kind::analytic;
    d.fn = std::move(f);
    d.support_floor = floor;
    d.support_ceiling = ceiling;
    d.validate();
    return d;
}

double InitialDensity::operator()(double x) const {
    switch (kind) {
    case Kind::delta:
        throw SolverError(Errc::invalid_argument, "point mass has no pointwise density");
    case Kind::tabulated: {
        if (x <= knots.front() || x >= knots.back()) {
            if (x == knots.front()) return values.front();
            if (x == knots.back()) return values.back();
            return 0.0;
        }
        auto it = std::upper_bound(knots.begin(), knots.end(), x);
        std::size_t j = std::size_t(it - knots.begin()) - 1;
        double s = (x - knots[j]) / (knots[j + 1] - knots[j]);
        return (1 - s) * values[j] + s * values[j + 1];
    }
    default:
        if (x < support_floor) return 0.0;
        return fn(x);
    }
}

double InitialDensity::tail_mass(double x) const {
    switch (kind) {
    case Kind::delta:
        return x < delta_x0 ? 1.0 : 0.0;
    case Kind::tabulated: {
        if (x >= knots.back()) return 0.0;
        double a = std::max(x, knots.front());
        double total = 0.0;
        auto it = std::upper_bound(knots.begin(), knots.end(), a);
        std::size_t j = (it == knots.begin()) ? 0 : std::size_t(it - knots.begin()) - 1;
        double va = (*this)(a);
        if (j + 1 < knots.size()) {
            total += 0.5 * (va + values[j + 1]) * (knots[j + 1] - a);
            for (std::size_t k = j + 1; k + 1 < knots.size(); ++k)
                total += 0.5 * (values[k] + values[k + 1]) * (knots[k + 1] - knots[k]);
        }
        return total;
    }
    default: {
        if (x >= support_ceiling) return 0.0;
        double a = std::max(x, support_floor);
        auto f = [this](double z) { return fn(z); };
        return simpson_adaptive(f, a, support_ceiling, 1e-10);
    }
    }
}

void InitialDensity::validate() const {
    if (kind == Kind::delta) return;
    if (kind == Kind::tabulated) {
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
                throw SolverError(Errc::invalid_argument,
                                  "density value negative or non-finite at knot " + std::to_string(i));
    } else {
        const int samples = 257;
        for (int i = 0; i < samples; ++i) {
            double x = support_floor + (support_ceiling - support_floor) * i / (samples - 1);
            double v = fn(x);
            if (!(v >= 0.0) || !std::isfinite(v))
                throw SolverError(Errc::invalid_argument, "density negative or non-finite at x=" + std::to_string(x));
        }
    }
    double mass = tail_mass(support_floor - 1.0);
    if (std::abs(mass - 1.0) > 1e-8)
        throw SolverError(Errc::invalid_argument,
                          "density mass " + std::to_string(mass) + " violates unit-mass tolerance 1e-8");
}

// ---------------------------------------------------------------------------
// DiffusionSpec

void DiffusionSpec::validate(double t_max) const {
    if (!mu || !sigma)
        throw SolverError(Errc::invalid_argument, "diffusion needs mu and sigma");
    if (!(x_lo_hint < x_hi_hint))
        throw SolverError(Errc::invalid_argument, "truncation hint must be a proper interval");
    const int nx = 61, nt = 33;
    for (int i = 0; i < nx; ++i) {
        double x = x_lo_hint + (x_hi_hint - x_lo_hint) * i / (nx - 1);
        for (int k = 0; k < nt; ++k) {
            double t = t_max * k / (nt - 1);
            double m = mu(x, t), s = sigma(x, t);
            if (!std::isfinite(m) || !std::isfinite(s))
                throw SolverError(Errc::invalid_argument, "mu/sigma non-finite on sampled domain");
            if (s < sigma_floor)
                throw SolverError(Errc::quadrature_failure,
                                  "sigma below declared floor at x=" + std::to_string(x)
                                  + ", t=" + std::to_string(t));
        }
    }
}

// ---------------------------------------------------------------------------
// SurvivalCurve

namespace {

// Fritsch-Carlson monotone cubic slopes.
std::vector<double> pchip_slopes(std::span<const double> t, std::span<const double> p) {
    std::size_t n = t.size();
    std::vector<double> d(n - 1), m(n);
    for (std::size_t i = 0; i + 1 < n; ++i)
        d[i] = (p[i + 1] - p[i]) / (t[i + 1] - t[i]);
    if (n == 2) {
        m[0] = m[1] = d[0];
        return m;
    }
    auto endpoint = [](double h0, double h1, double d0, double d1) {
        double s = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0) return 0.0;
        if (d0 * d1 < 0 && std::abs(s) > 3 * std::abs(d0)) return 3 * d0;
        return s;
    };
    m[0] = endpoint(t[1] - t[0], t[2] - t[1], d[0], d[1]);
    m[n - 1] = endpoint(t[n - 1] - t[n - 2], t[n - 2] - t[n - 3], d[n - 2], d[n - 3]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0) {
            m[i] = 0.0;
        } else {
            double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
            double w1 = 2 * h1 + h0, w2 = h1 + 2 * h0;
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    return m;
}

} // namespace

SurvivalCurve validate_p0(std::span<const double> t, std::span<const double> p,
                          std::span<const double> pdot, int order) {
    if (t.size() < 2)
        throw SolverError(Errc::p0_violation, "need at least 2 samples (index 0)");
    if (t.size() != p.size())
        throw SolverError(Errc::invalid_argument, "t/p size mismatch");
    if (order != 1 && order != 3)
        throw SolverError(Errc::invalid_argument, "interpolation order must be 1 or 3");
    if (std::abs(t[0]) > 1e-12)
        throw SolverError(Errc::p0_violation, "first sample must be at t=0 (index 0)");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] <= t[i - 1])
            throw SolverError(Errc::p0_violation, "t must ascend (index " + std::to_string(i) + ")");
    if (std::abs(p[0] - 1.0) > 1e-12)
        throw SolverError(Errc::p0_violation, "p(0) != 1 (index 0)");
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[i - 1] + 1e-13)
            throw SolverError(Errc::p0_violation, "increase detected (index " + std::to_string(i) + ")");
    if (!(p.back() > 0.0))
        throw SolverError(Errc::p0_violation,
                          "p(T) <= 0 (index " + std::to_string(p.size() - 1) + ")");

    SurvivalCurve c;
    c.t_.assign(t.begin(), t.end());
    c.p_.assign(p.begin(), p.end());
    c.order_ = order;
    if (!pdot.empty()) {
        if (pdot.size() != t.size())
            throw SolverError(Errc::invalid_argument, "pdot size mismatch");
        c.pd_.assign(pdot.begin(), pdot.end());
    } else if (order == 3) {
        c.pd_ = pchip_slopes(c.t_, c.p_);
    } else {
        // knot derivative of the linear interpolant: average of adjacent secants
        std::size_t n = t.size();
        c.pd_.resize(n);
        auto sec = [&](std::size_t i) { return (c.p_[i + 1] - c.p_[i]) / (c.t_[i + 1] - c.t_[i]); };
        c.pd_[0] = sec(0);
        c.pd_[n - 1] = sec(n - 2);
        for (std::size_t i = 1; i + 1 < n; ++i)
            c.pd_[i] = 0.5 * (sec(i - 1) + sec(i));
    }
    c.strict_decrease_ = std::all_of(c.pd_.begin(), c.pd_.end(), [](double v) { return v < 0.0; });
    return c;
}

int SurvivalCurve::segment(double t) const {
    if (t <= t_.front()) return 0;
    if (t >= t_.back()) return int(t_.size()) - 2;
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    return int(it - t_.begin()) - 1;
}

double SurvivalCurve::p(double t) const {
    t = std::clamp(t, t_.front(), t_.back());
    int i = segment(t);
    double h = t_[i + 1] - t_[i], s = (t - t_[i]) / h;
    if (order_ == 1)
        return (1 - s) * p_[i] + s * p_[i + 1];
    // cubic Hermite with knot derivatives
    double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * p_[i] + (s3 - 2 * s2 + s) * h * pd_[i]
         + (-2 * s3 + 3 * s2) * p_[i + 1] + (s3 - s2) * h * pd_[i + 1];
}

double SurvivalCurve::pdot(double t) const {
    t = std::clamp(t, t_.front(), t_.back());
    int i = segment(t);
    double h = t_[i + 1] - t_[i], s = (t - t_[i]) / h;
    if (order_ == 1)
        return (p_[i + 1] - p_[i]) / h;
    double s2 = s * s;
    return ((6 * s2 - 6 * s) * p_[i] + (3 * s2 - 4 * s + 1) * h * pd_[i]
            + (-6 * s2 + 6 * s) * p_[i + 1] + (3 * s2 - 2 * s) * h * pd_[i + 1]) / h;
}

double SurvivalCurve::pddot0() const {
    // quadratic fit to pdot at the first three knots, differentiated at t0
    if (t_.size() < 3)
        return (pd_[1] - pd_[0]) / (t_[1] - t_[0]);
    double t0 = t_[0], t1 = t_[1], t2 = t_[2];
    double l0 = (2 * t0 - t1 - t2) / ((t0 - t1) * (t0 - t2));
    double l1 = (t0 - t2) / ((t1 - t0) * (t1 - t2));
    double l2 = (t0 - t1) / ((t2 - t0) * (t2 - t1));
    return pd_[0] * l0 + pd_[1] * l1 + pd_[2] * l2;
}

double SurvivalCurve::sup_abs_pdot() const {
    double m = 0.0;
    for (double v : pd_) m = std::max(m, std::abs(v));
    return m;
}

SurvivalCurve SurvivalCurve::perturbed(double h) const {
    std::vector<double> p(p_.size()), pd(pd_.size());
    for (std::size_t i = 0; i < p_.size(); ++i) {
        p[i] = p_[i] - h * t_[i];
        pd[i] = pd_[i] - h;
    }
    return validate_p0(t_, p, pd, order_);
}

double slope_floor(const SurvivalCurve& curve, double T1, double T2) {
    if (!(0.0 <= T1) || !(T1 < T2) || T2 > curve.t_back() + 1e-12)
        throw SolverError(Errc::invalid_argument, "window must satisfy 0 <= T1 < T2 <= T");
    auto t = curve.knots();
    auto p = curve.p_values();
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= T1 - 1e-12 && t[i] <= T2 + 1e-12) idx.push_back(i);
    if (idx.size() < 2)
        throw SolverError(Errc::empty_window, "fewer than 2 knots in window");
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            double s = (p[idx[a]] - p[idx[b]]) / (t[idx[b]] - t[idx[a]]);
            lo = std::min(lo, s);
        }
    return lo;
}

// ---------------------------------------------------------------------------
// Boundary

bool Boundary::all_infinite() const {
    return std::none_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); });
}

double Boundary::operator()(double tq) const {
    if (t.empty()) return kMinusInf;
    if (tq <= t.front()) return b.front();
    if (tq >= t.back()) return b.back();
    auto it = std::upper_bound(t.begin(), t.end(), tq);
    std::size_t j = std::size_t(it - t.begin()) - 1;
    // duplicate knots: take the later entry going forward in time
    while (j + 1 < t.size() && t[j + 1] == t[j]) ++j;
    if (j + 1 >= t.size()) return b[j];
    double bl = b[j], br = b[j + 1];
    bool fl = std::isfinite(bl), fr = std::isfinite(br);
    if (fl && fr) {
        double s = (tq - t[j]) / (t[j + 1] - t[j]);
        return (1 - s) * bl + s * br;
    }
    if (fl) return bl;
    if (fr) return br;
    return kMinusInf;
}

double Boundary::max_finite() const {
    double m = kMinusInf;
    for (double v : b)
        if (std::isfinite(v)) m = std::max(m, v);
    return m;
}

double Boundary::min_finite() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : b)
        if (std::isfinite(v)) m = std::min(m, v);
    return m;
}

Boundary usc_envelope(const Boundary& in) {
    // One-sided limits of the knot interpolant only exceed the knot value
    // where a jump is represented, i.e. at duplicated time knots; there the
    // envelope lifts every entry of the group to the group maximum.
    Boundary out = in;
    std::size_t i = 0;
    while (i < out.t.size()) {
        std::size_t j = i;
        double hi = out.b[i];
        while (j + 1 < out.t.size() && out.t[j + 1] == out.t[i]) {
            ++j;
            hi = std::max(hi, out.b[j]);
        }
        for (std::size_t k = i; k <= j; ++k) out.b[k] = hi;
        i = j + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// sigma reduction

namespace {

bool sigma_is_sqrt2(const DiffusionSpec& spec, double t_max) {
    for (int i = 0; i < 17; ++i) {
        double x = spec.x_lo_hint + (spec.x_hi_hint - spec.x_lo_hint) * i / 16.0;
        for (int k = 0; k < 9; ++k) {
            double t = t_max * k / 8.0;
            if (std::abs(spec.sigma(x, t) - kSqrt2) > 1e-13) return false;
        }
    }
    return true;
}

bool sigma_time_dependent(const DiffusionSpec& spec, double t_max) {
    for (int i = 0; i < 9; ++i) {
        double x = spec.x_lo_hint + (spec.x_hi_hint - spec.x_lo_hint) * i / 8.0;
        double s0 = spec.sigma(x, 0.0);
        for (int k = 1; k < 5; ++k)
            if (std::abs(spec.sigma(x, t_max * k / 4.0) - s0) > 1e-13) return true;
    }
    return false;
}

} // namespace

ReducedSpec sigma_reduce(const DiffusionSpec& spec, double t_max) {
    spec.validate(t_max);
    ReducedSpec r;
    r.t_max = t_max;

    if (sigma_is_sqrt2(spec, t_max)) {
        r.identity = true;
        r.reduced = spec;
        r.reduced.sigma = [](double, double) { return kSqrt2; };
        r.to_y = [](double x, double) { return x; };
        r.to_x = [](double y, double) { return y; };
        return r;
    }

    const CoeffFn sigma = spec.sigma;
    const CoeffFn mu = spec.mu;
    const double floor = spec.sigma_floor;
    const double lo = spec.x_lo_hint, hi = spec.x_hi_hint;

    auto forward = [sigma, floor](double x, double t) {
        auto integrand = [&](double z) {
            double s = sigma(z, t);
            if (s < floor)
                throw SolverError(Errc::quadrature_failure, "sigma below floor inside reduction quadrature");
            return kSqrt2 / s;
        };
        return simpson_adaptive(integrand, 0.0, x, 1e-9);
    };

    auto inverse = [forward, sigma, lo, hi](double y, double t) {
        double a = lo, b = hi;
        double fa = forward(a, t) - y, fb = forward(b, t) - y;
        int guard = 0;
        while (fa > 0 && guard++ < 60) { a -= (b - a); fa = forward(a, t) - y; }
        while (fb < 0 && guard++ < 60) { b += (b - a); fb = forward(b, t) - y; }
        if (fa > 0 || fb < 0)
            throw SolverError(Errc::quadrature_failure, "reduction inverse failed to bracket");
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (a + b);
            double fm = forward(m, t) - y;
            (fm < 0 ? a : b) = m;
            if (b - a < 1e-13 * std::max(1.0, std::abs(m))) break;
        }
        double x = 0.5 * (a + b);
        for (int it = 0; it < 4; ++it) // Newton polish: d(forward)/dx = sqrt2/sigma
            x -= (forward(x, t) - y) * sigma(x, t) / kSqrt2;
        return x;
    };

    const bool time_dep = sigma_time_dependent(spec, t_max);
    auto red_drift = [mu, sigma, inverse, time_dep](double y, double t) {
        double x = inverse(y, t);
        double hx = 1e-6 * std::max(1.0, std::abs(x));
        double sig = sigma(x, t);
        double sig_x = (sigma(x + hx, t) - sigma(x - hx, t)) / (2 * hx);
        double val = kSqrt2 * mu(x, t) / sig - sig_x / kSqrt2;
        if (time_dep) {
            double ht = 1e-6 * std::max(1.0, t);
            auto dsig_dt = [&](double z) {
                if (t - ht < 0)
                    return (sigma(z, t + ht) - sigma(z, t)) / ht;
                return (sigma(z, t + ht) - sigma(z, t - ht)) / (2 * ht);
            };
            auto integrand = [&](double z) {
                double s = sigma(z, t);
                return kSqrt2 * dsig_dt(z) / (s * s);
            };
            val -= simpson_adaptive(integrand, 0.0, x, 1e-9);
        }
        return val;
    };

    r.to_y = forward;
    r.to_x = inverse;
    r.reduced.mu = red_drift;
    r.reduced.sigma = [](double, double) { return kSqrt2; };
    r.reduced.sigma_floor = 1.0;

    // transform the initial law: utilde(y) = u0(X(y,0)) * sigma(X(y,0),0)/sqrt2
    const InitialDensity& u0 = spec.initial_density;
    switch (u0.kind) {
    case InitialDensity::Kind::delta:
        r.reduced.initial_density = InitialDensity::delta(forward(u0.delta_x0, 0.0));
        break;
    case InitialDensity::Kind::tabulated: {
        std::vector<double> yk(u0.knots.size()), vv(u0.values.size());
        for (std::size_t i = 0; i < u0.knots.size(); ++i) {
            yk[i] = forward(u0.knots[i], 0.0);
            vv[i] = u0.values[i] * sigma(u0.knots[i], 0.0) / kSqrt2;
        }
        r.reduced.initial_density = InitialDensity::tabulated(std::move(yk), std::move(vv));
        break;
    }
    default: {
        auto f = u0.fn;
        auto dens = [f, inverse, sigma](double y) {
            double x = inverse(y, 0.0);
            return f(x) * sigma(x, 0.0) / kSqrt2;
        };
        r.reduced.initial_density = InitialDensity::analytic(
            dens, forward(u0.support_floor, 0.0), forward(u0.support_ceiling, 0.0));
    }
    }

    // truncation hints in reduced coordinates, worst case over sampled times
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -y_lo;
    for (int k = 0; k < 5; ++k) {
        double t = t_max * k / 4.0;
        y_lo = std::min(y_lo, forward(lo, t));
        y_hi = std::max(y_hi, forward(hi, t));
    }
    r.reduced.x_lo_hint = y_lo;
    r.reduced.x_hi_hint = y_hi;
    return r;
}

Boundary ReducedSpec::map_boundary(const Boundary& bd) const {
    Boundary out = bd;
    for (std::size_t i = 0; i < bd.t.size(); ++i)
        if (std::isfinite(bd.b[i])) out.b[i] = to_y(bd.b[i], bd.t[i]);
    return out;
}

Boundary ReducedSpec::unmap_boundary(const Boundary& bd) const {
    Boundary out = bd;
    for (std::size_t i = 0; i < bd.t.size(); ++i)
        if (std::isfinite(bd.b[i])) out.b[i] = to_x(bd.b[i], bd.t[i]);
    return out;
}

// ---------------------------------------------------------------------------
// compatibility

namespace {

struct OneSidedDerivs {
    double d1, d2, d3;
};

// forward stencils anchored at the support floor; spacing h
OneSidedDerivs one_sided(const InitialDensity& u0, double a, double h) {
    double f[5];
    for (int k = 0; k < 5; ++k) f[k] = u0(a + k * h);
    OneSidedDerivs d;
    d.d1 = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h);
    d.d2 = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / (h * h);
    d.d3 = (-5 * f[0] + 18 * f[1] - 24 * f[2] + 14 * f[3] - 3 * f[4]) / (2 * h * h * h);
    return d;
}

} // namespace

std::vector<CompatResidual> compatibility_residuals(const InitialDensity& u0,
                                                    const SurvivalCurve& curve,
                                                    const ReducedSpec& spec,
                                                    int order) {
    if (order != 1 && order != 2)
        throw SolverError(Errc::invalid_argument, "compatibility order must be 1 or 2");
    if (u0.is_delta())
        throw SolverError(Errc::invalid_argument,
                          "point-mass initial law has no one-sided derivatives");
    double pdot0 = curve.pdot(curve.t_front());
    if (order == 2 && pdot0 == 0.0)
        throw SolverError(Errc::degenerate_slope, "pdot(0)=0 blocks the order-2 residual");

    std::vector<CompatResidual> out;
    const double width = spec.reduced.x_hi_hint - spec.reduced.x_lo_hint;
    const double h = 1e-4 * width;

    // reduced frame: sigma^2 = 2 identically
    const InitialDensity& ur = spec.reduced.initial_density;
    OneSidedDerivs dr = one_sided(ur, ur.support_floor, h);
    out.push_back({1, "reduced", 2.0 * pdot0 + 2.0 * dr.d1});
    if (order == 2) {
        double bdot0 = dr.d2 / pdot0;
        out.push_back({2, "reduced", curve.pddot0() + dr.d3 + bdot0 * dr.d2});
    }

    if (!spec.identity) {
        // original frame, order 1 only: the higher-order corner relation is
        // stated for the reduced coordinates
        OneSidedDerivs d0 = one_sided(u0, u0.support_floor, h);
        // reconstruct original sigma(floor,0) from the map derivative:
        // d to_y/dx = sqrt2/sigma  =>  sigma = sqrt2 / map'
        double hm = h;
        double mapd = (spec.to_y(u0.support_floor + hm, 0.0) - spec.to_y(u0.support_floor, 0.0)) / hm;
        double sig0 = kSqrt2 / mapd;
        out.push_back({1, "original", 2.0 * pdot0 + sig0 * sig0 * d0.d1});
    } else {
        out.push_back({1, "original", out.front().value});
        if (order == 2) out.push_back({2, "original", out[1].value});
    }
    return out;
}

} // namespace ifp
