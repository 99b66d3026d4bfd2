#include "nlsg/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace nlsg {

namespace {

constexpr double kContinuumGap = 1e-6;  // lambda must stay below 1 - gap
constexpr double kMergeTol = 1e-8;      // coincident-root merge
constexpr double kZeroTol = 1e-7;       // |lambda| below this is the zero mode
constexpr double kMaxStep = 0.05;       // keeps quintic interpolation error tiny

double potential_strength(double p) { return (2.0 * p + 1.0) * (p + 1.0); }

double sech2(double t) {
    const double u = 2.0 * std::exp(-std::abs(t)) /
                     (1.0 + std::exp(-2.0 * std::abs(t)));
    return u * u;
}

double shooting_x_max(double power, double a) {
    return std::max(20.0, std::abs(a) + 15.0) / std::min(1.0, power);
}

// Dormand-Prince 5(4) with FSAL on a 2-component system, adaptive steps,
// every accepted node recorded. Integrates from x0 to x1 in either direction.
template <class Rhs>
void dopri5(Rhs&& rhs, double x0, double x1, double y0, double y1_,
            double rtol, std::vector<double>& xs, std::vector<double>& ys,
            std::vector<double>& dys) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                            c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                            b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                            e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double dir = x1 > x0 ? 1.0 : -1.0;
    const double atol = 1e-14;
    double x = x0;
    double y[2] = {y0, y1_};
    double k1[2];
    rhs(x, y, k1);

    xs.clear(); ys.clear(); dys.clear();
    xs.push_back(x); ys.push_back(y[0]); dys.push_back(y[1]);

    double h = dir * std::min(kMaxStep, std::abs(x1 - x0));
    int rejected_in_row = 0;
    while (dir * (x1 - x) > 1e-14 * (1.0 + std::abs(x))) {
        if (dir * (x + h) > dir * x1) h = x1 - x;
        double k2[2], k3[2], k4[2], k5[2], k6[2], k7[2], yt[2], y5[2];

        for (int i = 0; i < 2; ++i) yt[i] = y[i] + h * a21 * k1[i];
        rhs(x + c2 * h, yt, k2);
        for (int i = 0; i < 2; ++i)
            yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(x + c3 * h, yt, k3);
        for (int i = 0; i < 2; ++i)
            yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(x + c4 * h, yt, k4);
        for (int i = 0; i < 2; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] +
                                a54 * k4[i]);
        rhs(x + c5 * h, yt, k5);
        for (int i = 0; i < 2; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                a64 * k4[i] + a65 * k5[i]);
        rhs(x + h, yt, k6);
        for (int i = 0; i < 2; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] +
                                b5 * k5[i] + b6 * k6[i]);
        rhs(x + h, y5, k7);

        double err = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                   e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc =
                atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
            err += (ei / sc) * (ei / sc);
        }
        err = std::sqrt(0.5 * err);

        if (err <= 1.0) {
            x += h;
            y[0] = y5[0];
            y[1] = y5[1];
            k1[0] = k7[0];
            k1[1] = k7[1];
            xs.push_back(x);
            ys.push_back(y[0]);
            dys.push_back(y[1]);
            rejected_in_row = 0;
        } else if (++rejected_in_row > 60) {
            throw integrator_failure("step control stalled");
        }
        const double fac =
            std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
        h *= fac;
        if (std::abs(h) > kMaxStep) h = dir * kMaxStep;
        if (std::abs(h) < 1e-13)
            throw integrator_failure("step size underflow");
    }
}

// two-point quintic Taylor interpolation
struct Quintic {
    double x0, h;
    double f0, d0, s0; // value, first, second derivative at left node
    double f1, d1, s1; // at right node

    double value(double x) const {
        const double t = (x - x0) / h;
        const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
        const double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
        const double H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
        const double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
        const double K0 = 10 * t3 - 15 * t4 + 6 * t5;
        const double K1 = -4 * t3 + 7 * t4 - 3 * t5;
        const double K2 = 0.5 * (t3 - 2 * t4 + t5);
        return f0 * H0 + h * d0 * H1 + h * h * s0 * H2 + f1 * K0 +
               h * d1 * K1 + h * h * s1 * K2;
    }
    double derivative(double x) const {
        const double t = (x - x0) / h;
        const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
        const double H0 = -30 * t2 + 60 * t3 - 30 * t4;
        const double H1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
        const double H2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
        const double K0 = 30 * t2 - 60 * t3 + 30 * t4;
        const double K1 = -12 * t2 + 28 * t3 - 15 * t4;
        const double K2 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
        return (f0 * H0 + h * d0 * H1 + h * h * s0 * H2 + f1 * K0 +
                h * d1 * K1 + h * h * s1 * K2) /
               h;
    }
};

} // namespace

std::pair<double, double> DecayingSolution::eval_w(double x) const {
    const double lo = xs_.front(), hi = xs_.back();
    if (x < lo - 1e-9 || x > hi + 1e-9)
        throw error("evaluation outside the integrated window");
    x = std::clamp(x, lo, hi);
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = it == xs_.begin() ? 0 : (it - xs_.begin()) - 1;
    if (i + 1 >= xs_.size()) i = xs_.size() - 2;
    const Quintic q{xs_[i],      xs_[i + 1] - xs_[i],
                    ws_[i],      dws_[i],
                    d2ws_[i],    ws_[i + 1],
                    dws_[i + 1], d2ws_[i + 1]};
    return {q.value(x), q.derivative(x)};
}

double DecayingSolution::w(double x) const { return eval_w(x).first; }
double DecayingSolution::w_prime(double x) const { return eval_w(x).second; }

double DecayingSolution::v(double x) const {
    return w(x) * std::exp(-s_ * x);
}

double DecayingSolution::v_prime(double x) const {
    const auto [wx, dwx] = eval_w(x);
    return (dwx - s_ * wx) * std::exp(-s_ * x);
}

std::pair<double, double> DecayingSolution::eval(double x) const {
    const auto [wx, dwx] = eval_w(x);
    const double f = std::exp(-s_ * x);
    return {wx * f, (dwx - s_ * wx) * f};
}

std::vector<std::pair<double, double>>
DecayingSolution::sign_change_brackets() const {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i + 1 < xs_.size(); ++i)
        if (ws_[i] == 0.0 || (ws_[i] > 0) != (ws_[i + 1] > 0))
            out.emplace_back(xs_[i], xs_[i + 1]);
    return out;
}

DecayingSolution decaying_solution(double power, double lambda, double x_left,
                                   double x_right) {
    if (!(power > 0.0)) throw error("nonlinearity exponent must be positive");
    if (!(lambda < 1.0 - kContinuumGap)) {
        std::ostringstream os;
        os << "lambda = " << lambda << " too close to the continuum edge";
        throw lambda_in_continuum(os.str());
    }
    DecayingSolution ds;
    ds.power_ = power;
    ds.lambda_ = lambda;
    ds.s_ = std::sqrt(1.0 - lambda);
    const double c = potential_strength(power);
    const double s = ds.s_;
    auto rhs = [c, s, power](double x, const double y[2], double dy[2]) {
        dy[0] = y[1];
        dy[1] = 2.0 * s * y[1] - c * sech2(power * x) * y[0];
    };
    dopri5(rhs, x_right, x_left, 1.0, 0.0, 1e-12, ds.xs_, ds.ws_, ds.dws_);
    std::reverse(ds.xs_.begin(), ds.xs_.end());
    std::reverse(ds.ws_.begin(), ds.ws_.end());
    std::reverse(ds.dws_.begin(), ds.dws_.end());
    ds.d2ws_.resize(ds.xs_.size());
    for (std::size_t i = 0; i < ds.xs_.size(); ++i)
        ds.d2ws_[i] = 2.0 * s * ds.dws_[i] -
                      c * sech2(power * ds.xs_[i]) * ds.ws_[i];
    return ds;
}

DecayingSolution decaying_solution(double power, double lambda) {
    const double xm = shooting_x_max(power, 0.0);
    return decaying_solution(power, lambda, -xm, xm);
}

namespace detail {

RawSolution integrate_linearized(double power, double lambda, double x_from,
                                 double x_to, double v0, double dv0,
                                 double rtol) {
    const double c = potential_strength(power);
    auto rhs = [c, lambda, power](double x, const double y[2], double dy[2]) {
        dy[0] = y[1];
        dy[1] = (1.0 - lambda - c * sech2(power * x)) * y[0];
    };
    RawSolution r;
    dopri5(rhs, x_from, x_to, v0, dv0, rtol, r.xs, r.vs, r.dvs);
    return r;
}

double brent(const std::function<double(double)>& f, double a, double b,
             double fa, double fb, double xtol, int max_iter) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0))
        throw root_refinement_failure("root bracket does not change sign");
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * 1e-16 * std::abs(b) + 0.5 * xtol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q),
                                   std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol1 ? d : (xm > 0 ? tol1 : -tol1);
        fb = f(b);
        if ((fb > 0) == (fc > 0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    throw root_refinement_failure("bracketed refinement did not converge");
}

} // namespace detail

MatchingValues matching_values(const StarGraph& g, double a, double lambda) {
    const double xm = shooting_x_max(g.power, a);
    const double xl = -std::abs(a) - 0.25;
    const DecayingSolution ds =
        decaying_solution(g.power, lambda, std::min(xl, -0.25), xm);
    MatchingValues m;
    std::tie(m.v_a, m.dv_a) = ds.eval(a);
    std::tie(m.v_minus_a, m.dv_minus_a) = ds.eval(-a);
    m.case_c = m.v_minus_a * m.dv_a + m.v_a * m.dv_minus_a;
    return m;
}

double determinant(const StarGraph& g, double a, double lambda) {
    const MatchingValues m = matching_values(g, a, lambda);
    double prod = 1.0;
    for (int j = 0; j < g.n_edges; ++j)
        prod *= g.alpha_pow(j, 1.0 / g.power);
    const int K = g.n_incoming, N = g.n_edges;
    return prod * g.incoming_weight_sum() * std::pow(m.v_a, K - 1) *
           std::pow(m.v_minus_a, N - K - 1) * m.case_c;
}

const char* match_case_name(MatchCase c) {
    switch (c) {
        case MatchCase::A: return "A";
        case MatchCase::B: return "B";
        case MatchCase::C: return "C";
        default: return "combined";
    }
}

SpectrumWindow default_window(double power) {
    return SpectrumWindow{-(1.0 + potential_strength(power)),
                          1.0 - 2.0 * kContinuumGap};
}

namespace {

struct CaseFunctions {
    double fa, fb, fc; // sign-equivalents of v(a), v(-a), case (c)
};

// All three matching conditions from one integration, expressed through the
// bounded variable w so that no exponential scale factors enter the signs.
CaseFunctions case_functions(double power, double a, double lambda,
                             double xm) {
    const double xl = std::min(-std::abs(a) - 0.25, -0.25);
    const DecayingSolution ds = decaying_solution(power, lambda, xl, xm);
    const auto [wa, dwa] = std::pair{ds.w(a), ds.w_prime(a)};
    const auto [wma, dwma] = std::pair{ds.w(-a), ds.w_prime(-a)};
    const double s = ds.decay_rate();
    CaseFunctions f;
    f.fa = wa;
    f.fb = wma;
    f.fc = wma * (dwa - s * wa) + wa * (dwma - s * wma);
    return f;
}

std::vector<double> scan_roots(const std::function<double(double)>& f,
                               double lo, double hi, int n) {
    std::vector<double> roots;
    std::vector<double> vals(n);
    const double cell = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) vals[i] = f(lo + i * cell);
    for (int i = 0; i + 1 < n; ++i) {
        const double x0 = lo + i * cell, x1 = x0 + cell;
        if (vals[i] == 0.0) {
            roots.push_back(x0);
        } else if ((vals[i] > 0) != (vals[i + 1] > 0)) {
            roots.push_back(
                detail::brent(f, x0, x1, vals[i], vals[i + 1], 1e-12));
        }
    }
    if (!vals.empty() && vals.back() == 0.0) roots.push_back(hi);
    return roots;
}

} // namespace

SpectralReport find_point_spectrum(const StarGraph& g, double a) {
    return find_point_spectrum(g, a, default_window(g.power));
}

SpectralReport find_point_spectrum(const StarGraph& g, double a,
                                   SpectrumWindow window, int grid_points) {
    if (!(window.lo < window.hi) || !(window.hi < 1.0 - kContinuumGap) ||
        grid_points < 16)
        throw window_invalid("need lo < hi < 1 - 1e-6 and a sane grid");

    const double xm = shooting_x_max(g.power, a);
    const int K = g.n_incoming, N = g.n_edges;

    struct CaseSpec {
        MatchCase tag;
        int multiplicity;
        std::function<double(double)> f;
    };
    std::vector<CaseSpec> cases;
    const double p = g.power;
    if (K - 1 > 0)
        cases.push_back({MatchCase::A, K - 1, [p, a, xm](double lam) {
                             return case_functions(p, a, lam, xm).fa;
                         }});
    if (N - K - 1 > 0)
        cases.push_back({MatchCase::B, N - K - 1, [p, a, xm](double lam) {
                             return case_functions(p, a, lam, xm).fb;
                         }});
    cases.push_back({MatchCase::C, 1, [p, a, xm](double lam) {
                         return case_functions(p, a, lam, xm).fc;
                     }});

    struct RawRoot {
        double lambda;
        int multiplicity;
        MatchCase tag;
    };
    std::vector<RawRoot> raw;
    const double cell = (window.hi - window.lo) / (grid_points - 1);
    for (const CaseSpec& cs : cases) {
        std::vector<double> roots =
            scan_roots(cs.f, window.lo, window.hi, grid_points);
        // two roots of one condition in adjacent cells: rescan 10x denser
        bool crowded = false;
        for (std::size_t i = 0; i + 1 < roots.size(); ++i)
            if (roots[i + 1] - roots[i] < 2.0 * cell) crowded = true;
        if (crowded)
            roots = scan_roots(cs.f, window.lo, window.hi, 10 * grid_points);
        for (double r : roots) raw.push_back({r, cs.multiplicity, cs.tag});
    }
    std::sort(raw.begin(), raw.end(),
              [](const RawRoot& x, const RawRoot& y) {
                  return x.lambda < y.lambda;
              });

    SpectralReport rep;
    for (std::size_t i = 0; i < raw.size();) {
        std::size_t j = i + 1;
        double lam = raw[i].lambda;
        int mult = raw[i].multiplicity;
        bool mixed = false;
        while (j < raw.size() && raw[j].lambda - raw[i].lambda <= kMergeTol) {
            mult += raw[j].multiplicity;
            mixed |= raw[j].tag != raw[i].tag;
            ++j;
        }
        rep.entries.push_back(
            {lam, mult, mixed ? MatchCase::Combined : raw[i].tag});
        i = j;
    }
    for (const SpectralEntry& e : rep.entries) {
        if (e.lambda < -kZeroTol)
            rep.morse_index += e.multiplicity;
        else if (e.lambda <= kZeroTol)
            rep.zero_multiplicity += e.multiplicity;
    }
    return rep;
}

double scalar_ground_state(double power) {
    const SpectrumWindow win = default_window(power);
    const double xm = shooting_x_max(power, 0.0);
    auto even_condition = [power, xm](double lam) {
        const DecayingSolution ds = decaying_solution(power, lam, -0.25, xm);
        return ds.w_prime(0.0) - ds.decay_rate() * ds.w(0.0);
    };
    const int n = 600;
    const double lo = win.lo, hi = -1e-4;
    double prev = even_condition(lo);
    for (int i = 1; i < n; ++i) {
        const double lam = lo + i * (hi - lo) / (n - 1);
        const double cur = even_condition(lam);
        if (prev == 0.0) return lo + (i - 1) * (hi - lo) / (n - 1);
        if ((prev > 0) != (cur > 0))
            return detail::brent(even_condition,
                                 lo + (i - 1) * (hi - lo) / (n - 1), lam, prev,
                                 cur, 1e-12);
        prev = cur;
    }
    throw root_refinement_failure("no even bound state found in the window");
}

std::vector<std::pair<double, double>> zero_path(double power, double lo,
                                                 double hi, int n_samples) {
    if (lo > hi || n_samples < 1 || (lo == hi && n_samples > 1))
        throw window_invalid("zero path needs lo <= hi and samples");
    const double xm = shooting_x_max(power, 0.0);
    std::vector<std::pair<double, double>> path;
    path.reserve(n_samples);
    for (int k = 0; k < n_samples; ++k) {
        const double lam =
            n_samples == 1 ? lo : lo + k * (hi - lo) / (n_samples - 1);
        const DecayingSolution ds = decaying_solution(power, lam, -xm, xm);
        const auto brackets = ds.sign_change_brackets();
        if (brackets.empty()) {
            std::ostringstream os;
            os << "decaying solution has no zero at lambda = " << lam;
            throw no_zero_found(os.str());
        }
        auto f = [&ds](double x) { return ds.w(x); };
        const auto [bl, br] = brackets.front();
        const double x0 = detail::brent(f, bl, br, ds.w(bl), ds.w(br), 1e-12);
        path.emplace_back(lam, x0);
    }
    return path;
}

double closed_form_w(double x, double lambda) {
    const double s = std::sqrt(1.0 - lambda);
    return (3.0 - lambda + 3.0 * s * std::tanh(x) - 3.0 * sech2(x)) /
           (3.0 - lambda + 3.0 * s);
}

double closed_form_v(double x, double lambda) {
    const double s = std::sqrt(1.0 - lambda);
    return closed_form_w(x, lambda) * std::exp(-s * x);
}

double closed_form_lambda1(double a) {
    const double t = std::tanh(std::abs(a));
    return -1.5 * t * (t + std::sqrt(1.0 + 3.0 * sech2(a)));
}

} // namespace nlsg
