#include "lecam/quadrature.hpp"

#include <cmath>
#include <vector>

namespace lecam {

namespace {

// Kronrod nodes on [-1, 1] (positive half) and weights; the embedded 7-point
// Gauss rule uses every other node.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

}  // namespace

QuadResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);

    const double fc = f(c);
    double kron = kWgk[7] * fc;
    double gauss = kWg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double x = h * kXgk[i];
        const double s = f(c - x) + f(c + x);
        kron += kWgk[i] * s;
        if (i % 2 == 1) gauss += kWg[i / 2] * s;
    }
    kron *= h;
    gauss *= h;

    QuadResult r;
    r.value = kron;
    r.error = std::abs(kron - gauss);
    r.evals = 15;
    return r;
}

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a,
                              double b, double abs_tol, double rel_tol,
                              int max_depth) {
    struct Seg {
        double a, b, tol;
        int depth;
    };

    QuadResult total;
    if (!(b > a)) return total;

    std::vector<Seg> stack;
    stack.push_back({a, b, abs_tol, 0});
    while (!stack.empty()) {
        const Seg s = stack.back();
        stack.pop_back();
        QuadResult panel = gk15(f, s.a, s.b);
        total.evals += panel.evals;
        const double want = std::max(s.tol, rel_tol * std::abs(panel.value));
        if (panel.error <= want || s.depth >= max_depth ||
            (s.b - s.a) <= 8.0 * std::abs(s.b) * 1e-16) {
            total.value += panel.value;
            total.error += panel.error;
        } else {
            const double m = 0.5 * (s.a + s.b);
            stack.push_back({s.a, m, 0.5 * s.tol, s.depth + 1});
            stack.push_back({m, s.b, 0.5 * s.tol, s.depth + 1});
        }
    }
    return total;
}

}  // namespace lecam
