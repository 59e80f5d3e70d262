#pragma once

#include <cstddef>
#include <functional>

namespace lecam {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // conservative estimate of the absolute error
    std::size_t evals = 0;

    QuadResult& operator+=(const QuadResult& o) {
        value += o.value;
        error += o.error;
        evals += o.evals;
        return *this;
    }
};

// One Gauss-Kronrod 15(7) panel on [a, b].
QuadResult gk15(const std::function<double(double)>& f, double a, double b);

// Adaptive bisection on top of GK15. Accepts a panel once its error estimate
// is below max(abs_tol_share, rel_tol * |panel value|); panels that stop
// making progress at depth max_depth contribute their error estimate to the
// result instead of recursing forever.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a,
                              double b, double abs_tol, double rel_tol,
                              int max_depth = 48);

}  // namespace lecam
