#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "lecam/dyadic.hpp"
#include "lecam/rng.hpp"

namespace lecam {

enum class DensityFamily { piecewise_constant, linear, fourier, haar_bump };

struct ClassNorms {
    double lipschitz = 0.0;  // sup |f(x)-f(y)|/|x-y|^beta; +inf for step families
    double sobolev = 0.0;    // sum_{0<|n|<=n_max} n^{2 alpha} |c_n|^2
};

// A density on [0,1), normalized to integrate to 1, with exact cell integrals
// and a certified lower bound eps0 > 0. Immutable after construction.
class DensityModel {
public:
    static DensityModel piecewise_constant(int level, std::vector<double> values,
                                           double eps0);
    static DensityModel linear(double a, double b, double eps0);  // f(x) = a + b x
    // coeffs[n] = c_n for n = 0..n_max; c_{-n} = conj(c_n) is implied.
    static DensityModel fourier(std::vector<std::complex<double>> coeffs, double eps0);
    // f = 1 + amplitude * phi_{k,l}
    static DensityModel haar_bump(int k, std::int64_t l, double amplitude, double eps0);

    DensityFamily family() const { return family_; }
    double eps0() const { return eps0_; }

    double operator()(double x) const;

    // Exact integral of f over I_{k,l} (the integral, not the mean).
    double integrate_cell(const DyadicIndex& idx) const;
    // Exact integral of f over [lo, hi) within [0,1].
    double integrate(double lo, double hi) const;
    // Exact integral of f^2 over [lo, hi).
    double integrate_sq(double lo, double hi) const;
    // Integral of (f - c)^2 over the cell, exact.
    double integrate_sq_dev(const DyadicIndex& idx, double c) const;

    // f_{k,l} = 2^k Int_{I_{k,l}} f
    double cell_mean(const DyadicIndex& idx) const;
    // h_{k,l} = 2^k Int_{I_{k,l}} sqrt(f); closed form except for the fourier
    // family, which uses adaptive quadrature with relative error <= 1e-10.
    double sqrt_cell_mean(const DyadicIndex& idx) const;

    // p_{k,2l} = Int_{I_{k,2l}} f / Int_{I_{k-1,l}} f for a parent at level k-1.
    double split_probability(const DyadicIndex& parent) const;

    double cdf(double x) const;
    double quantile(double u) const;  // inverse CDF, u in (0,1)

    // i.i.d. draws by inverse CDF, sorted ascending.
    std::vector<double> sample_points(std::size_t count, CounterStream& stream) const;

    ClassNorms class_norms(double beta, double alpha, int n_max) const;

    // family parameters (for reports / serialization)
    int pc_level() const { return pc_level_; }
    const std::vector<double>& pc_values() const { return pc_values_; }
    double linear_a() const { return lin_a_; }
    double linear_b() const { return lin_b_; }
    const std::vector<std::complex<double>>& fourier_coeffs() const { return coeffs_; }
    int bump_level() const { return bump_.level; }
    std::int64_t bump_pos() const { return bump_.pos; }
    double bump_amplitude() const { return bump_amp_; }

private:
    DensityModel() = default;
    void validate(double min_exact) const;

    DensityFamily family_ = DensityFamily::linear;
    double eps0_ = 0.0;

    int pc_level_ = 0;
    std::vector<double> pc_values_;
    std::vector<double> pc_prefix_;  // prefix masses for quantile lookup

    double lin_a_ = 1.0;
    double lin_b_ = 0.0;

    std::vector<std::complex<double>> coeffs_;     // c_0..c_N
    std::vector<std::complex<double>> sq_coeffs_;  // coefficients of f^2, d_0..d_{2N}

    DyadicIndex bump_{0, 0};
    double bump_amp_ = 0.0;
};

// A realized Poisson process sample: N and the sorted points.
struct PointProcessSample {
    std::int64_t count = 0;
    std::vector<double> points;  // sorted ascending, all in [0,1)
};

// Fixed-size i.i.d. sample (order preserved as drawn).
struct FixedSample {
    std::int64_t n = 0;
    std::vector<double> points;
};

}  // namespace lecam
