#pragma once

#include <cstdint>
#include <vector>

namespace lecam {

// Variance-stabilizing root transform t(x) = 2 sgn(x) sqrt(|x|), with
// sgn(0) = 0 so t stays odd and invertible.
double root_transform(double x);
double root_transform_inverse(double y);  // sgn(y) y^2 / 4

double normal_pdf(double z);
double normal_cdf(double z);

// Inverse normal CDF: rational approximation plus one Newton step against
// normal_cdf. u is clamped to [1e-300, 1 - 1e-16]; the optional flag reports
// that saturation happened.
double normal_quantile(double u, bool* saturated = nullptr);

// log P{Bin(m, 1/2) = j}; relative error of the mass below ~1e-12 whenever
// the mass is representable, up to m = 2^20. Exactly symmetric in j <-> m-j.
double log_binom_half_pmf(std::int64_t m, std::int64_t j);

// log P{Poisson(lambda) = j} with the same uniform-accuracy construction.
double log_poisson_pmf(double lambda, std::int64_t j);

// F_m: CDF of Bin(m,1/2) + U with U uniform on [-1/2, 1/2); F_0 is the
// uniform distribution on [-1/2, 1/2). Continuous piecewise linear with
// knots at j +- 1/2.
double fm_cdf(std::int64_t m, double x);

// Inverse of F_m on (0,1): scans the knot cumulative masses from the nearer
// tail, then inverts the linear piece exactly.
double fm_quantile(std::int64_t m, double u);

// One analytic piece of a transformed-count density.
struct CouplingPiece {
    double lo = 0.0;
    double hi = 0.0;
    double log_coef = 0.0;  // density on [lo,hi) is exp(log_coef) * base(z)
    std::int64_t j = 0;     // the underlying integer count
};

// Exact density of a root-transformed Poisson (g~_lambda) or quantile-coupled
// binomial (g~_{m,p}) variable: piecewise smooth with known breakpoints.
class CouplingDensity {
public:
    enum class Kind { poisson_root, poisson_root_shifted, binomial_coupled };

    static CouplingDensity poisson_root(double lambda, bool shifted = false);
    static CouplingDensity binomial_coupled(std::int64_t m, double p);

    Kind kind() const { return kind_; }
    double lambda() const { return lambda_; }
    std::int64_t m() const { return m_; }
    double p() const { return p_; }

    const std::vector<CouplingPiece>& pieces() const { return pieces_; }

    double pdf(double z) const;
    double piece_mass(std::size_t i) const;  // closed form
    double total_mass() const;
    double mean() const;  // by piecewise quadrature

    // Interior knots where the density changes analytic piece (plus the kink
    // of |z| at 0 for the root transforms). Finite values only, ascending.
    std::vector<double> breakpoints() const;

    // True when every piece coefficient is exactly 1 and the pieces tile the
    // whole line, i.e. the density is exactly the standard normal. Holds for
    // g~_{m,1/2} and g~_{0,p} by construction.
    bool is_exactly_standard_normal() const;

private:
    Kind kind_ = Kind::poisson_root;
    double lambda_ = 0.0;
    std::int64_t m_ = 0;
    double p_ = 0.5;
    std::vector<CouplingPiece> pieces_;
};

struct TusnadyRow {
    std::int64_t j = 0;
    double u = 0.0;         // 2 (j - 1/2 - m/2) / sqrt(m)
    double z = 0.0;         // Phi^{-1}(F_m(j - 1/2))
    bool saturated = false;  // z hit the quantile clamp (deep tail only)
};

struct TusnadyBoundaryTable {
    std::int64_t m = 0;
    std::vector<TusnadyRow> rows;  // j = 1..m
};

// Standardized coupling boundaries matching binomial cell masses to normal
// cell masses: Phi(z_j) = F_m(j - 1/2). Exactly antisymmetric:
// z_j == -z_{m+1-j} bit for bit.
TusnadyBoundaryTable tusnady_boundaries(std::int64_t m);

}  // namespace lecam
