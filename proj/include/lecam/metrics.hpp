#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lecam/constants.hpp"
#include "lecam/couplings.hpp"
#include "lecam/density_model.hpp"
#include "lecam/exec.hpp"

namespace lecam {

// N(mean, 1)
struct UnitGaussian {
    double mean = 0.0;
};

// Squared Hellinger distance by piecewise adaptive quadrature on the union
// of the breakpoint partitions; tails beyond the quadrature window are
// bounded analytically through Cauchy-Schwarz. Throws on quadrature failure.
double hellinger_sq_quadrature(const CouplingDensity& d, const UnitGaussian& g);
double hellinger_sq_quadrature(const CouplingDensity& d1, const CouplingDensity& d2);

// Same, with the exact short-circuit: a coupling density whose pieces are all
// exactly phi_0 (p = 1/2 or m = 0) is the standard normal, so the Gaussian
// closed form applies.
double hellinger_sq(const CouplingDensity& d, const UnitGaussian& g);
double hellinger_sq(const CouplingDensity& d1, const CouplingDensity& d2);

struct GaussianHellinger {
    double exact = 0.0;       // 2 (1 - e^{-(mu1-mu2)^2/8})
    double paper_bound = 0.0;  // (mu1 - mu2)^2 / 4, always >= exact
};
GaussianHellinger gaussian_hellinger_sq(double mu1, double mu2);

// Evaluated left/right sides of an inequality over a grid, with provenance.
struct BoundReport {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    double ratio_sup = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> pinned_constant;
    std::uint64_t seed = 0;
    std::map<std::string, double> scalars;
    std::map<std::string, std::string> meta;
};

// lambda * H^2(g~_lambda, phi_{2 sqrt(lambda)}) across a lambda grid, with the
// Remark-4 shifted variant and an off-center Eq (4.3) evaluation.
BoundReport thm4_sweep(const std::vector<double>& lambdas, const PinnedConstants& pc,
                       Exec policy = Exec::parallel);

// H^2(g~_{m,p}, phi_b) against the Eq (5.2) and Eq (5.3) right-hand sides.
BoundReport thm5_sweep(const std::vector<std::int64_t>& ms, const std::vector<double>& ps,
                       Exec policy = Exec::parallel);

struct Thm3Terms {
    double sum_theta2 = 0.0;  // sum_k 2^k sum_l theta^2
    double sum_theta4 = 0.0;  // sum_k 2^{3k} sum_l theta^4
    double term1_unit = 0.0, term2_unit = 0.0, term3_unit = 0.0, total_unit = 0.0;
    double term1 = 0.0, term2 = 0.0, term3 = 0.0, total = 0.0;  // pinned constants
};
Thm3Terms thm3_bound(const DensityModel& f, std::int64_t n, int k0, int k_max,
                     const PinnedConstants& pc, Exec policy = Exec::parallel);

struct DecompositionCell {
    int k = 0;
    std::int64_t l = 0;    // parent cell at level k-1
    double mean_m = 0.0;   // conditioning count, averaged over draws
    double p = 0.0;        // split probability
    double mean_mu = 0.0;  // mean sqrt(m) (2p - 1)
    double beta = 0.0;     // sqrt(lambda_{k-1,l}) (2p - 1)
    double beta_star = 0.0;
    double mean_h2 = 0.0;
};

struct DecompositionLevel {
    int k = 0;
    double mean_g = 0.0, se_g = 0.0;          // Poisson-side expectation
    double mean_gstar = 0.0, se_gstar = 0.0;  // white-noise-side expectation
    double surrogate = 0.0;                   // (mean_g + mean_gstar)/2
    double se = 0.0;
    std::vector<DecompositionCell> cells;
};

struct DecompositionEstimate {
    double base_term = 0.0;  // exact product-form Hellinger at level k0
    std::vector<DecompositionLevel> levels;
    double detail_total = 0.0;
    double detail_se = 0.0;
    double total = 0.0;
    double total_se = 0.0;
    int replicates = 0;
    std::uint64_t seed = 0;
};

// The Eq (3.3) decomposition: exact base term plus the computable surrogate
// (E_{g*} + E_g)/2 for the per-level detail terms, which over-estimates the
// sqrt(g g*)-weighted truth.
DecompositionEstimate decomposition_estimate(const DensityModel& f, std::int64_t n,
                                             int k0, int k1, int replicates,
                                             std::uint64_t seed,
                                             Exec policy = Exec::parallel);

// Eq (A.1) and the Eq (5.10) consequence at piece midpoints.
BoundReport tusnady_check(const std::vector<std::int64_t>& ms, Exec policy = Exec::parallel);

// Lemma 1 (A.4)/(A.5) on every cell up to `levels`, Lemma 2 with the given c,
// Lemma 3 by exact series.
BoundReport lemma_checks(const DensityModel& f, int levels,
                         const std::vector<double>& lambdas, double c, int k0,
                         int k_max, Exec policy = Exec::parallel);

// E (sqrt(X_lambda) - sqrt(lambda))^4, exact Poisson series (Lemma 3).
double poisson_sqrt_fourth_moment(double lambda);

// 1 - E sqrt(X_lambda / lambda), exact series (the Remark 4 shift bound).
double poisson_root_shift_bound(double lambda);

// sqrt(n)-scaled Hellinger risk of the histogram estimates along an n grid
// (Eqs 2.15/2.16), with the exact Eq (2.12) decomposition cross-checked.
BoundReport rate_check_215(const DensityModel& f, const std::vector<std::int64_t>& ns,
                           const std::vector<double>& gamma, int replicates,
                           std::uint64_t seed, Exec policy = Exec::parallel);

}  // namespace lecam
