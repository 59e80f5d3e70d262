#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lecam/exec.hpp"

namespace lecam {

class DensityModel;

// Index of the dyadic cell I_{k,l} = [l/2^k, (l+1)/2^k).
struct DyadicIndex {
    int level = 0;
    std::int64_t pos = 0;

    bool operator==(const DyadicIndex&) const = default;
    auto operator<=>(const DyadicIndex&) const = default;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

std::int64_t cells_at(int level);  // 2^level, throws if level < 0 or > 62
bool index_valid(const DyadicIndex& idx);
void require_valid(const DyadicIndex& idx);

// [l/2^k, (l+1)/2^k); cells at a fixed level partition [0,1).
Interval cell(const DyadicIndex& idx);

// Haar function phi_{k,l}: +2^{k/2} on the left half-cell, -2^{k/2} on the
// right half-cell, 0 outside I_{k,l}.
double haar_eval(const DyadicIndex& idx, double x);

// Piecewise-constant function on the level-k dyadic grid.
struct StepFunction {
    int level = 0;
    std::vector<double> values;  // 2^level entries, value on each I_{level,l}

    double at(double x) const;
    double integral() const;           // over [0,1)
    double mean() const { return integral(); }
};

struct HaarCoefficientTable {
    int k_min = 0;
    int k_max = 0;
    std::map<DyadicIndex, double> coefficients;
};

// theta_{k,l} = integral of f * phi_{k,l}, from exact cell integrals.
double haar_coefficient(const DensityModel& f, const DyadicIndex& idx);

HaarCoefficientTable haar_coefficient_table(const DensityModel& f, int k_min, int k_max);

// Piecewise average of f at resolution k: value on I_{k,l} is 2^k Int_{I} f.
StepFunction piecewise_average(const DensityModel& f, int k);

// Sum over l of |theta_{k,l}|^p at one level (exact cell integrals). The
// parallel path splits the level into fixed blocks and reduces them in block
// order, so both policies give the same bits.
double level_theta_power_sum(const DensityModel& f, int k, double p,
                             Exec policy = Exec::parallel);

// Tail of the Besov norm from level k0, truncated at k_max:
//   [ sum_{k=k0}^{k_max} { 2^{k(alpha+1/2-1/p)} (sum_l |theta|^p)^{1/p} }^q ]^{1/q}
// Only (p,q) in {(2,2),(4,4)} are supported.
double besov_tail_norm(const DensityModel& f, double alpha, double p, double q,
                       int k0, int k_max = 20, Exec policy = Exec::parallel);

// Full norm: adds the |Int f|^q term to the tail from level 0.
double besov_norm(const DensityModel& f, double alpha, double p, double q,
                  int k_max = 20, Exec policy = Exec::parallel);

}  // namespace lecam
