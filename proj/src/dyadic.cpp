#include "lecam/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lecam/density_model.hpp"

namespace lecam {

std::int64_t cells_at(int level) {
    if (level < 0 || level > 62)
        throw std::invalid_argument("dyadic level out of range: " + std::to_string(level));
    return std::int64_t{1} << level;
}

bool index_valid(const DyadicIndex& idx) {
    return idx.level >= 0 && idx.level <= 62 && idx.pos >= 0 &&
           idx.pos < (std::int64_t{1} << idx.level);
}

void require_valid(const DyadicIndex& idx) {
    if (!index_valid(idx))
        throw std::invalid_argument("invalid dyadic index (k=" + std::to_string(idx.level) +
                                    ", l=" + std::to_string(idx.pos) + ")");
}

Interval cell(const DyadicIndex& idx) {
    require_valid(idx);
    const double w = std::ldexp(1.0, -idx.level);
    return {static_cast<double>(idx.pos) * w, static_cast<double>(idx.pos + 1) * w};
}

double haar_eval(const DyadicIndex& idx, double x) {
    require_valid(idx);
    if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("haar_eval: x outside [0,1)");
    const Interval I = cell(idx);
    if (x < I.lo || x >= I.hi) return 0.0;
    const double amp = std::exp2(0.5 * idx.level);
    const double mid = 0.5 * (I.lo + I.hi);
    return x < mid ? amp : -amp;
}

double StepFunction::at(double x) const {
    if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("StepFunction::at: x outside [0,1)");
    const auto idx = static_cast<std::size_t>(std::floor(std::ldexp(x, level)));
    return values[idx];
}

double StepFunction::integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return std::ldexp(s, -level);
}

double haar_coefficient(const DensityModel& f, const DyadicIndex& idx) {
    require_valid(idx);
    const DyadicIndex left{idx.level + 1, 2 * idx.pos};
    const DyadicIndex right{idx.level + 1, 2 * idx.pos + 1};
    return std::exp2(0.5 * idx.level) * (f.integrate_cell(left) - f.integrate_cell(right));
}

HaarCoefficientTable haar_coefficient_table(const DensityModel& f, int k_min, int k_max) {
    if (k_min < 0 || k_max < k_min)
        throw std::invalid_argument("haar_coefficient_table: bad level range");
    HaarCoefficientTable t{k_min, k_max, {}};
    for (int k = k_min; k <= k_max; ++k)
        for (std::int64_t l = 0; l < cells_at(k); ++l)
            t.coefficients[{k, l}] = haar_coefficient(f, {k, l});
    return t;
}

StepFunction piecewise_average(const DensityModel& f, int k) {
    StepFunction s;
    s.level = k;
    const std::int64_t n = cells_at(k);
    s.values.resize(static_cast<std::size_t>(n));
    for (std::int64_t l = 0; l < n; ++l)
        s.values[static_cast<std::size_t>(l)] = f.cell_mean({k, l});
    return s;
}

namespace {

double theta_block_sum(const DensityModel& f, int k, double p, std::int64_t lo,
                       std::int64_t hi) {
    const double amp = std::exp2(0.5 * k);
    double sum = 0.0, comp = 0.0;  // Kahan, the deep levels have ~1e9 cells
    for (std::int64_t l = lo; l < hi; ++l) {
        const DyadicIndex left{k + 1, 2 * l};
        const DyadicIndex right{k + 1, 2 * l + 1};
        const double theta = amp * (f.integrate_cell(left) - f.integrate_cell(right));
        const double term = p == 2.0 ? theta * theta
                                     : theta * theta * theta * theta;  // p = 4
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace

double level_theta_power_sum(const DensityModel& f, int k, double p, Exec policy) {
    const std::int64_t n = cells_at(k);
    const std::int64_t block = std::int64_t{1} << 16;
    const std::int64_t nblocks = (n + block - 1) / block;
    std::vector<double> partial(static_cast<std::size_t>(nblocks));
    for_each_index(policy, nblocks, [&](std::size_t b) {
        const std::int64_t lo = static_cast<std::int64_t>(b) * block;
        const std::int64_t hi = std::min(n, lo + block);
        partial[b] = theta_block_sum(f, k, p, lo, hi);
    });
    double sum = 0.0, comp = 0.0;
    for (double v : partial) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

namespace {

void require_supported_pq(double p, double q) {
    const bool ok = (p == 2.0 && q == 2.0) || (p == 4.0 && q == 4.0);
    if (!ok) throw std::invalid_argument("besov norms support only (p,q) in {(2,2),(4,4)}");
}

}  // namespace

double besov_tail_norm(const DensityModel& f, double alpha, double p, double q,
                       int k0, int k_max, Exec policy) {
    require_supported_pq(p, q);
    if (k0 < 0 || k_max < k0) throw std::invalid_argument("besov_tail_norm: bad levels");
    double acc = 0.0;
    for (int k = k0; k <= k_max; ++k) {
        const double inner = level_theta_power_sum(f, k, p, policy);  // sum |theta|^p
        // {2^{k(alpha+1/2-1/p)} inner^{1/p}}^q with q == p
        acc += std::exp2(k * (alpha + 0.5 - 1.0 / p) * q) * inner;
    }
    return std::pow(acc, 1.0 / q);
}

double besov_norm(const DensityModel& f, double alpha, double p, double q, int k_max,
                  Exec policy) {
    require_supported_pq(p, q);
    const double tail = besov_tail_norm(f, alpha, p, q, 0, k_max, policy);
    const double mass = f.integrate(0.0, 1.0);  // |Int f| = 1 for a density
    return std::pow(std::pow(std::abs(mass), q) + std::pow(tail, q), 1.0 / q);
}

}  // namespace lecam
