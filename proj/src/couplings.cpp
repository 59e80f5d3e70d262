#include "lecam/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "lecam/quadrature.hpp"

namespace lecam {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct KahanSum {
    double s = 0.0, c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
};

// lgamma(x+1) - [x ln x - x + (1/2) ln(2 pi x)] for x >= 1.
double stirling_tail(double x) {
    if (x < 30.0) {
        return std::lgamma(x + 1.0) -
               (x * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi * x));
    }
    const double ix = 1.0 / x, ix2 = ix * ix;
    return ix * (1.0 / 12.0 +
                 ix2 * (-1.0 / 360.0 + ix2 * (1.0 / 1260.0 + ix2 * (-1.0 / 1680.0))));
}

// (1+x) log(1+x) + (1-x) log(1-x), the binary entropy complement; the series
// avoids the cancellation of the linear parts for small x.
double entropy_sym(double x) {
    x = std::abs(x);
    if (x >= 0.5) return (1.0 + x) * std::log1p(x) + (1.0 - x) * std::log1p(-x);
    const double x2 = x * x;
    double term = x2, sum = 0.0;
    for (int k = 1; k < 60; ++k) {
        const double add = term / (k * (2 * k - 1));
        sum += add;
        if (add < 1e-19 * sum) break;
        term *= x2;
    }
    return sum;
}

// (1+d) log(1+d) - d, vanishing to second order at d = 0.
double poisson_dev(double d) {
    if (std::abs(d) >= 0.5) return (1.0 + d) * std::log1p(d) - d;
    double term = d * d, sum = 0.0, sign = 1.0;
    for (int k = 2; k < 80; ++k) {
        const double add = sign * term / (k * (k - 1));
        sum += add;
        if (std::abs(add) < 1e-19 * std::abs(sum)) break;
        term *= d;
        sign = -sign;
    }
    return sum;
}

}  // namespace

double root_transform(double x) {
    if (x == 0.0) return 0.0;
    return x > 0.0 ? 2.0 * std::sqrt(x) : -2.0 * std::sqrt(-x);
}

double root_transform_inverse(double y) {
    if (y == 0.0) return 0.0;
    return y > 0.0 ? 0.25 * y * y : -0.25 * y * y;
}

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

namespace {

// Acklam's rational approximation, |relative error| < 1.15e-9 on the whole
// clamped range; one Newton step against normal_cdf refines it to round-off.
double acklam(double u) {
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;

    if (u < plow) {
        const double q = std::sqrt(-2.0 * std::log(u));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (u > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - u));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = u - 0.5;
    const double r = q * q;
    return q * (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double u, bool* saturated) {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("normal_quantile: u outside (0,1)");
    bool sat = false;
    if (u < 1e-300) {
        u = 1e-300;
        sat = true;
    } else if (u > 1.0 - 1e-16) {
        u = 1.0 - 1e-16;
        sat = true;
    }
    if (saturated) *saturated = sat;

    double x = acklam(u);
    const double pdf = normal_pdf(x);
    if (pdf > 0.0) x -= (normal_cdf(x) - u) / pdf;
    return x;
}

double log_binom_half_pmf(std::int64_t m, std::int64_t j) {
    if (m < 0 || j < 0 || j > m)
        throw std::invalid_argument("log_binom_half_pmf: bad (m, j)");
    if (m == 0) return 0.0;
    if (j == 0 || j == m) return -static_cast<double>(m) * std::numbers::ln2;

    // canonical ordering keeps the result exactly symmetric in j <-> m-j
    const std::int64_t jlo = std::min(j, m - j);
    const std::int64_t jhi = m - jlo;
    const double x = static_cast<double>(jhi - jlo) / static_cast<double>(m);
    const double main = -0.5 * static_cast<double>(m) * entropy_sym(x);
    const double half =
        0.5 * std::log(static_cast<double>(m) /
                       (2.0 * std::numbers::pi * static_cast<double>(jlo) *
                        static_cast<double>(jhi)));
    const double corr = stirling_tail(static_cast<double>(m)) -
                        stirling_tail(static_cast<double>(jlo)) -
                        stirling_tail(static_cast<double>(jhi));
    return main + half + corr;
}

double log_poisson_pmf(double lambda, std::int64_t j) {
    if (!(lambda > 0.0) || j < 0) throw std::invalid_argument("log_poisson_pmf: bad input");
    if (j == 0) return -lambda;
    const double jd = static_cast<double>(j);
    const double d = (jd - lambda) / lambda;
    return -lambda * poisson_dev(d) -
           0.5 * std::log(2.0 * std::numbers::pi * jd) - stirling_tail(jd);
}

namespace {

// P{Bin(m,1/2) <= j}, accumulated from whichever tail is smaller so the
// result keeps relative accuracy there.
double binom_half_cum(std::int64_t m, std::int64_t j) {
    if (j < 0) return 0.0;
    if (j >= m) return 1.0;
    if (2 * j + 1 > m) return 1.0 - binom_half_cum(m, m - j - 1);
    KahanSum acc;
    for (std::int64_t i = 0; i <= j; ++i) acc.add(std::exp(log_binom_half_pmf(m, i)));
    return acc.s;
}

// Direct ascending sum without the mirror shortcut (used where the exact
// mirror identity between the two tails matters).
double binom_half_cum_raw(std::int64_t m, std::int64_t j) {
    KahanSum acc;
    for (std::int64_t i = 0; i <= j; ++i) acc.add(std::exp(log_binom_half_pmf(m, i)));
    return acc.s;
}

}  // namespace

double fm_cdf(std::int64_t m, double x) {
    if (m < 0) throw std::invalid_argument("fm_cdf: m < 0");
    if (m == 0) return std::clamp(x + 0.5, 0.0, 1.0);
    if (x <= -0.5) return 0.0;
    if (x >= static_cast<double>(m) + 0.5) return 1.0;
    auto j = static_cast<std::int64_t>(std::floor(x + 0.5));
    j = std::clamp<std::int64_t>(j, 0, m);
    const double frac = x - (static_cast<double>(j) - 0.5);
    const double v = binom_half_cum(m, j - 1) + std::exp(log_binom_half_pmf(m, j)) * frac;
    return std::clamp(v, 0.0, 1.0);
}

namespace {

double fm_quantile_lower(std::int64_t m, double u) {
    KahanSum cum;
    for (std::int64_t j = 0; j <= m; ++j) {
        const double pmf = std::exp(log_binom_half_pmf(m, j));
        const double prev = cum.s;
        cum.add(pmf);
        if (cum.s >= u) return static_cast<double>(j) - 0.5 + (u - prev) / pmf;
    }
    return static_cast<double>(m) + 0.5;  // unreachable for u <= 1/2
}

}  // namespace

double fm_quantile(std::int64_t m, double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("fm_quantile: u outside (0,1)");
    if (m < 0) throw std::invalid_argument("fm_quantile: m < 0");
    if (m == 0) return u - 0.5;
    if (u > 0.5) return static_cast<double>(m) - fm_quantile_lower(m, 1.0 - u);
    return fm_quantile_lower(m, u);
}

namespace {

struct BoundaryRow {
    double z = 0.0;
    bool saturated = false;
};

// All z_j with Phi(z_j) = F_m(j - 1/2), j = 1..m, in one O(m) sweep through
// the lower tail; the upper half mirrors the lower bit for bit (the pmf and
// the summation order are exactly symmetric, so P(X <= m-j) equals the upper
// sum float for float). Deep-tail cumulative masses below the quantile clamp
// saturate and are flagged. The central boundary of odd m is exactly 0 since
// its two tails coincide.
std::vector<BoundaryRow> coupling_boundaries(std::int64_t m) {
    std::vector<BoundaryRow> rows(static_cast<std::size_t>(m));
    KahanSum cum;  // P(X <= j-1), accumulated mass by mass
    for (std::int64_t j = 1; 2 * j <= m + 1; ++j) {
        cum.add(std::exp(log_binom_half_pmf(m, j - 1)));
        BoundaryRow row;
        if (j - 1 == m - j) {
            row.z = 0.0;
        } else if (cum.s < 1e-300) {
            row.z = normal_quantile(1e-300);
            row.saturated = true;
        } else {
            row.z = normal_quantile(cum.s, &row.saturated);
        }
        rows[static_cast<std::size_t>(j - 1)] = row;
    }
    for (std::int64_t j = (m + 1) / 2 + 1; j <= m; ++j) {
        const BoundaryRow& mirror = rows[static_cast<std::size_t>(m - j)];
        rows[static_cast<std::size_t>(j - 1)] = {-mirror.z, mirror.saturated};
    }
    return rows;
}

}  // namespace

CouplingDensity CouplingDensity::poisson_root(double lambda, bool shifted) {
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson_root: lambda <= 0");
    CouplingDensity d;
    d.kind_ = shifted ? Kind::poisson_root_shifted : Kind::poisson_root;
    d.lambda_ = lambda;

    // keep every count whose log-mass is above -62 (~1.2e-27); the dropped
    // tails are far below the quadrature tolerances downstream
    const auto mode = static_cast<std::int64_t>(std::floor(lambda));
    std::int64_t jlo = mode;
    while (jlo > 0 && log_poisson_pmf(lambda, jlo - 1) > -62.0) --jlo;
    std::int64_t jhi = mode;
    while (log_poisson_pmf(lambda, jhi + 1) > -62.0 ||
           static_cast<double>(jhi) < lambda + 2.0)
        ++jhi;

    d.pieces_.reserve(static_cast<std::size_t>(jhi - jlo + 1));
    for (std::int64_t j = jlo; j <= jhi; ++j) {
        CouplingPiece p;
        p.j = j;
        p.log_coef = log_poisson_pmf(lambda, j);
        if (shifted) {
            p.lo = 2.0 * std::sqrt(static_cast<double>(j));
            p.hi = 2.0 * std::sqrt(static_cast<double>(j) + 1.0);
        } else {
            p.lo = root_transform(static_cast<double>(j) - 0.5);
            p.hi = root_transform(static_cast<double>(j) + 0.5);
        }
        d.pieces_.push_back(p);
    }
    return d;
}

CouplingDensity CouplingDensity::binomial_coupled(std::int64_t m, double p) {
    if (m < 0) throw std::invalid_argument("binomial_coupled: m < 0");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("binomial_coupled: p outside (0,1)");
    CouplingDensity d;
    d.kind_ = Kind::binomial_coupled;
    d.m_ = m;
    d.p_ = p;

    const double log2p = std::log(2.0 * p);        // exactly 0 at p = 1/2
    const double log2q = std::log(2.0 * (1.0 - p));

    std::vector<double> z(static_cast<std::size_t>(m) + 2);
    z.front() = -kInf;
    z.back() = kInf;
    const std::vector<BoundaryRow> rows = coupling_boundaries(m);
    for (std::int64_t j = 1; j <= m; ++j)
        z[static_cast<std::size_t>(j)] = rows[static_cast<std::size_t>(j - 1)].z;

    d.pieces_.reserve(static_cast<std::size_t>(m) + 1);
    for (std::int64_t j = 0; j <= m; ++j) {
        CouplingPiece piece;
        piece.j = j;
        piece.lo = z[static_cast<std::size_t>(j)];
        piece.hi = z[static_cast<std::size_t>(j) + 1];
        piece.log_coef = static_cast<double>(j) * log2p + static_cast<double>(m - j) * log2q;
        d.pieces_.push_back(piece);
    }
    return d;
}

double CouplingDensity::pdf(double z) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), z,
                               [](double v, const CouplingPiece& p) { return v < p.lo; });
    if (it == pieces_.begin()) return 0.0;
    --it;
    if (z >= it->hi) return 0.0;
    const double coef = std::exp(it->log_coef);
    if (kind_ == Kind::binomial_coupled) return coef * normal_pdf(z);
    return coef * 0.5 * std::abs(z);
}

double CouplingDensity::piece_mass(std::size_t i) const {
    const CouplingPiece& p = pieces_.at(i);
    const double coef = std::exp(p.log_coef);
    if (kind_ == Kind::binomial_coupled) {
        const double lo = std::isinf(p.lo) ? 0.0 : normal_cdf(p.lo);
        const double hi = std::isinf(p.hi) ? 1.0 : normal_cdf(p.hi);
        return coef * (hi - lo);
    }
    return coef * (root_transform_inverse(p.hi) - root_transform_inverse(p.lo));
}

double CouplingDensity::total_mass() const {
    KahanSum acc;
    for (std::size_t i = 0; i < pieces_.size(); ++i) acc.add(piece_mass(i));
    return acc.s;
}

double CouplingDensity::mean() const {
    KahanSum acc;
    for (const CouplingPiece& p : pieces_) {
        const double coef = std::exp(p.log_coef);
        double lo = p.lo, hi = p.hi;
        if (kind_ == Kind::binomial_coupled) {
            // the Gaussian factor kills the tails far from the bulk
            lo = std::max(lo, -45.0);
            hi = std::min(hi, 45.0);
            if (!(hi > lo)) continue;
            const auto f = [&](double z) { return z * coef * normal_pdf(z); };
            acc.add(integrate_adaptive(f, lo, hi, 1e-14, 1e-11).value);
        } else {
            const auto f = [&](double z) { return z * coef * 0.5 * std::abs(z); };
            acc.add(integrate_adaptive(f, lo, hi, 1e-14, 1e-11).value);
        }
    }
    return acc.s;
}

std::vector<double> CouplingDensity::breakpoints() const {
    std::vector<double> out;
    out.reserve(pieces_.size() + 2);
    for (const CouplingPiece& p : pieces_) {
        if (std::isfinite(p.lo)) out.push_back(p.lo);
    }
    if (!pieces_.empty() && std::isfinite(pieces_.back().hi))
        out.push_back(pieces_.back().hi);
    if (kind_ != Kind::binomial_coupled) {
        // |z| has a kink at 0; make sure it is a knot if it is interior
        if (!pieces_.empty() && pieces_.front().lo < 0.0 && pieces_.back().hi > 0.0)
            out.push_back(0.0);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool CouplingDensity::is_exactly_standard_normal() const {
    if (kind_ != Kind::binomial_coupled) return false;
    return std::all_of(pieces_.begin(), pieces_.end(),
                       [](const CouplingPiece& p) { return p.log_coef == 0.0; });
}

TusnadyBoundaryTable tusnady_boundaries(std::int64_t m) {
    if (m < 1) throw std::invalid_argument("tusnady_boundaries: m < 1");
    TusnadyBoundaryTable t;
    t.m = m;
    t.rows.reserve(static_cast<std::size_t>(m));
    const double sqm = std::sqrt(static_cast<double>(m));
    const std::vector<BoundaryRow> rows = coupling_boundaries(m);
    for (std::int64_t j = 1; j <= m; ++j) {
        TusnadyRow row;
        row.j = j;
        row.u = 2.0 * (static_cast<double>(j) - 0.5 - 0.5 * static_cast<double>(m)) / sqm;
        row.z = rows[static_cast<std::size_t>(j - 1)].z;
        row.saturated = rows[static_cast<std::size_t>(j - 1)].saturated;
        t.rows.push_back(row);
    }
    return t;
}

}  // namespace lecam
