#include "lecam/density_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "lecam/quadrature.hpp"

namespace lecam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Int_{lo}^{hi} sqrt(a + b x) dx without cancellation for small b * width.
double sqrt_linear_integral(double a, double b, double lo, double hi) {
    const double base = a + b * lo;
    const double u = b * (hi - lo) / base;
    double g;  // (2/3) ((1+u)^{3/2} - 1) / u, equal to 1 at u = 0
    if (std::abs(u) < 1e-12) {
        g = 1.0 + u * (0.25 - u / 24.0);
    } else {
        g = (2.0 / 3.0) * std::expm1(1.5 * std::log1p(u)) / u;
    }
    return (hi - lo) * std::sqrt(base) * g;
}

}  // namespace

void DensityModel::validate(double min_exact) const {
    const double mass = integrate(0.0, 1.0);
    if (std::abs(mass - 1.0) > 1e-12)
        throw std::invalid_argument("density does not integrate to 1 (mass = " +
                                    std::to_string(mass) + ")");
    if (!(eps0_ > 0.0)) throw std::invalid_argument("eps0 must be positive");
    if (min_exact < eps0_)
        throw std::invalid_argument("density minimum " + std::to_string(min_exact) +
                                    " is below the claimed eps0 " + std::to_string(eps0_));
}

DensityModel DensityModel::piecewise_constant(int level, std::vector<double> values,
                                              double eps0) {
    DensityModel m;
    m.family_ = DensityFamily::piecewise_constant;
    m.eps0_ = eps0;
    m.pc_level_ = level;
    if (static_cast<std::int64_t>(values.size()) != cells_at(level))
        throw std::invalid_argument("piecewise_constant: need 2^level values");
    m.pc_values_ = std::move(values);
    m.pc_prefix_.resize(m.pc_values_.size() + 1, 0.0);
    const double w = std::ldexp(1.0, -level);
    for (std::size_t i = 0; i < m.pc_values_.size(); ++i) {
        if (!(m.pc_values_[i] >= 0.0))
            throw std::invalid_argument("piecewise_constant: negative value");
        m.pc_prefix_[i + 1] = m.pc_prefix_[i] + m.pc_values_[i] * w;
    }
    m.validate(*std::min_element(m.pc_values_.begin(), m.pc_values_.end()));
    return m;
}

DensityModel DensityModel::linear(double a, double b, double eps0) {
    DensityModel m;
    m.family_ = DensityFamily::linear;
    m.eps0_ = eps0;
    m.lin_a_ = a;
    m.lin_b_ = b;
    m.validate(std::min(a, a + b));  // endpoint minimum
    return m;
}

DensityModel DensityModel::fourier(std::vector<std::complex<double>> coeffs, double eps0) {
    DensityModel m;
    m.family_ = DensityFamily::fourier;
    m.eps0_ = eps0;
    if (coeffs.empty()) throw std::invalid_argument("fourier: need at least c_0");
    if (coeffs[0].imag() != 0.0)
        throw std::invalid_argument("fourier: c_0 must be real for a real density");
    m.coeffs_ = std::move(coeffs);

    // coefficients of f^2: d_m = sum_n c_n c_{m-n} over n, m-n in [-N, N]
    const int N = static_cast<int>(m.coeffs_.size()) - 1;
    auto c = [&](int n) -> std::complex<double> {
        return n >= 0 ? m.coeffs_[static_cast<std::size_t>(n)]
                      : std::conj(m.coeffs_[static_cast<std::size_t>(-n)]);
    };
    m.sq_coeffs_.assign(static_cast<std::size_t>(2 * N + 1), {0.0, 0.0});
    for (int mm = 0; mm <= 2 * N; ++mm) {
        std::complex<double> d{0.0, 0.0};
        for (int n = -N; n <= N; ++n) {
            const int other = mm - n;
            if (other < -N || other > N) continue;
            d += c(n) * c(other);
        }
        m.sq_coeffs_[static_cast<std::size_t>(mm)] = d;
    }

    // Certify the minimum on a dense grid plus a first-derivative correction.
    double max_deriv = 0.0;
    for (int n = 1; n <= N; ++n) max_deriv += kTwoPi * n * 2.0 * std::abs(m.coeffs_[n]);
    const int grid = 1 << 16;
    double lo = m(0.0);
    for (int i = 1; i < grid; ++i) lo = std::min(lo, m(static_cast<double>(i) / grid));
    lo -= max_deriv * 0.5 / grid;
    m.validate(lo);
    return m;
}

DensityModel DensityModel::haar_bump(int k, std::int64_t l, double amplitude, double eps0) {
    DensityModel m;
    m.family_ = DensityFamily::haar_bump;
    m.eps0_ = eps0;
    m.bump_ = {k, l};
    require_valid(m.bump_);
    m.bump_amp_ = amplitude;
    m.validate(1.0 - std::abs(amplitude) * std::exp2(0.5 * k));
    return m;
}

double DensityModel::operator()(double x) const {
    if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("density eval: x outside [0,1)");
    switch (family_) {
        case DensityFamily::piecewise_constant: {
            const auto i = static_cast<std::size_t>(std::floor(std::ldexp(x, pc_level_)));
            return pc_values_[i];
        }
        case DensityFamily::linear:
            return lin_a_ + lin_b_ * x;
        case DensityFamily::fourier: {
            double v = coeffs_[0].real();
            for (std::size_t n = 1; n < coeffs_.size(); ++n) {
                const double ang = kTwoPi * static_cast<double>(n) * x;
                v += 2.0 * (coeffs_[n].real() * std::cos(ang) - coeffs_[n].imag() * std::sin(ang));
            }
            return v;
        }
        case DensityFamily::haar_bump:
            return 1.0 + bump_amp_ * haar_eval(bump_, x);
    }
    return 0.0;
}

namespace {

// Int_{lo}^{hi} of sum_m d_m e^{i 2 pi m x} for real-valued series
// (d indexed 0..M with negative coefficients implied by conjugation).
double trig_integral(const std::vector<std::complex<double>>& d, double lo, double hi) {
    double v = d[0].real() * (hi - lo);
    for (std::size_t n = 1; n < d.size(); ++n) {
        const double w = kTwoPi * static_cast<double>(n);
        // Int 2 Re(d_n e^{iwx}) = (2/w) [d_n.re (sin(w hi) - sin(w lo))
        //                               + d_n.im (cos(w hi) - cos(w lo))]
        v += 2.0 / w *
             (d[n].real() * (std::sin(w * hi) - std::sin(w * lo)) +
              d[n].imag() * (std::cos(w * hi) - std::cos(w * lo)));
    }
    return v;
}

// overlap of [lo,hi) with [a,b)
double overlap(double lo, double hi, double a, double b) {
    return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

}  // namespace

double DensityModel::integrate(double lo, double hi) const {
    if (!(lo >= 0.0 && hi <= 1.0 + 1e-15 && lo <= hi))
        throw std::invalid_argument("integrate: bad interval");
    switch (family_) {
        case DensityFamily::piecewise_constant: {
            const double w = std::ldexp(1.0, -pc_level_);
            double s = 0.0;
            const auto first = static_cast<std::size_t>(std::floor(lo / w));
            for (std::size_t i = first; i < pc_values_.size(); ++i) {
                const double a = static_cast<double>(i) * w;
                if (a >= hi) break;
                s += pc_values_[i] * overlap(lo, hi, a, a + w);
            }
            return s;
        }
        case DensityFamily::linear:
            return (hi - lo) * (lin_a_ + lin_b_ * 0.5 * (hi + lo));
        case DensityFamily::fourier:
            return trig_integral(coeffs_, lo, hi);
        case DensityFamily::haar_bump: {
            const Interval I = cell(bump_);
            const double mid = 0.5 * (I.lo + I.hi);
            const double amp = std::exp2(0.5 * bump_.level);
            return (hi - lo) + bump_amp_ * amp *
                                   (overlap(lo, hi, I.lo, mid) - overlap(lo, hi, mid, I.hi));
        }
    }
    return 0.0;
}

double DensityModel::integrate_cell(const DyadicIndex& idx) const {
    const Interval I = cell(idx);
    return integrate(I.lo, I.hi);
}

double DensityModel::integrate_sq(double lo, double hi) const {
    switch (family_) {
        case DensityFamily::piecewise_constant: {
            const double w = std::ldexp(1.0, -pc_level_);
            double s = 0.0;
            const auto first = static_cast<std::size_t>(std::floor(lo / w));
            for (std::size_t i = first; i < pc_values_.size(); ++i) {
                const double a = static_cast<double>(i) * w;
                if (a >= hi) break;
                s += pc_values_[i] * pc_values_[i] * overlap(lo, hi, a, a + w);
            }
            return s;
        }
        case DensityFamily::linear: {
            // Int (a + b x)^2 = [(a + b x)^3 / (3b)]; stable midpoint form
            const double m = 0.5 * (lo + hi);
            const double w = hi - lo;
            const double fm = lin_a_ + lin_b_ * m;
            return w * (fm * fm + lin_b_ * lin_b_ * w * w / 12.0);
        }
        case DensityFamily::fourier:
            return trig_integral(sq_coeffs_, lo, hi);
        case DensityFamily::haar_bump: {
            const Interval I = cell(bump_);
            const double mid = 0.5 * (I.lo + I.hi);
            const double amp = std::exp2(0.5 * bump_.level);
            const double vl = 1.0 + bump_amp_ * amp;  // on the left half-cell
            const double vr = 1.0 - bump_amp_ * amp;
            double s = (hi - lo) - overlap(lo, hi, I.lo, I.hi);
            s += vl * vl * overlap(lo, hi, I.lo, mid);
            s += vr * vr * overlap(lo, hi, mid, I.hi);
            return s;
        }
    }
    return 0.0;
}

double DensityModel::integrate_sq_dev(const DyadicIndex& idx, double c) const {
    const Interval I = cell(idx);
    return integrate_sq(I.lo, I.hi) - 2.0 * c * integrate(I.lo, I.hi) +
           c * c * I.width();
}

double DensityModel::cell_mean(const DyadicIndex& idx) const {
    return std::ldexp(integrate_cell(idx), idx.level);
}

double DensityModel::sqrt_cell_mean(const DyadicIndex& idx) const {
    const Interval I = cell(idx);
    switch (family_) {
        case DensityFamily::piecewise_constant: {
            const double w = std::ldexp(1.0, -pc_level_);
            double s = 0.0;
            for (std::size_t i = 0; i < pc_values_.size(); ++i) {
                const double a = static_cast<double>(i) * w;
                if (a >= I.hi) break;
                s += std::sqrt(pc_values_[i]) * overlap(I.lo, I.hi, a, a + w);
            }
            return std::ldexp(s, idx.level);
        }
        case DensityFamily::linear:
            return std::ldexp(sqrt_linear_integral(lin_a_, lin_b_, I.lo, I.hi), idx.level);
        case DensityFamily::haar_bump: {
            const Interval B = cell(bump_);
            const double mid = 0.5 * (B.lo + B.hi);
            const double amp = std::exp2(0.5 * bump_.level);
            double s = (I.hi - I.lo) - overlap(I.lo, I.hi, B.lo, B.hi);
            s += std::sqrt(1.0 + bump_amp_ * amp) * overlap(I.lo, I.hi, B.lo, mid);
            s += std::sqrt(1.0 - bump_amp_ * amp) * overlap(I.lo, I.hi, mid, B.hi);
            return std::ldexp(s, idx.level);
        }
        case DensityFamily::fourier: {
            auto g = [this](double x) { return std::sqrt((*this)(x)); };
            const QuadResult r =
                integrate_adaptive(g, I.lo, I.hi, 1e-15 * I.width(), 1e-11);
            if (r.error > 1e-9 * std::max(r.value, I.width()))
                throw std::runtime_error("sqrt_cell_mean: quadrature did not converge");
            return std::ldexp(r.value, idx.level);
        }
    }
    return 0.0;
}

double DensityModel::split_probability(const DyadicIndex& parent) const {
    require_valid(parent);
    const DyadicIndex left{parent.level + 1, 2 * parent.pos};
    const double num = integrate_cell(left);
    const double den = integrate_cell(parent);
    return num / den;
}

double DensityModel::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return integrate(0.0, x);
}

double DensityModel::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u outside (0,1)");
    switch (family_) {
        case DensityFamily::piecewise_constant: {
            const auto it = std::upper_bound(pc_prefix_.begin(), pc_prefix_.end(), u);
            const auto i = static_cast<std::size_t>(
                std::max<std::ptrdiff_t>(0, it - pc_prefix_.begin() - 1));
            const std::size_t idx = std::min(i, pc_values_.size() - 1);
            const double w = std::ldexp(1.0, -pc_level_);
            const double x =
                static_cast<double>(idx) * w + (u - pc_prefix_[idx]) / pc_values_[idx];
            return std::min(x, std::nextafter(1.0, 0.0));
        }
        case DensityFamily::linear: {
            if (lin_b_ == 0.0) return u / lin_a_;
            // solve a x + b x^2 / 2 = u, stable root
            const double x = 2.0 * u / (lin_a_ + std::sqrt(lin_a_ * lin_a_ + 2.0 * lin_b_ * u));
            return std::clamp(x, 0.0, std::nextafter(1.0, 0.0));
        }
        case DensityFamily::haar_bump: {
            // CDF is piecewise linear with knots at the bump half-cells
            const Interval B = cell(bump_);
            const double mid = 0.5 * (B.lo + B.hi);
            const double amp = std::exp2(0.5 * bump_.level);
            const double vl = 1.0 + bump_amp_ * amp;
            const double vr = 1.0 - bump_amp_ * amp;
            const double F1 = B.lo;                       // cdf at bump start
            const double F2 = F1 + vl * (mid - B.lo);     // cdf at midpoint
            const double F3 = F2 + vr * (B.hi - mid);     // cdf at bump end
            double x;
            if (u <= F1) x = u;
            else if (u <= F2) x = B.lo + (u - F1) / vl;
            else if (u <= F3) x = mid + (u - F2) / vr;
            else x = B.hi + (u - F3);
            return std::clamp(x, 0.0, std::nextafter(1.0, 0.0));
        }
        case DensityFamily::fourier: {
            // Newton with bisection safeguard; F' = f >= eps0 > 0
            double lo = 0.0, hi = 1.0, x = u;
            for (int it = 0; it < 200; ++it) {
                const double F = cdf(x);
                const double err = F - u;
                if (std::abs(err) <= 1e-12) break;
                if (err > 0.0) hi = x; else lo = x;
                double step = x - err / (*this)(std::min(x, std::nextafter(1.0, 0.0)));
                x = (step > lo && step < hi) ? step : 0.5 * (lo + hi);
            }
            if (std::abs(cdf(x) - u) > 1e-10)
                throw std::runtime_error("quantile: root finder did not converge");
            return std::clamp(x, 0.0, std::nextafter(1.0, 0.0));
        }
    }
    return 0.0;
}

std::vector<double> DensityModel::sample_points(std::size_t count,
                                                CounterStream& stream) const {
    std::vector<double> pts;
    pts.reserve(count);
    for (std::size_t i = 0; i < count; ++i) pts.push_back(quantile(stream.uniform_open()));
    std::sort(pts.begin(), pts.end());
    return pts;
}

ClassNorms DensityModel::class_norms(double beta, double alpha, int n_max) const {
    if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("class_norms: beta in (0,1]");
    if (!(alpha > 0.0)) throw std::invalid_argument("class_norms: alpha > 0");
    ClassNorms out;

    switch (family_) {
        case DensityFamily::piecewise_constant: {
            const bool constant = std::all_of(pc_values_.begin(), pc_values_.end(),
                                              [&](double v) { return v == pc_values_[0]; });
            out.lipschitz = constant ? 0.0
                                     : std::numeric_limits<double>::infinity();
            break;
        }
        case DensityFamily::haar_bump:
            out.lipschitz = bump_amp_ == 0.0 ? 0.0
                                             : std::numeric_limits<double>::infinity();
            break;
        case DensityFamily::linear:
            // sup |b| |x-y|^{1-beta} over the unit interval is at |x-y| = 1
            out.lipschitz = std::abs(lin_b_);
            break;
        case DensityFamily::fourier: {
            // grid sup over pairs, plus refinement bounds from max |f'|
            const int G = 1024;
            std::vector<double> fv(G);
            for (int i = 0; i < G; ++i) fv[i] = (*this)(static_cast<double>(i) / G);
            double max_d1 = 0.0;
            for (std::size_t n = 1; n < coeffs_.size(); ++n)
                max_d1 += kTwoPi * static_cast<double>(n) * 2.0 * std::abs(coeffs_[n]);
            double sup = 0.0;
            for (int i = 0; i < G; ++i)
                for (int j = i + 1; j < G; ++j) {
                    const double dx = static_cast<double>(j - i) / G;
                    sup = std::max(sup, std::abs(fv[i] - fv[j]) / std::pow(dx, beta));
                }
            const double h = 1.0 / G;
            sup += 2.0 * max_d1 * h;                        // endpoint motion
            sup = std::max(sup, max_d1 * std::pow(h, 1.0 - beta));  // close pairs
            out.lipschitz = sup;
            break;
        }
    }

    // Sobolev norm from Fourier coefficients, exact where closed form exists.
    auto add_sobolev = [&](auto cn) {
        double s = 0.0;
        for (int n = 1; n <= n_max; ++n) {
            const std::complex<double> c = cn(n);
            s += 2.0 * std::pow(static_cast<double>(n), 2.0 * alpha) * std::norm(c);
        }
        return s;
    };
    switch (family_) {
        case DensityFamily::fourier:
            out.sobolev = add_sobolev([&](int n) {
                return n < static_cast<int>(coeffs_.size()) ? coeffs_[static_cast<std::size_t>(n)]
                                                            : std::complex<double>{0.0, 0.0};
            });
            break;
        case DensityFamily::linear:
            // c_n = b * i / (2 pi n) for n != 0
            out.sobolev = add_sobolev([&](int n) {
                return std::complex<double>{0.0, lin_b_ / (kTwoPi * n)};
            });
            break;
        default:
            // c_n of a step function: sum over cells of v * Int e^{-i 2 pi n x}
            out.sobolev = add_sobolev([&](int n) {
                const double w = kTwoPi * n;
                std::complex<double> c{0.0, 0.0};
                const int L = family_ == DensityFamily::piecewise_constant
                                  ? pc_level_
                                  : bump_.level + 1;
                const std::int64_t cells = cells_at(L);
                const double cw = std::ldexp(1.0, -L);
                for (std::int64_t i = 0; i < cells; ++i) {
                    const double a = static_cast<double>(i) * cw;
                    const double b = a + cw;
                    double v;
                    if (family_ == DensityFamily::piecewise_constant) {
                        v = pc_values_[static_cast<std::size_t>(i)];
                    } else {
                        v = (*this)(a);
                    }
                    // Int_a^b e^{-iwx} dx = (e^{-iwb} - e^{-iwa}) / (-iw)
                    const std::complex<double> num =
                        std::polar(1.0, -w * b) - std::polar(1.0, -w * a);
                    c += v * num / std::complex<double>{0.0, -w};
                }
                return c;
            });
            break;
    }
    return out;
}

}  // namespace lecam
