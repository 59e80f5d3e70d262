#include "lecam/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lecam/couplings.hpp"

namespace lecam {

std::int64_t CountPyramid::at(int k, std::int64_t l) const {
    return counts.at(static_cast<std::size_t>(k - k0)).at(static_cast<std::size_t>(l));
}

std::int64_t CountPyramid::total() const {
    std::int64_t s = 0;
    for (std::int64_t c : counts.front()) s += c;
    return s;
}

bool CountPyramid::consistent() const {
    for (int k = k0; k < k1; ++k) {
        const auto& up = counts[static_cast<std::size_t>(k - k0)];
        const auto& dn = counts[static_cast<std::size_t>(k - k0 + 1)];
        for (std::size_t l = 0; l < up.size(); ++l)
            if (up[l] != dn[2 * l] + dn[2 * l + 1]) return false;
    }
    return true;
}

double CoefficientStack::sigma(int k) const {
    return std::sqrt(std::ldexp(1.0, k) / (4.0 * static_cast<double>(n)));
}

const std::vector<double>& CoefficientStack::detail_level(int k) const {
    if (k <= k0 || k > k1) throw std::out_of_range("detail_level: k outside (k0, k1]");
    return details.at(static_cast<std::size_t>(k - k0 - 1));
}

double WhiteNoisePath::value_at_knot(std::int64_t l) const {
    double s = 0.0;
    for (std::int64_t i = 0; i < l; ++i) s += increments[static_cast<std::size_t>(i)];
    return std::ldexp(s, -k1);
}

CountPyramid count_pyramid(const PointProcessSample& sample, int k0, int k1) {
    if (k0 > k1 || k0 < 0) throw std::invalid_argument("count_pyramid: need 0 <= k0 <= k1");
    CountPyramid pyr;
    pyr.k0 = k0;
    pyr.k1 = k1;
    pyr.counts.resize(static_cast<std::size_t>(k1 - k0 + 1));
    auto& fine = pyr.counts.back();
    fine.assign(static_cast<std::size_t>(cells_at(k1)), 0);
    for (double x : sample.points) {
        if (!(x >= 0.0 && x < 1.0))
            throw std::invalid_argument("count_pyramid: point outside [0,1)");
        const auto idx = static_cast<std::size_t>(std::floor(std::ldexp(x, k1)));
        ++fine[idx];
    }
    for (int k = k1 - 1; k >= k0; --k) {
        auto& up = pyr.counts[static_cast<std::size_t>(k - k0)];
        const auto& dn = pyr.counts[static_cast<std::size_t>(k - k0 + 1)];
        up.assign(static_cast<std::size_t>(cells_at(k)), 0);
        for (std::size_t l = 0; l < up.size(); ++l) up[l] = dn[2 * l] + dn[2 * l + 1];
    }
    return pyr;
}

CoefficientStack forward_map(const CountPyramid& pyramid, const DitherStream& dither,
                             std::int64_t n) {
    if (n < 1) throw std::invalid_argument("forward_map: n < 1");
    CoefficientStack st;
    st.n = n;
    st.k0 = pyramid.k0;
    st.k1 = pyramid.k1;

    const double sigma0 = st.sigma(st.k0);
    const auto& base_counts = pyramid.counts.front();
    st.base.resize(base_counts.size());
    for (std::size_t l = 0; l < base_counts.size(); ++l) {
        const double v = static_cast<double>(base_counts[l]) +
                         dither.at(st.k0, static_cast<std::int64_t>(l));
        st.base[l] = sigma0 * root_transform(v);
    }

    st.details.resize(static_cast<std::size_t>(st.k1 - st.k0));
    for (int k = st.k0 + 1; k <= st.k1; ++k) {
        const auto& parent = pyramid.counts[static_cast<std::size_t>(k - 1 - st.k0)];
        const auto& child = pyramid.counts[static_cast<std::size_t>(k - st.k0)];
        auto& w = st.details[static_cast<std::size_t>(k - st.k0 - 1)];
        w.resize(parent.size());
        const double sig = st.sigma(k - 1);
        for (std::size_t l = 0; l < parent.size(); ++l) {
            const std::int64_t m = parent[l];
            const double x = static_cast<double>(child[2 * l]) +
                             dither.at(k, static_cast<std::int64_t>(2 * l));
            double u = fm_cdf(m, x);
            bool sat = false;
            if (u < 1e-300) {  // deep-tail cdf values saturate, flagged
                u = 1e-300;
                sat = true;
            } else if (u > 1.0 - 1e-16) {
                u = 1.0 - 1e-16;
                sat = true;
            }
            bool qsat = false;
            w[l] = sig * normal_quantile(u, &qsat);
            if (sat || qsat) ++st.saturation_count;
        }
    }
    return st;
}

InverseResult inverse_map(const CoefficientStack& stack) {
    InverseResult out;
    CountPyramid& pyr = out.pyramid;
    pyr.k0 = stack.k0;
    pyr.k1 = stack.k1;
    pyr.counts.resize(static_cast<std::size_t>(stack.k1 - stack.k0 + 1));

    const double sigma0 = stack.sigma(stack.k0);
    auto& base = pyr.counts.front();
    base.resize(stack.base.size());
    for (std::size_t l = 0; l < stack.base.size(); ++l) {
        const double v = root_transform_inverse(stack.base[l] / sigma0);
        double c = std::floor(v + 0.5);  // nearest with half-up ties
        if (c < 0.0) {
            c = 0.0;
            ++out.clamped_cells;
        }
        base[l] = static_cast<std::int64_t>(c);
    }

    for (int k = stack.k0 + 1; k <= stack.k1; ++k) {
        const auto& parent = pyr.counts[static_cast<std::size_t>(k - 1 - stack.k0)];
        const auto& w = stack.detail_level(k);
        auto& child = pyr.counts[static_cast<std::size_t>(k - stack.k0)];
        child.resize(2 * parent.size());
        const double sig = stack.sigma(k - 1);
        for (std::size_t l = 0; l < parent.size(); ++l) {
            const std::int64_t m = parent[l];
            std::int64_t left = 0;
            if (m > 0) {
                const double u = normal_cdf(w[l] / sig);
                double x;
                if (u <= 0.0) {
                    x = -0.5;
                    ++out.saturation_count;
                } else if (u >= 1.0) {
                    x = static_cast<double>(m) + 0.5;
                    ++out.saturation_count;
                } else {
                    x = fm_quantile(m, u);
                }
                left = static_cast<std::int64_t>(std::floor(x + 0.5));
                if (left < 0) {
                    left = 0;
                    ++out.clamped_cells;
                }
                if (left > m) {
                    left = m;
                    ++out.clamped_cells;
                }
            }
            child[2 * l] = left;
            child[2 * l + 1] = m - left;
        }
    }
    return out;
}

WhiteNoisePath reconstruct_path(const CoefficientStack& stack) {
    std::vector<double> z = stack.base;
    for (int k = stack.k0 + 1; k <= stack.k1; ++k) {
        const auto& w = stack.detail_level(k);
        std::vector<double> next(2 * z.size());
        for (std::size_t l = 0; l < z.size(); ++l) {
            next[2 * l] = z[l] + w[l];
            next[2 * l + 1] = z[l] - w[l];
        }
        z.swap(next);
    }
    WhiteNoisePath path;
    path.n = stack.n;
    path.k1 = stack.k1;
    path.increments = std::move(z);
    return path;
}

CoefficientStack analyze_path(const WhiteNoisePath& path, int k0) {
    if (k0 < 0 || k0 > path.k1) throw std::invalid_argument("analyze_path: bad k0");
    CoefficientStack st;
    st.n = path.n;
    st.k0 = k0;
    st.k1 = path.k1;
    st.details.resize(static_cast<std::size_t>(path.k1 - k0));

    std::vector<double> z = path.increments;
    for (int k = path.k1; k > k0; --k) {
        std::vector<double> up(z.size() / 2);
        auto& w = st.details[static_cast<std::size_t>(k - k0 - 1)];
        w.resize(z.size() / 2);
        for (std::size_t l = 0; l < up.size(); ++l) {
            up[l] = 0.5 * (z[2 * l] + z[2 * l + 1]);
            w[l] = 0.5 * (z[2 * l] - z[2 * l + 1]);
        }
        z.swap(up);
    }
    st.base = std::move(z);
    return st;
}

WhiteNoisePath simulate_white_noise(const DensityModel& f, std::int64_t n, int k1,
                                    std::uint64_t seed, std::uint64_t replicate) {
    if (n < 1) throw std::invalid_argument("simulate_white_noise: n < 1");
    WhiteNoisePath path;
    path.n = n;
    path.k1 = k1;
    const std::int64_t cells = cells_at(k1);
    path.increments.resize(static_cast<std::size_t>(cells));
    const double sig = std::sqrt(std::ldexp(1.0, k1) / (4.0 * static_cast<double>(n)));
    for (std::int64_t l = 0; l < cells; ++l) {
        const double h = f.sqrt_cell_mean({k1, l});
        CounterStream s(seed, StreamUse::gaussian, static_cast<std::uint64_t>(k1),
                        static_cast<std::uint64_t>(l), replicate);
        path.increments[static_cast<std::size_t>(l)] =
            h + sig * normal_quantile(s.uniform_open());
    }
    return path;
}

std::int64_t poisson_draw(double lambda, CounterStream& stream) {
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson_draw: lambda <= 0");
    const double u = stream.uniform_open();
    // categorical inversion over a fixed enumeration that starts at the mode
    // and alternates outward; O(sqrt(lambda)) steps in the typical case
    const auto mode = static_cast<std::int64_t>(std::floor(lambda));
    double cum = 0.0;
    std::int64_t down = mode, up = mode;
    bool down_done = false;
    double pdown = std::exp(log_poisson_pmf(lambda, mode));
    double pup = pdown * lambda / static_cast<double>(mode + 1);
    // cum walks: consider down first at each step (fixed deterministic order)
    for (std::int64_t guard = 0; guard < (1 << 26); ++guard) {
        if (!down_done) {
            cum += pdown;
            if (cum >= u) return down;
            if (down == 0) {
                down_done = true;
            } else {
                pdown *= static_cast<double>(down) / lambda;
                --down;
            }
        }
        cum += pup;
        if (cum >= u) return up + 1;
        ++up;
        pup *= lambda / static_cast<double>(up + 1);
    }
    return up;  // unreachable in practice
}

PointProcessSample sample_poisson_process(const DensityModel& f, std::int64_t n,
                                          std::uint64_t seed, std::uint64_t replicate) {
    if (n < 1) throw std::invalid_argument("sample_poisson_process: n < 1");
    CounterStream count_stream(seed, StreamUse::poisson_count, 0, 0, replicate);
    const std::int64_t N = poisson_draw(static_cast<double>(n), count_stream);
    CounterStream point_stream(seed, StreamUse::points, 0, 0, replicate);
    PointProcessSample s;
    s.count = N;
    s.points = f.sample_points(static_cast<std::size_t>(N), point_stream);
    return s;
}

StepFunction histogram_estimate(const std::vector<double>& points,
                                std::int64_t count_used, int k0) {
    if (count_used <= 0) throw std::invalid_argument("histogram_estimate: count_used <= 0");
    if (k0 < 0) throw std::invalid_argument("histogram_estimate: k0 < 0");
    StepFunction h;
    h.level = k0;
    h.values.assign(static_cast<std::size_t>(cells_at(k0)), 0.0);
    const double scale = std::ldexp(1.0, k0) / static_cast<double>(count_used);
    for (double x : points) {
        if (!(x >= 0.0 && x < 1.0))
            throw std::invalid_argument("histogram_estimate: point outside [0,1)");
        const auto idx = static_cast<std::size_t>(std::floor(std::ldexp(x, k0)));
        h.values[idx] += scale;
    }
    return h;
}

StepFunction floored_histogram(const StepFunction& hist, double floor_eps) {
    if (!(floor_eps > 0.0)) throw std::invalid_argument("floored_histogram: floor <= 0");
    StepFunction g = hist;
    for (double& v : g.values) v = std::max(v, floor_eps);
    const double mass = g.integral();
    for (double& v : g.values) v /= mass;
    return g;
}

double step_quantile(const StepFunction& step, double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("step_quantile: u outside (0,1)");
    const double w = std::ldexp(1.0, -step.level);
    double cum = 0.0;
    for (std::size_t i = 0; i < step.values.size(); ++i) {
        const double add = step.values[i] * w;
        if (cum + add >= u && step.values[i] > 0.0) {
            const double x = static_cast<double>(i) * w + (u - cum) / step.values[i];
            return std::min(x, std::nextafter(1.0, 0.0));
        }
        cum += add;
    }
    return std::nextafter(1.0, 0.0);
}

PointProcessSample randomize_to_poisson(const FixedSample& sample, int k0,
                                        double floor_eps, std::uint64_t seed,
                                        std::uint64_t replicate) {
    if (sample.points.empty()) throw std::invalid_argument("randomize_to_poisson: empty sample");
    CounterStream count_stream(seed, StreamUse::poisson_count, 1, 0, replicate);
    const std::int64_t N = poisson_draw(static_cast<double>(sample.n), count_stream);

    PointProcessSample out;
    out.count = N;
    if (N <= sample.n) {
        out.points.assign(sample.points.begin(), sample.points.begin() + N);
    } else {
        out.points = sample.points;
        const StepFunction f_tilde =
            floored_histogram(histogram_estimate(sample.points, sample.n, k0), floor_eps);
        CounterStream aug(seed, StreamUse::augment, 1, 0, replicate);
        for (std::int64_t i = sample.n; i < N; ++i)
            out.points.push_back(step_quantile(f_tilde, aug.uniform_open()));
    }
    std::sort(out.points.begin(), out.points.end());
    return out;
}

FixedSample randomize_to_fixed(const PointProcessSample& sample, std::int64_t n, int k0,
                               double floor_eps, std::uint64_t seed,
                               std::uint64_t replicate) {
    if (n < 1) throw std::invalid_argument("randomize_to_fixed: n < 1");
    FixedSample out;
    out.n = n;
    if (sample.count >= n) {
        out.points.assign(sample.points.begin(), sample.points.begin() + n);
        return out;
    }
    out.points = sample.points;
    StepFunction f_hat;
    if (sample.count > 0) {
        f_hat = floored_histogram(histogram_estimate(sample.points, sample.count, k0),
                                  floor_eps);
    } else {
        f_hat.level = k0;  // no data at all: fall back to uniform
        f_hat.values.assign(static_cast<std::size_t>(cells_at(k0)), 1.0);
    }
    CounterStream aug(seed, StreamUse::augment, 2, 0, replicate);
    for (std::int64_t i = sample.count; i < n; ++i)
        out.points.push_back(step_quantile(f_hat, aug.uniform_open()));
    return out;
}

int choose_k0(std::int64_t n, const std::vector<double>& gamma) {
    if (n < 1) throw std::invalid_argument("choose_k0: n < 1");
    if (gamma.empty()) throw std::invalid_argument("choose_k0: empty gamma");
    for (std::size_t i = 1; i < gamma.size(); ++i)
        if (gamma[i] > gamma[i - 1] || !(gamma[i] >= 0.0))
            throw std::invalid_argument("choose_k0: gamma must be nonincreasing and >= 0");
    for (int k = 0; k <= 62; ++k) {
        const double lhs = std::exp2(2 * k) / static_cast<double>(n);
        const double g =
            k < static_cast<int>(gamma.size()) ? gamma[static_cast<std::size_t>(k)]
                                               : gamma.back();
        if (lhs >= g) return k;
    }
    throw std::runtime_error("choose_k0: no admissible level");
}

PointProcessSample synthetic_points(const CountPyramid& pyramid) {
    PointProcessSample s;
    const auto& fine = pyramid.counts.back();
    const double w = std::ldexp(1.0, -pyramid.k1);
    for (std::size_t l = 0; l < fine.size(); ++l) {
        const std::int64_t c = fine[l];
        for (std::int64_t i = 0; i < c; ++i) {
            s.points.push_back((static_cast<double>(l) +
                                (static_cast<double>(i) + 1.0) /
                                    (static_cast<double>(c) + 1.0)) *
                               w);
        }
    }
    s.count = static_cast<std::int64_t>(s.points.size());
    return s;
}

}  // namespace lecam
