#include "lecam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "lecam/quadrature.hpp"
#include "lecam/transforms.hpp"

namespace lecam {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;
// (2 pi)^{-1/4}, the sqrt of the normal density prefactor
const double kQuarterNorm = std::sqrt(kInvSqrt2Pi);

struct KahanSum {
    double s = 0.0, c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
};

// Pieces with mass below this are dropped from affinity quadrature; by
// Cauchy-Schwarz the combined contribution stays below ~1e-11 even for a
// million pieces.
constexpr double kPieceMassFloor = 1e-28;

// Gaussian mass outside +-16 is ~1.3e-57, so clipping the window there costs
// at most sqrt of that per piece.
constexpr double kGaussWindow = 16.0;

double affinity_vs_gaussian(const CouplingDensity& d, const UnitGaussian& g,
                            double* err_out) {
    KahanSum acc;
    double err = 0.0;
    const bool binom = d.kind() == CouplingDensity::Kind::binomial_coupled;
    const double mu = g.mean;

    for (std::size_t i = 0; i < d.pieces().size(); ++i) {
        const CouplingPiece& p = d.pieces()[i];
        const double mass = d.piece_mass(i);
        if (mass < kPieceMassFloor) continue;

        double lo = std::max(p.lo, mu - kGaussWindow);
        double hi = std::min(p.hi, mu + kGaussWindow);
        if (!(hi > lo)) continue;

        const double coef_half = std::exp(0.5 * p.log_coef);
        const double abs_tol = 1e-13 * std::sqrt(mass) + 1e-16;

        if (binom) {
            const auto f = [&](double z) {
                const double zm = z - mu;
                return coef_half * kInvSqrt2Pi * std::exp(-0.25 * (z * z + zm * zm));
            };
            const QuadResult r = integrate_adaptive(f, lo, hi, abs_tol, 1e-11);
            acc.add(r.value);
            err += r.error;
        } else {
            const auto f = [&](double z) {
                const double zm = z - mu;
                return coef_half * kQuarterNorm * std::sqrt(0.5 * std::abs(z)) *
                       std::exp(-0.25 * zm * zm);
            };
            // split at the |z| kink when it is interior
            if (lo < 0.0 && hi > 0.0) {
                const QuadResult r1 = integrate_adaptive(f, lo, 0.0, 0.5 * abs_tol, 1e-11);
                const QuadResult r2 = integrate_adaptive(f, 0.0, hi, 0.5 * abs_tol, 1e-11);
                acc.add(r1.value);
                acc.add(r2.value);
                err += r1.error + r2.error;
            } else {
                const QuadResult r = integrate_adaptive(f, lo, hi, abs_tol, 1e-11);
                acc.add(r.value);
                err += r.error;
            }
        }
    }
    if (err_out) *err_out = err;
    return acc.s;
}

double affinity_couplings(const CouplingDensity& d1, const CouplingDensity& d2,
                          double* err_out) {
    // union of breakpoints over the overlap of the (clipped) supports
    std::vector<double> knots;
    auto collect = [&](const CouplingDensity& d) {
        for (double b : d.breakpoints()) knots.push_back(b);
    };
    collect(d1);
    collect(d2);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    KahanSum acc;
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double a = knots[i], b = knots[i + 1];
        if (!(b > a)) continue;
        const double mid = 0.5 * (a + b);
        const double bound =
            (b - a) * std::sqrt(std::max({d1.pdf(a), d1.pdf(mid), d1.pdf(b)}) *
                                std::max({d2.pdf(a), d2.pdf(mid), d2.pdf(b)}));
        if (bound < 1e-20) continue;
        const auto f = [&](double z) { return std::sqrt(d1.pdf(z) * d2.pdf(z)); };
        const QuadResult r =
            integrate_adaptive(f, a, b, 1e-13 * std::max(bound, 1e-3), 1e-11);
        acc.add(r.value);
        err += r.error;
    }
    if (err_out) *err_out = err;
    return acc.s;
}

double finish_hellinger(double affinity, double err) {
    if (err > 5e-9) throw std::runtime_error("hellinger_sq: quadrature did not converge");
    return std::clamp(2.0 - 2.0 * affinity, 0.0, 2.0);
}

}  // namespace

double hellinger_sq_quadrature(const CouplingDensity& d, const UnitGaussian& g) {
    double err = 0.0;
    const double aff = affinity_vs_gaussian(d, g, &err);
    return finish_hellinger(aff, err);
}

double hellinger_sq_quadrature(const CouplingDensity& d1, const CouplingDensity& d2) {
    double err = 0.0;
    const double aff = affinity_couplings(d1, d2, &err);
    return finish_hellinger(aff, err);
}

double hellinger_sq(const CouplingDensity& d, const UnitGaussian& g) {
    if (d.is_exactly_standard_normal()) return gaussian_hellinger_sq(0.0, g.mean).exact;
    return hellinger_sq_quadrature(d, g);
}

double hellinger_sq(const CouplingDensity& d1, const CouplingDensity& d2) {
    if (d1.is_exactly_standard_normal() && d2.is_exactly_standard_normal()) return 0.0;
    return hellinger_sq_quadrature(d1, d2);
}

GaussianHellinger gaussian_hellinger_sq(double mu1, double mu2) {
    const double d = mu1 - mu2;
    GaussianHellinger r;
    r.exact = -2.0 * std::expm1(-d * d / 8.0);
    r.paper_bound = d * d / 4.0;
    return r;
}

BoundReport thm4_sweep(const std::vector<double>& lambdas, const PinnedConstants& pc,
                       Exec policy) {
    BoundReport rep;
    rep.name = "thm4";
    rep.columns = {"lambda",          "h2",          "lambda_h2", "dev_from_7_96",
                   "shifted_lambda_h2", "h2_offcenter", "rhs43_offcenter"};
    rep.rows.assign(lambdas.size(), {});

    for_each_index(policy, static_cast<std::ptrdiff_t>(lambdas.size()), [&](std::size_t i) {
        const double lam = lambdas[i];
        const double mu0 = 2.0 * std::sqrt(lam);
        const CouplingDensity g = CouplingDensity::poisson_root(lam);
        const CouplingDensity gs = CouplingDensity::poisson_root(lam, true);
        const double h2 = hellinger_sq_quadrature(g, {mu0});
        const double h2s = hellinger_sq_quadrature(gs, {mu0});
        const double mu_off = mu0 + 0.5;
        const double h2_off = hellinger_sq_quadrature(g, {mu_off});
        const double rhs43 = pc.thm4_C / lam + 0.5 * (mu0 - mu_off) * (mu0 - mu_off);
        rep.rows[i] = {lam,       h2,     lam * h2, std::abs(lam * h2 - 7.0 / 96.0),
                       lam * h2s, h2_off, rhs43};
    });

    double sup = 0.0;
    for (const auto& r : rep.rows) sup = std::max(sup, r[2]);
    rep.ratio_sup = sup;  // sup of lambda * H^2 over the grid
    rep.scalars["seven_over_96"] = 7.0 / 96.0;
    return rep;
}

BoundReport thm5_sweep(const std::vector<std::int64_t>& ms, const std::vector<double>& ps,
                       Exec policy) {
    BoundReport rep;
    rep.name = "thm5";
    rep.columns = {"m",       "p",       "b",       "h2",     "rhs52",
                   "ratio52", "denom53", "extra53", "ratio53"};
    const std::size_t nrows = ms.size() * ps.size();
    rep.rows.assign(nrows, {});

    for_each_index(policy, static_cast<std::ptrdiff_t>(nrows), [&](std::size_t idx) {
        const std::int64_t m = ms[idx / ps.size()];
        const double p = ps[idx % ps.size()];
        const double md = static_cast<double>(m);
        const double b = m > 0 ? 0.5 * std::sqrt(md) * std::log(p / (1.0 - p)) : 0.0;
        const double h2 = hellinger_sq(CouplingDensity::binomial_coupled(m, p), {b});
        const double rhs52 =
            m > 0 ? b * b / md + std::pow(b, 8) / (md * md)
                  : std::numeric_limits<double>::quiet_NaN();
        const double dp = p - 0.5;
        const double denom53 = dp * dp + md * dp * dp * dp * dp;
        const double mu = std::sqrt(md) * (2.0 * p - 1.0);
        const double extra53 = 0.5 * (mu - b) * (mu - b);
        const double ratio52 = (m > 0 && rhs52 > 0.0)
                                   ? h2 / rhs52
                                   : std::numeric_limits<double>::quiet_NaN();
        const double ratio53 = denom53 > 0.0
                                   ? std::max(0.0, h2 - extra53) / denom53
                                   : std::numeric_limits<double>::quiet_NaN();
        rep.rows[idx] = {md, p, b, h2, rhs52, ratio52, denom53, extra53, ratio53};
    });

    double sup52 = 0.0, sup53 = 0.0;
    for (const auto& r : rep.rows) {
        if (std::isfinite(r[5])) sup52 = std::max(sup52, r[5]);
        if (std::isfinite(r[8])) sup53 = std::max(sup53, r[8]);
    }
    rep.ratio_sup = sup52;  // the Eq (5.2) constant C1
    rep.scalars["D_53"] = sup53;
    return rep;
}

Thm3Terms thm3_bound(const DensityModel& f, std::int64_t n, int k0, int k_max,
                     const PinnedConstants& pc, Exec policy) {
    if (k_max < k0) throw std::invalid_argument("thm3_bound: k_max < k0");
    Thm3Terms t;
    for (int k = k0; k <= k_max; ++k) {
        t.sum_theta2 += std::exp2(k) * level_theta_power_sum(f, k, 2, policy);
        t.sum_theta4 += std::exp2(3 * k) * level_theta_power_sum(f, k, 4, policy);
    }
    const double eps = f.eps0();
    const double ratio = std::exp2(2 * k0) / static_cast<double>(n);
    t.term1_unit = ratio / eps;
    t.term2_unit = t.sum_theta2 / (eps * eps);
    t.term3_unit = t.sum_theta4 / (ratio * eps * eps * eps);
    t.total_unit = t.term1_unit + t.term2_unit + t.term3_unit;
    t.term1 = pc.thm3_C * t.term1_unit;
    t.term2 = pc.thm3_D1 * t.term2_unit;
    t.term3 = pc.thm3_D2 * t.term3_unit;
    t.total = t.term1 + t.term2 + t.term3;
    return t;
}

namespace {

struct MeanSd {
    double mean = 0.0, se = 0.0;
};

MeanSd mean_se(const std::vector<double>& xs) {
    MeanSd r;
    if (xs.empty()) return r;
    double s = 0.0;
    for (double x : xs) s += x;
    r.mean = s / static_cast<double>(xs.size());
    if (xs.size() < 2) return r;
    double v = 0.0;
    for (double x : xs) v += (x - r.mean) * (x - r.mean);
    v /= static_cast<double>(xs.size() - 1);
    r.se = std::sqrt(v / static_cast<double>(xs.size()));
    return r;
}

}  // namespace

DecompositionEstimate decomposition_estimate(const DensityModel& f, std::int64_t n,
                                             int k0, int k1, int replicates,
                                             std::uint64_t seed, Exec policy) {
    if (!(k0 < k1)) throw std::invalid_argument("decomposition_estimate: need k0 < k1");
    if (replicates < 2) throw std::invalid_argument("decomposition_estimate: replicates < 2");

    DecompositionEstimate est;
    est.replicates = replicates;
    est.seed = seed;
    const auto R = static_cast<std::size_t>(replicates);

    // --- sampled count pyramids on both sides ---
    const std::int64_t fine_cells = cells_at(k1);
    std::vector<double> lambda_fine(static_cast<std::size_t>(fine_cells));
    for (std::int64_t l = 0; l < fine_cells; ++l)
        lambda_fine[static_cast<std::size_t>(l)] =
            static_cast<double>(n) * f.integrate_cell({k1, l});

    auto sum_up = [&](std::vector<std::int64_t> fine) {
        CountPyramid pyr;
        pyr.k0 = k0;
        pyr.k1 = k1;
        pyr.counts.resize(static_cast<std::size_t>(k1 - k0 + 1));
        pyr.counts.back() = std::move(fine);
        for (int k = k1 - 1; k >= k0; --k) {
            const auto& dn = pyr.counts[static_cast<std::size_t>(k - k0 + 1)];
            auto& up = pyr.counts[static_cast<std::size_t>(k - k0)];
            up.assign(static_cast<std::size_t>(cells_at(k)), 0);
            for (std::size_t l = 0; l < up.size(); ++l) up[l] = dn[2 * l] + dn[2 * l + 1];
        }
        return pyr;
    };

    std::vector<CountPyramid> pyr_g(R), pyr_gstar(R);
    for (std::size_t r = 0; r < R; ++r) {
        std::vector<std::int64_t> fine(static_cast<std::size_t>(fine_cells));
        for (std::int64_t l = 0; l < fine_cells; ++l) {
            CounterStream s(seed, StreamUse::poisson_count, static_cast<std::uint64_t>(k1),
                            static_cast<std::uint64_t>(l), r);
            fine[static_cast<std::size_t>(l)] =
                poisson_draw(lambda_fine[static_cast<std::size_t>(l)], s);
        }
        pyr_g[r] = sum_up(std::move(fine));

        const WhiteNoisePath path = simulate_white_noise(f, n, k1, seed, r);
        pyr_gstar[r] = inverse_map(analyze_path(path, k0)).pyramid;
    }

    // --- exact base term: product form over independent level-k0 cells ---
    const std::int64_t base_cells = cells_at(k0);
    const double sigma0 = std::sqrt(std::ldexp(1.0, k0) / (4.0 * static_cast<double>(n)));
    std::vector<double> base_h2(static_cast<std::size_t>(base_cells));
    for_each_index(policy, base_cells, [&](std::size_t l) {
        const auto li = static_cast<std::int64_t>(l);
        const double lam = static_cast<double>(n) * f.integrate_cell({k0, li});
        const double mu = f.sqrt_cell_mean({k0, li}) / sigma0;
        base_h2[l] = hellinger_sq(CouplingDensity::poisson_root(lam), {mu});
    });
    double prod = 1.0;
    for (double h : base_h2) prod *= 1.0 - 0.5 * h;
    est.base_term = 2.0 - 2.0 * prod;

    // --- detail terms: distinct (k, l, m) cells evaluated once ---
    struct TaskKey {
        int k;
        std::int64_t l;
        std::int64_t m;
        auto operator<=>(const TaskKey&) const = default;
    };
    std::map<TaskKey, double> h2_memo;
    for (std::size_t r = 0; r < R; ++r) {
        for (int k = k0 + 1; k <= k1; ++k) {
            const std::int64_t half = cells_at(k - 1);
            for (std::int64_t l = 0; l < half; ++l) {
                h2_memo[{k, l, pyr_g[r].at(k - 1, l)}] = 0.0;
                h2_memo[{k, l, pyr_gstar[r].at(k - 1, l)}] = 0.0;
            }
        }
    }
    std::vector<std::pair<TaskKey, double>> tasks(h2_memo.begin(), h2_memo.end());

    // per-cell split probabilities and Gaussian means, shared by all tasks
    std::map<std::pair<int, std::int64_t>, std::pair<double, double>> cell_pb;
    for (int k = k0 + 1; k <= k1; ++k) {
        const std::int64_t half = cells_at(k - 1);
        const double scale = std::sqrt(4.0 * static_cast<double>(n)) *
                             std::exp2(-0.5 * (k + 1));
        for (std::int64_t l = 0; l < half; ++l) {
            const double p = f.split_probability({k - 1, l});
            const double beta_star =
                scale * (f.sqrt_cell_mean({k, 2 * l}) - f.sqrt_cell_mean({k, 2 * l + 1}));
            cell_pb[{k, l}] = {p, beta_star};
        }
    }

    for_each_index(policy, static_cast<std::ptrdiff_t>(tasks.size()), [&](std::size_t i) {
        const TaskKey& key = tasks[i].first;
        const auto [p, beta_star] = cell_pb.at({key.k, key.l});
        if (p == 0.5 || key.m == 0) {  // exactly standard normal
            tasks[i].second = gaussian_hellinger_sq(0.0, beta_star).exact;
        } else {
            tasks[i].second =
                hellinger_sq(CouplingDensity::binomial_coupled(key.m, p), {beta_star});
        }
    });
    for (const auto& [key, value] : tasks) h2_memo[key] = value;

    // --- assemble per-replicate level sums, then the statistics ---
    const int nlevels = k1 - k0;
    std::vector<std::vector<double>> sums_g(static_cast<std::size_t>(nlevels)),
        sums_gstar(static_cast<std::size_t>(nlevels));
    for (auto& v : sums_g) v.assign(R, 0.0);
    for (auto& v : sums_gstar) v.assign(R, 0.0);

    for (std::size_t r = 0; r < R; ++r) {
        for (int k = k0 + 1; k <= k1; ++k) {
            const std::int64_t half = cells_at(k - 1);
            double sg = 0.0, sgs = 0.0;
            for (std::int64_t l = 0; l < half; ++l) {
                sg += h2_memo.at({k, l, pyr_g[r].at(k - 1, l)});
                sgs += h2_memo.at({k, l, pyr_gstar[r].at(k - 1, l)});
            }
            sums_g[static_cast<std::size_t>(k - k0 - 1)][r] = sg;
            sums_gstar[static_cast<std::size_t>(k - k0 - 1)][r] = sgs;
        }
    }

    std::vector<double> rep_total(R, 0.0);
    for (int k = k0 + 1; k <= k1; ++k) {
        const auto ki = static_cast<std::size_t>(k - k0 - 1);
        DecompositionLevel lev;
        lev.k = k;
        const MeanSd g_stats = mean_se(sums_g[ki]);
        const MeanSd gs_stats = mean_se(sums_gstar[ki]);
        lev.mean_g = g_stats.mean;
        lev.se_g = g_stats.se;
        lev.mean_gstar = gs_stats.mean;
        lev.se_gstar = gs_stats.se;
        lev.surrogate = 0.5 * (lev.mean_g + lev.mean_gstar);
        lev.se = 0.5 * std::sqrt(lev.se_g * lev.se_g + lev.se_gstar * lev.se_gstar);

        // per-cell diagnostics (means over replicates and both sides)
        const std::int64_t half = cells_at(k - 1);
        lev.cells.reserve(static_cast<std::size_t>(half));
        for (std::int64_t l = 0; l < half; ++l) {
            DecompositionCell cd;
            cd.k = k;
            cd.l = l;
            const auto [p, beta_star] = cell_pb.at({k, l});
            cd.p = p;
            cd.beta_star = beta_star;
            const double lam_parent =
                static_cast<double>(n) * f.integrate_cell({k - 1, l}) ;
            cd.beta = std::sqrt(lam_parent) * (2.0 * p - 1.0);
            double msum = 0.0, musum = 0.0, hsum = 0.0;
            for (std::size_t r = 0; r < R; ++r) {
                for (const CountPyramid* pyr : {&pyr_g[r], &pyr_gstar[r]}) {
                    const std::int64_t m = pyr->at(k - 1, l);
                    msum += static_cast<double>(m);
                    musum += std::sqrt(static_cast<double>(m)) * (2.0 * p - 1.0);
                    hsum += h2_memo.at({k, l, m});
                }
            }
            const double denom = 2.0 * static_cast<double>(R);
            cd.mean_m = msum / denom;
            cd.mean_mu = musum / denom;
            cd.mean_h2 = hsum / denom;
            lev.cells.push_back(cd);
        }
        est.levels.push_back(std::move(lev));

        for (std::size_t r = 0; r < R; ++r)
            rep_total[r] += 0.5 * (sums_g[ki][r] + sums_gstar[ki][r]);
    }

    const MeanSd total_stats = mean_se(rep_total);
    est.detail_total = total_stats.mean;
    est.detail_se = total_stats.se;
    est.total = est.base_term + est.detail_total;
    est.total_se = est.detail_se;
    return est;
}

BoundReport tusnady_check(const std::vector<std::int64_t>& ms, Exec policy) {
    BoundReport rep;
    rep.name = "tusnady";
    rep.columns = {"m", "ratio_sup_A1", "max_absdev_admissible", "c2_sup", "rows_admissible"};
    rep.rows.assign(ms.size(), {});

    for_each_index(policy, static_cast<std::ptrdiff_t>(ms.size()), [&](std::size_t i) {
        const std::int64_t m = ms[i];
        const TusnadyBoundaryTable t = tusnady_boundaries(m);
        const double md = static_cast<double>(m);
        const double logm = std::log(md);
        double sup = 0.0, maxdev = 0.0;
        std::int64_t admissible = 0;
        for (const TusnadyRow& row : t.rows) {
            if (row.u * row.u > 0.5 * md) continue;
            ++admissible;
            const double dev = std::abs(row.z - row.u);
            maxdev = std::max(maxdev, dev);
            sup = std::max(sup, dev * md / (std::abs(row.u * row.u * row.u) + logm));
        }

        // Eq (5.10) at piece midpoints: z' jumps at the z_j, z' = u_j + 1/sqrt(m)
        // inside piece j
        double c2 = 0.0;
        for (std::size_t j = 0; j + 1 < t.rows.size(); ++j) {
            if (t.rows[j].saturated || t.rows[j + 1].saturated) continue;
            const double zmid = 0.5 * (t.rows[j].z + t.rows[j + 1].z);
            if (zmid * zmid > 2.0 * md) continue;
            const double zprime = t.rows[j].u + 1.0 / std::sqrt(md);
            const double rhs = 1.0 / std::sqrt(md) + std::abs(zmid * zmid * zmid) / md;
            c2 = std::max(c2, std::abs(zmid - zprime) / rhs);
        }
        rep.rows[i] = {md, sup, maxdev, c2, static_cast<double>(admissible)};
    });

    double sup = 0.0, c2 = 0.0;
    for (const auto& r : rep.rows) {
        sup = std::max(sup, r[1]);
        c2 = std::max(c2, r[3]);
    }
    rep.ratio_sup = sup;
    rep.scalars["C2_sup"] = c2;
    return rep;
}

double poisson_sqrt_fourth_moment(double lambda) {
    if (lambda == 0.0) return 0.0;
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson_sqrt_fourth_moment: lambda < 0");
    const double sql = std::sqrt(lambda);
    KahanSum acc;
    const auto jhi = static_cast<std::int64_t>(lambda + 50.0 * sql + 200.0);
    for (std::int64_t j = 0; j <= jhi; ++j) {
        const double d = std::sqrt(static_cast<double>(j)) - sql;
        const double d2 = d * d;
        acc.add(std::exp(log_poisson_pmf(lambda, j)) * d2 * d2);
    }
    return acc.s;
}

double poisson_root_shift_bound(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson_root_shift_bound: lambda <= 0");
    const double sql = std::sqrt(lambda);
    KahanSum acc;
    const auto jhi = static_cast<std::int64_t>(lambda + 50.0 * sql + 200.0);
    for (std::int64_t j = 0; j <= jhi; ++j)
        acc.add(std::exp(log_poisson_pmf(lambda, j)) * std::sqrt(static_cast<double>(j)) / sql);
    return 1.0 - acc.s;
}

BoundReport lemma_checks(const DensityModel& f, int levels,
                         const std::vector<double>& lambdas, double c, int k0,
                         int k_max, Exec policy) {
    if (levels < 0 || levels > 16) throw std::invalid_argument("lemma_checks: levels outside [0,16]");
    BoundReport rep;
    rep.name = "lemmas";
    rep.columns = {"kind", "k_or_lambda", "l", "lhs", "rhs"};

    // Lemma 1, (A.4) and (A.5), on every cell up to `levels`
    std::vector<DyadicIndex> cells;
    for (int k = 0; k <= levels; ++k)
        for (std::int64_t l = 0; l < cells_at(k); ++l) cells.push_back({k, l});
    std::vector<std::vector<double>> rows_a4(cells.size()), rows_a5(cells.size());
    for_each_index(policy, static_cast<std::ptrdiff_t>(cells.size()), [&](std::size_t i) {
        const DyadicIndex idx = cells[i];
        const double fk = f.cell_mean(idx);
        const double hk = f.sqrt_cell_mean(idx);
        const double dev2 = f.integrate_sq_dev(idx, fk);
        const double lhs4 = std::sqrt(fk) - hk;
        const double rhs4 = std::exp2(idx.level - 1) * std::pow(fk, -1.5) * dev2;
        rows_a4[i] = {4.0, static_cast<double>(idx.level), static_cast<double>(idx.pos),
                      lhs4, rhs4};
        const double theta = haar_coefficient(f, idx);
        const DyadicIndex cl{idx.level + 1, 2 * idx.pos};
        const DyadicIndex cr{idx.level + 1, 2 * idx.pos + 1};
        // Int h phi_{k,l} = 2^{-k/2-1} (h_{k+1,2l} - h_{k+1,2l+1})
        const double int_h_phi = std::exp2(-0.5 * idx.level - 1.0) *
                                 (f.sqrt_cell_mean(cl) - f.sqrt_cell_mean(cr));
        const double lhs5 = std::abs(int_h_phi - theta / (2.0 * std::sqrt(fk)));
        const double rhs5 = std::exp2(0.5 * idx.level - 1.0) * std::pow(fk, -1.5) * dev2;
        rows_a5[i] = {5.0, static_cast<double>(idx.level), static_cast<double>(idx.pos),
                      lhs5, rhs5};
    });
    for (auto& r : rows_a4) rep.rows.push_back(std::move(r));
    for (auto& r : rows_a5) rep.rows.push_back(std::move(r));

    // Lemma 2 with the supplied c
    {
        if (k_max > 18) throw std::invalid_argument("lemma_checks: k_max > 18");
        double lhs = 0.0, rhs_sum = 0.0;
        for (int k = k0; k <= k_max; ++k) {
            const std::int64_t nk = cells_at(k);
            std::vector<double> sq(static_cast<std::size_t>(nk));
            for_each_index(policy, nk, [&](std::size_t l) {
                const DyadicIndex idx{k, static_cast<std::int64_t>(l)};
                const double d = f.integrate_sq_dev(idx, f.cell_mean(idx));
                sq[l] = d * d;
            });
            double s = 0.0;
            for (double v : sq) s += v;
            lhs += std::exp2(k) * s;
            rhs_sum += std::exp2(k * (1.0 + c)) * level_theta_power_sum(f, k, 4, policy);
        }
        const double rhs = std::exp2(-c * k0) / std::pow(1.0 - std::exp2(-c), 2) * rhs_sum;
        rep.rows.push_back({2.0, static_cast<double>(k0), -1.0, lhs, rhs});
    }

    // Lemma 3 at each lambda
    for (double lam : lambdas)
        rep.rows.push_back({3.0, lam, -1.0, poisson_sqrt_fourth_moment(lam), 4.0});

    double worst = 0.0;  // max lhs/rhs over all rows with rhs > 0
    for (const auto& r : rep.rows)
        if (r[4] > 0.0) worst = std::max(worst, r[3] / r[4]);
    rep.ratio_sup = worst;
    return rep;
}

BoundReport rate_check_215(const DensityModel& f, const std::vector<std::int64_t>& ns,
                           const std::vector<double>& gamma, int replicates,
                           std::uint64_t seed, Exec policy) {
    if (replicates < 2) throw std::invalid_argument("rate_check_215: replicates < 2");
    BoundReport rep;
    rep.name = "rates";
    rep.seed = seed;
    rep.columns = {"n",           "k0",          "sqrtn_hell215", "se215_scaled",
                   "sqrtn_hell216", "se216_scaled", "l2_mean",       "l2_centered_mean",
                   "bias_exact",  "decomp_gap_se"};
    rep.rows.assign(ns.size(), {});

    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        const std::int64_t n = ns[ni];
        const int k0 = choose_k0(n, gamma);
        const std::int64_t cells = cells_at(k0);
        const double w = std::ldexp(1.0, -k0);

        std::vector<double> h(static_cast<std::size_t>(cells)),
            icell(static_cast<std::size_t>(cells)), fbar(static_cast<std::size_t>(cells));
        for (std::int64_t l = 0; l < cells; ++l) {
            h[static_cast<std::size_t>(l)] = f.sqrt_cell_mean({k0, l});
            icell[static_cast<std::size_t>(l)] = f.integrate_cell({k0, l});
            fbar[static_cast<std::size_t>(l)] = f.cell_mean({k0, l});
        }
        const double int_f_sq = f.integrate_sq(0.0, 1.0);
        double bias = int_f_sq;  // Int (f - fbar_{k0})^2 = Int f^2 - sum fbar^2 w
        for (std::int64_t l = 0; l < cells; ++l)
            bias -= fbar[static_cast<std::size_t>(l)] * fbar[static_cast<std::size_t>(l)] * w;

        const auto R = static_cast<std::size_t>(replicates);
        std::vector<double> hell215(R), hell216(R), l2(R), l2c(R);
        for_each_index(policy, static_cast<std::ptrdiff_t>(R), [&](std::size_t r) {
            auto bin_counts = [&](const std::vector<double>& pts) {
                std::vector<double> cnt(static_cast<std::size_t>(cells), 0.0);
                for (double x : pts)
                    cnt[static_cast<std::size_t>(std::floor(std::ldexp(x, k0)))] += 1.0;
                return cnt;
            };
            // fixed-size sample, Eq (2.15)
            CounterStream ps(seed, StreamUse::points, 0, static_cast<std::uint64_t>(n), r);
            std::vector<double> pts;
            pts.reserve(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) pts.push_back(f.quantile(ps.uniform_open()));
            const std::vector<double> cnt = bin_counts(pts);

            double aff = 0.0, sum_ft2 = 0.0, sum_ft_icell = 0.0, sum_c = 0.0;
            for (std::int64_t l = 0; l < cells; ++l) {
                const auto li = static_cast<std::size_t>(l);
                const double ft = std::ldexp(cnt[li], k0) / static_cast<double>(n);
                aff += std::sqrt(ft) * h[li] * w;
                sum_ft2 += ft * ft * w;
                sum_ft_icell += ft * icell[li];
                sum_c += (ft - fbar[li]) * (ft - fbar[li]) * w;
            }
            hell215[r] = 2.0 - 2.0 * aff;  // Int f~ = 1 here
            l2[r] = sum_ft2 - 2.0 * sum_ft_icell + int_f_sq;
            l2c[r] = sum_c;

            // Poisson-size sample, Eq (2.16)
            CounterStream cs(seed, StreamUse::poisson_count, 1,
                             static_cast<std::uint64_t>(n), r);
            const std::int64_t N = poisson_draw(static_cast<double>(n), cs);
            CounterStream ps2(seed, StreamUse::points, 1, static_cast<std::uint64_t>(n), r);
            std::vector<double> pts2;
            pts2.reserve(static_cast<std::size_t>(N));
            for (std::int64_t i = 0; i < N; ++i) pts2.push_back(f.quantile(ps2.uniform_open()));
            if (N == 0) {
                hell216[r] = 1.0;  // empty histogram: Int (0 - sqrt f)^2
            } else {
                const std::vector<double> cnt2 = bin_counts(pts2);
                double aff2 = 0.0, mass2 = 0.0;
                for (std::int64_t l = 0; l < cells; ++l) {
                    const auto li = static_cast<std::size_t>(l);
                    const double ft = std::ldexp(cnt2[li], k0) / static_cast<double>(N);
                    aff2 += std::sqrt(ft) * h[li] * w;
                    mass2 += ft * w;
                }
                hell216[r] = mass2 + 1.0 - 2.0 * aff2;
            }
        });

        const MeanSd s215 = mean_se(hell215);
        const MeanSd s216 = mean_se(hell216);
        const MeanSd sl2 = mean_se(l2);
        const MeanSd sl2c = mean_se(l2c);
        const double sqn = std::sqrt(static_cast<double>(n));
        // Eq (2.12): E l2 = E l2c + bias; report the gap in SE units
        const double gap = sl2.mean - sl2c.mean - bias;
        const double gap_se = std::sqrt(sl2.se * sl2.se + sl2c.se * sl2c.se);
        rep.rows[ni] = {static_cast<double>(n), static_cast<double>(k0),
                        sqn * s215.mean,        sqn * s215.se,
                        sqn * s216.mean,        sqn * s216.se,
                        sl2.mean,               sl2c.mean,
                        bias,                   gap_se > 0.0 ? gap / gap_se : 0.0};
    }
    return rep;
}

}  // namespace lecam
