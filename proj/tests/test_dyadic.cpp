#include <doctest.h>

#include <cmath>
#include <vector>

#include "lecam/density_model.hpp"
#include "lecam/dyadic.hpp"

using namespace lecam;

namespace {

DensityModel uniform_density() { return DensityModel::linear(1.0, 0.0, 1.0); }
DensityModel tilted_density() { return DensityModel::linear(0.5, 1.0, 0.5); }
DensityModel cosine_density() {
    return DensityModel::fourier({{1.0, 0.0}, {0.1, 0.0}}, 0.7);
}
DensityModel bump_density() { return DensityModel::haar_bump(2, 1, 0.1, 0.5); }

// Exact integral of phi_{a} * phi_{b}: both are step functions on the grid at
// level max+1, so sum over those cells.
double haar_product_integral(const DyadicIndex& a, const DyadicIndex& b) {
    const int fine = std::max(a.level, b.level) + 1;
    const std::int64_t cells = cells_at(fine);
    const double w = std::ldexp(1.0, -fine);
    double s = 0.0;
    for (std::int64_t i = 0; i < cells; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * w;
        s += haar_eval(a, x) * haar_eval(b, x) * w;
    }
    return s;
}

}  // namespace

TEST_CASE("cell endpoints") {
    CHECK(cell({0, 0}).lo == 0.0);
    CHECK(cell({0, 0}).hi == 1.0);
    CHECK(cell({2, 3}).lo == 0.75);
    CHECK(cell({2, 3}).hi == 1.0);
    CHECK_THROWS_AS(cell({3, 8}), std::invalid_argument);
    CHECK_THROWS_AS(cell({-1, 0}), std::invalid_argument);

    // cells at a fixed level partition [0,1)
    for (int k : {0, 1, 3, 5}) {
        double expect = 0.0;
        for (std::int64_t l = 0; l < cells_at(k); ++l) {
            const Interval I = cell({k, l});
            CHECK(I.lo == doctest::Approx(expect).epsilon(1e-15));
            expect = I.hi;
        }
        CHECK(expect == 1.0);
    }
}

TEST_CASE("haar_eval basic values") {
    CHECK(haar_eval({0, 0}, 0.25) == 1.0);
    CHECK(haar_eval({0, 0}, 0.75) == -1.0);
    CHECK(haar_eval({2, 1}, 0.30) == 2.0);
    CHECK(haar_eval({2, 0}, 0.30) == 0.0);
    CHECK_THROWS_AS(haar_eval({0, 0}, 1.0), std::invalid_argument);
}

TEST_CASE("haar orthonormality up to level 6") {
    std::vector<DyadicIndex> idx;
    for (int k = 0; k <= 6; ++k)
        for (std::int64_t l = 0; l < cells_at(k); ++l) idx.push_back({k, l});
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i; j < idx.size(); ++j) {
            const double v = haar_product_integral(idx[i], idx[j]);
            const double want = i == j ? 1.0 : 0.0;
            REQUIRE(v == doctest::Approx(want).epsilon(0).scale(1).epsilon(1e-12));
        }
}

TEST_CASE("haar coefficients of the constant and linear densities") {
    const DensityModel u = uniform_density();
    for (int k = 0; k <= 5; ++k)
        for (std::int64_t l = 0; l < cells_at(k); ++l)
            CHECK(haar_coefficient(u, {k, l}) == doctest::Approx(0.0).scale(1).epsilon(1e-15));

    const DensityModel f = tilted_density();
    CHECK(haar_coefficient(f, {0, 0}) == doctest::Approx(-0.25).epsilon(1e-14));
    // closed form for linear f: theta_{k,l} = -b 2^{-3k/2-2}
    for (int k = 0; k <= 8; ++k)
        for (std::int64_t l : {std::int64_t{0}, cells_at(k) - 1}) {
            const double want = -std::exp2(-1.5 * k - 2.0);
            CHECK(haar_coefficient(f, {k, l}) == doctest::Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("haar coefficient vs direct numerical integration (oracle)") {
    const DensityModel f = tilted_density();
    // Riemann sum on the half-cells is exact for linear f at midpoint rule
    for (const DyadicIndex idx : {DyadicIndex{1, 1}, DyadicIndex{3, 5}, DyadicIndex{5, 17}}) {
        const Interval I = cell(idx);
        const double mid = 0.5 * (I.lo + I.hi);
        const double amp = std::exp2(0.5 * idx.level);
        const double left_mid = 0.5 * (I.lo + mid), right_mid = 0.5 * (mid + I.hi);
        const double w = 0.5 * I.width();
        const double oracle = amp * w * ((0.5 + left_mid) - (0.5 + right_mid));
        CHECK(haar_coefficient(f, idx) == doctest::Approx(oracle).epsilon(1e-13));
    }
}

TEST_CASE("piecewise averages") {
    const StepFunction u3 = piecewise_average(uniform_density(), 3);
    for (double v : u3.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

    const StepFunction f1 = piecewise_average(tilted_density(), 1);
    REQUIRE(f1.values.size() == 2);
    CHECK(f1.values[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(f1.values[1] == doctest::Approx(1.25).epsilon(1e-14));

    const StepFunction f0 = piecewise_average(tilted_density(), 0);
    CHECK(f0.values[0] == doctest::Approx(1.0).epsilon(1e-14));

    // mean of the step function is 1 for every family
    for (const DensityModel& f :
         {uniform_density(), tilted_density(), cosine_density(), bump_density()})
        for (int k : {0, 2, 5})
            CHECK(piecewise_average(f, k).mean() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("refinement identity f_{k,l} = (f_{k+1,2l} + f_{k+1,2l+1})/2") {
    for (const DensityModel& f :
         {uniform_density(), tilted_density(), cosine_density(), bump_density()})
        for (int k = 0; k <= 6; ++k)
            for (std::int64_t l = 0; l < cells_at(k); ++l) {
                const double parent = f.cell_mean({k, l});
                const double kids = 0.5 * (f.cell_mean({k + 1, 2 * l}) +
                                           f.cell_mean({k + 1, 2 * l + 1}));
                REQUIRE(parent == doctest::Approx(kids).epsilon(1e-12));
            }
}

TEST_CASE("coefficient/average identity for p in {2,4}") {
    // ||fbar_k - fbar_{k+1}||_p^p = sum_l |theta_{k,l}|^p 2^{k(p/2-1)}
    for (const DensityModel& f : {tilted_density(), cosine_density(), bump_density()})
        for (int k = 0; k <= 5; ++k)
            for (double p : {2.0, 4.0}) {
                const StepFunction a = piecewise_average(f, k);
                const StepFunction b = piecewise_average(f, k + 1);
                double lhs = 0.0;
                const double w = std::ldexp(1.0, -(k + 1));
                for (std::size_t i = 0; i < b.values.size(); ++i) {
                    const double diff = std::abs(b.values[i] - a.values[i / 2]);
                    lhs += std::pow(diff, p) * w;
                }
                const double rhs =
                    level_theta_power_sum(f, k, p) * std::exp2(k * (0.5 * p - 1.0));
                REQUIRE(lhs == doctest::Approx(rhs).epsilon(1e-10));
            }
}

TEST_CASE("eq (3.9) cross-check: p - 1/2 = sqrt(2^{k-1}) theta / (2 f)") {
    for (const DensityModel& f : {tilted_density(), cosine_density(), bump_density()})
        for (int k = 1; k <= 6; ++k)
            for (std::int64_t l = 0; l < cells_at(k - 1); ++l) {
                const double p = f.split_probability({k - 1, l});
                const double rhs = std::exp2(0.5 * (k - 1)) *
                                   haar_coefficient(f, {k - 1, l}) /
                                   (2.0 * f.cell_mean({k - 1, l}));
                REQUIRE(p - 0.5 == doctest::Approx(rhs).epsilon(1e-11).scale(1));
            }
    // spot value from the tilted density: k=1 gives -1/8 = (-1/4)/2
    const double p = tilted_density().split_probability({0, 0});
    CHECK(p == doctest::Approx(0.375).epsilon(1e-14));
}

TEST_CASE("besov tails") {
    const DensityModel u = uniform_density();
    CHECK(besov_tail_norm(u, 0.5, 2, 2, 0) == 0.0);
    CHECK(besov_tail_norm(u, 0.5, 4, 4, 2) == 0.0);
    CHECK(besov_norm(u, 0.5, 2, 2) == doctest::Approx(1.0).epsilon(1e-14));

    // linear density: squared tail from k0 is 2^{-k0-3}
    const DensityModel f = tilted_density();
    const double tail = besov_tail_norm(f, 0.5, 2, 2, 0, 20);
    CHECK(tail * tail == doctest::Approx(0.125).epsilon(1e-5));
    const double norm = besov_norm(f, 0.5, 2, 2, 20);
    CHECK(norm == doctest::Approx(std::sqrt(1.125)).epsilon(1e-6));
    // direct summation oracle to k_max = 20
    double acc = 0.0;
    for (int k = 0; k <= 20; ++k) acc += std::exp2(-k - 4);
    CHECK(tail * tail == doctest::Approx(acc).epsilon(1e-12));
    // monotone nonincreasing in k0
    double prev = tail;
    for (int k0 = 1; k0 <= 6; ++k0) {
        const double t = besov_tail_norm(f, 0.5, 2, 2, k0, 20);
        CHECK(t <= prev);
        prev = t;
    }

    // single-coefficient bump: squared tail is 2^{k*} a^2 for k0 <= k*
    const DensityModel bump = bump_density();
    const double bt = besov_tail_norm(bump, 0.5, 2, 2, 0, 12);
    CHECK(bt * bt == doctest::Approx(4.0 * 0.01).epsilon(1e-12));
    const double bn = besov_norm(bump, 0.5, 2, 2, 12);
    CHECK(bn == doctest::Approx(std::sqrt(1.0 + 0.04)).epsilon(1e-12));

    CHECK_THROWS_AS(besov_tail_norm(f, 0.5, 3, 3, 0), std::invalid_argument);
}
