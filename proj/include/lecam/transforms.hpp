#pragma once

#include <cstdint>
#include <vector>

#include "lecam/density_model.hpp"
#include "lecam/dyadic.hpp"
#include "lecam/rng.hpp"

namespace lecam {

// Dyadic cell counts N_{k,l} for levels k0..k1, linked by sibling sums.
struct CountPyramid {
    int k0 = 0;
    int k1 = 0;
    std::vector<std::vector<std::int64_t>> counts;  // counts[k - k0][l]

    std::int64_t at(int k, std::int64_t l) const;
    std::int64_t total() const;  // count at any level (they agree)
    bool consistent() const;     // sibling sums hold
    bool operator==(const CountPyramid&) const = default;
};

// The transformed variables {Zbar_{k0}, W_k}: base coefficients at level k0
// and per-level detail coefficients at even positions (odd ones are the
// negations and stay implicit). sigma_k = sqrt(2^k / (4n)).
struct CoefficientStack {
    std::int64_t n = 0;
    int k0 = 0;
    int k1 = 0;
    std::vector<double> base;                  // 2^{k0} values
    std::vector<std::vector<double>> details;  // details[k - k0 - 1][l], levels k0+1..k1,
                                               // 2^{k-1} values each
    std::int64_t saturation_count = 0;

    double sigma(int k) const;
    const std::vector<double>& detail_level(int k) const;
};

// Normalized finest-level increments of the white-noise process:
// increments[l] = 2^{k1} (Z((l+1)/2^{k1}) - Z(l/2^{k1})).
struct WhiteNoisePath {
    std::int64_t n = 0;
    int k1 = 0;
    std::vector<double> increments;  // 2^{k1} values

    // path value at t = l / 2^{k1}
    double value_at_knot(std::int64_t l) const;
};

struct InverseResult {
    CountPyramid pyramid;
    std::int64_t clamped_cells = 0;   // negative rounded counts clamped to 0
    std::int64_t saturation_count = 0;
};

// Bin a point sample into dyadic counts: direct binning at k1, coarser
// levels by sibling sums.
CountPyramid count_pyramid(const PointProcessSample& sample, int k0, int k1);

// The equivalence map T_n on counts: Eq-style root transform at the base
// level, quantile coupling for the details.
CoefficientStack forward_map(const CountPyramid& pyramid, const DitherStream& dither,
                             std::int64_t n);

// Deterministic many-to-one inverse of forward_map: recovers every count
// exactly on forward_map output.
InverseResult inverse_map(const CoefficientStack& stack);

// Top-down refinement to level-k1 increments.
WhiteNoisePath reconstruct_path(const CoefficientStack& stack);

// Exact (to round-off) inverse of reconstruct_path.
CoefficientStack analyze_path(const WhiteNoisePath& path, int k0);

// Independent Gaussian increments with mean h_{k1,l} and sd sigma_{k1}.
WhiteNoisePath simulate_white_noise(const DensityModel& f, std::int64_t n, int k1,
                                    std::uint64_t seed, std::uint64_t replicate = 0);

// N ~ Poisson(n), then N i.i.d. points with density f.
PointProcessSample sample_poisson_process(const DensityModel& f, std::int64_t n,
                                          std::uint64_t seed, std::uint64_t replicate = 0);

// One Poisson draw by inversion from the mode; consumes one uniform.
std::int64_t poisson_draw(double lambda, CounterStream& stream);

// Histogram estimate at resolution k0: value (2^{k0}/count_used) * #points in
// each cell. Integrates to (#points)/count_used.
StepFunction histogram_estimate(const std::vector<double>& points,
                                std::int64_t count_used, int k0);

// Histogram floored at floor_eps and renormalized, so augmentation sampling
// stays well defined on empty cells.
StepFunction floored_histogram(const StepFunction& hist, double floor_eps);

double step_quantile(const StepFunction& step, double u);

// R^1_n: fixed-size sample -> Poisson-size sample, padding from the floored
// histogram estimate when the Poisson count exceeds n.
PointProcessSample randomize_to_poisson(const FixedSample& sample, int k0,
                                        double floor_eps, std::uint64_t seed,
                                        std::uint64_t replicate = 0);

// R^2_n: Poisson-size sample -> exactly n observations.
FixedSample randomize_to_fixed(const PointProcessSample& sample, std::int64_t n, int k0,
                               double floor_eps, std::uint64_t seed,
                               std::uint64_t replicate = 0);

// Smallest k0 with 4^{k0}/n >= gamma_{k0}; gamma extends past its last entry
// by that value.
int choose_k0(std::int64_t n, const std::vector<double>& gamma);

// Measurable realization of point positions from finest-level counts: the
// N_{k1,l} synthetic points sit evenly inside each cell.
PointProcessSample synthetic_points(const CountPyramid& pyramid);

}  // namespace lecam
