#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "weylworlds/config_space.hpp"

namespace weylworlds {

// N worlds in n-dimensional configuration space. Labels are the initial
// positions and never change; positions and velocities are stored flat,
// world-major (world k occupies [k n, (k+1) n)).
class WorldEnsemble {
public:
    WorldEnsemble(std::size_t dim, std::vector<double> positions,
                  std::vector<double> velocities = {}, double t = 0.0);
    // Snapshot with labels that differ from the current positions.
    static WorldEnsemble restore(std::size_t dim, std::vector<double> labels,
                                 std::vector<double> positions, std::vector<double> velocities,
                                 double t);

    std::size_t size() const { return count_; }
    std::size_t dim() const { return dim_; }
    double t() const { return t_; }
    void set_time(double t) { t_ = t; }

    std::span<const double> label(std::size_t k) const { return {labels_.data() + k * dim_, dim_}; }
    std::span<const double> position(std::size_t k) const {
        return {positions_.data() + k * dim_, dim_};
    }
    std::span<double> position(std::size_t k) { return {positions_.data() + k * dim_, dim_}; }
    std::span<const double> velocity(std::size_t k) const {
        return {velocities_.data() + k * dim_, dim_};
    }
    std::span<double> velocity(std::size_t k) { return {velocities_.data() + k * dim_, dim_}; }

    std::span<const double> labels() const { return labels_; }
    std::span<const double> positions() const { return positions_; }
    std::span<double> positions() { return positions_; }
    std::span<const double> velocities() const { return velocities_; }
    std::span<double> velocities() { return velocities_; }

    bool all_finite() const;
    // Per-axis mean and standard deviation of the positions.
    double mean(std::size_t axis) const;
    double stddev(std::size_t axis) const;

private:
    std::size_t dim_;
    std::size_t count_;
    std::vector<double> labels_;
    std::vector<double> positions_;
    std::vector<double> velocities_;
    double t_;
};

// 1D only: index (in label order) of the first world whose position is not
// strictly above its predecessor's, if any.
std::optional<std::size_t> find_crossing(const WorldEnsemble& e);

enum class DensityMethod { kde, spacing1d, exact };
std::string to_string(DensityMethod m);
DensityMethod parse_density_method(const std::string& name);

struct DensityEstimate {
    ScalarField mu;
    DensityMethod method;
    std::vector<double> bandwidth;  // kde only, per axis
};

// mt19937_64 with distributions written out by hand, so draws are identical
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    // top 53 bits -> [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// i.i.d. draws: a cell is picked from the discrete CDF of mu * w, then the
// position is uniform within the cell's box (half a spacing either side,
// clipped to the grid). Labels are the drawn positions.
WorldEnsemble sample_from_density(const ScalarField& mu_ref, std::size_t count,
                                  std::uint64_t seed);

// 1D: worlds at the (k + 1/2)/N quantiles of mu_ref.
WorldEnsemble quantile_ensemble_1d(const ScalarField& mu_ref, std::size_t count);

// Per-axis Silverman bandwidth (4/(n+2))^(1/(n+4)) sigma_a N^(-1/(n+4)).
std::vector<double> silverman_bandwidth(const WorldEnsemble& e);

// Product-Gaussian kernel sum over worlds, normalized so that
// integrate(mu, g) = 1. Each bandwidth must exceed the grid spacing.
DensityEstimate estimate_density_kde(const WorldEnsemble& e, const Grid& grid,
                                     std::span<const double> bandwidth, const Metric& g);
DensityEstimate estimate_density_kde(const WorldEnsemble& e, const Grid& grid, double bandwidth,
                                     const Metric& g);

// 1D reciprocal-spacing estimate. Sorted worlds are grouped into gaps of
// `stride` neighbours each; m / (N dq) is the mean density over a gap
// holding m worlds' worth of probability. ln mu is a cubic spline through
// the gap midpoints, adjusted so that its gap means match, with quadratic
// ln mu tails beyond the outermost worlds. stride = 1 resolves single
// spacings; larger strides suppress the short-wavelength spacing modes that
// make self-contained dynamics stiff. 0 selects default_spacing_stride.
DensityEstimate estimate_density_spacing_1d(const WorldEnsemble& e, const Grid& grid,
                                            const Metric& g, std::size_t stride = 0);
// About 25 gaps regardless of N.
std::size_t default_spacing_stride(std::size_t count);

struct DistributionDistance {
    double ks = 0.0;  // largest marginal Kolmogorov-Smirnov statistic
    double l1 = 0.0;  // integral |kde - mu_ref| (negative when not computed)
};

DistributionDistance distribution_distance(const WorldEnsemble& e, const ScalarField& mu_ref,
                                           const Metric& g, bool with_l1 = true);

// Marginal KS statistic along one axis.
double marginal_ks(const WorldEnsemble& e, const ScalarField& mu_ref, std::size_t axis);

// integral |a - b| sqrt(g) over the grid.
double l1_distance(const ScalarField& a, const ScalarField& b, const Metric& g);

}  // namespace weylworlds
