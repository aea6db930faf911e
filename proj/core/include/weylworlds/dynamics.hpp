#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weylworlds/config_space.hpp"
#include "weylworlds/ensemble.hpp"
#include "weylworlds/interpolation.hpp"
#include "weylworlds/oracle.hpp"
#include "weylworlds/weyl.hpp"

namespace weylworlds {

// External potential V (time independent) plus the coupling lambda (an
// action; lambda = hbar for quantum mechanics, 0 for the classical limit).
struct PotentialSpec {
    std::function<double(std::span<const double>)> value;  // empty: V = 0
    // covariant dV; empty: central difference of `value`
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    double lambda = 1.0;
    std::optional<double> gamma;  // defaults to weyl_coupling(n)

    double V(std::span<const double> x) const;
    void dV(std::span<const double> x, std::span<double> out) const;
    double coupling(std::size_t n) const;
};

// V = 1/2 omega^2 g_ij x^i x^j (isotropic oscillator in mass-weighted form).
PotentialSpec harmonic_potential(const Metric& g, double omega, double lambda);
// V sampled on a grid, interpolated between grid points.
PotentialSpec grid_potential(ScalarField v, double lambda, int order = 2,
                             Interpolation scheme = Interpolation::cubic);

ScalarField sample_potential(const PotentialSpec& p, const Grid& grid);

// Q = -(lambda^2 / 2) laplace_beltrami(sqrt mu) / sqrt mu, masked at nodes.
ScalarField quantum_potential(const ScalarField& mu, const Metric& g, double lambda,
                              double eps_node = kDefaultNodeFloor, int order = 2);

// F^i = -g^ij d_j (V + Q) on the grid (contravariant).
VectorField total_force(const PotentialSpec& p, const ScalarField& mu, const Metric& g,
                        double eps_node = kDefaultNodeFloor, int order = 2);

enum class Scheme { velocity_verlet, euler_guided };
enum class DensityRefresh { every_step, exact_oracle };
// What happens when a world's interpolation stencil reaches a node cell.
enum class NodePolicy { error, extrapolate };

std::string to_string(Scheme s);
std::string to_string(DensityRefresh r);
std::string to_string(NodePolicy p);
Scheme parse_scheme(const std::string& s);
DensityRefresh parse_density_refresh(const std::string& s);
NodePolicy parse_node_policy(const std::string& s);

struct IntegratorConfig {
    double dt = 1e-3;
    std::size_t steps = 1;
    Scheme scheme = Scheme::velocity_verlet;
    DensityRefresh refresh = DensityRefresh::every_step;
    DensityMethod estimator = DensityMethod::kde;
    std::vector<double> bandwidth;  // kde; empty selects Silverman per step
    std::size_t spacing_stride = 0;  // spacing1d; 0 selects default_spacing_stride
    double eps_node = kDefaultNodeFloor;
    int order = 2;
    Interpolation interpolation = Interpolation::cubic;
    NodePolicy node_policy = NodePolicy::extrapolate;
    bool stability_check = true;
};

struct StepReport {
    std::size_t step = 0;
    double t = 0.0;
    std::vector<std::string> warnings;
};

// mu at time t, used by DensityRefresh::exact_oracle.
using DensitySource = std::function<ScalarField(double)>;

// Self-contained dynamics: the ensemble's own density drives the force.
// Velocity Verlet; the density (hence Q) is rebuilt once per step from the
// position snapshot after the drift and serves both the closing half-kick
// and the next step's opening half-kick.
class SelfContainedIntegrator {
public:
    SelfContainedIntegrator(Grid grid, Metric g, PotentialSpec potential, IntegratorConfig cfg,
                            DensitySource exact = {});

    StepReport step(WorldEnsemble& e);
    std::vector<StepReport> run(WorldEnsemble& e, std::size_t steps);

    // Largest admissible dt for the current state:
    //   0.1 min(h / sqrt(2 max|Q+V| / m_min), 2 pi / omega_max)
    // with the maxima taken over world positions.
    double stable_dt(const WorldEnsemble& e);

    // 1/2 g v.v + V + Q per world with the density of the latest build.
    std::vector<double> world_energies(const WorldEnsemble& e);

    const ScalarField& density() const { return *mu_; }
    const ScalarField& quantum_potential_field() const { return *q_; }
    std::size_t steps_taken() const { return step_; }

private:
    void rebuild(const WorldEnsemble& e, std::vector<std::string>& warnings);
    void forces(const WorldEnsemble& e, std::vector<double>& out,
                std::vector<std::string>& warnings);

    Grid grid_;
    Metric metric_;
    PotentialSpec potential_;
    IntegratorConfig cfg_;
    DensitySource exact_;
    std::optional<ScalarField> mu_;
    std::optional<ScalarField> q_;
    std::optional<VectorField> dq_;  // covariant dQ
    std::vector<double> force_;      // cached forces at current positions
    std::size_t step_ = 0;
    bool checked_ = false;
};

// Covariant momentum field p_i = d_i S at time t.
using MomentumSource = std::function<VectorField(double)>;

struct GuidedOptions {
    Interpolation interpolation = Interpolation::cubic;
    NodePolicy node_policy = NodePolicy::error;
    bool check_crossing = true;
};

// One guided step q' = q + dt v(q + dt/2 v(q, t), t + dt/2), v^i = g^ij p_j
// (explicit midpoint rule). Velocities are set to the midpoint velocity.
StepReport step_guided(WorldEnsemble& e, const MomentumSource& p, const Metric& g, double dt,
                       const GuidedOptions& opt = {});

// Momentum source backed by the split-step oracle. Requests must be
// nondecreasing multiples of the propagator step.
class OracleMomentumSource {
public:
    OracleMomentumSource(WaveFunction psi0, const ScalarField& potential, double dt,
                         double eps_node = kDefaultNodeFloor, int order = 2);
    VectorField operator()(double t);
    ScalarField density(double t);
    const WaveFunction& state(double t);

private:
    struct State;
    std::shared_ptr<State> state_;
};

// Cells used by the residuals: at least `margin` from non-periodic
// boundaries and masked cells, with mu > region_floor * max(mu).
struct ResidualOptions {
    int order = 2;
    double region_floor = 0.0;
    std::size_t margin = 0;  // 0: twice the stencil radius
};

// max |d_t(sqrt g mu) + d_i(sqrt g mu v^i)|. With three snapshots the time
// derivative is centred on the middle one; with two, mu and v refer to the
// midpoint and mu there is the average.
double continuity_residual(std::span<const ScalarField> mu_t, const VectorField& velocity,
                           const Metric& g, double dt, const ResidualOptions& opt = {});

// max |d_t S + 1/2 g^ij p_i p_j + V + Q| with p = dS.
double hamilton_jacobi_residual(const ScalarField& dS_dt, const VectorField& p,
                                const ScalarField& mu, const PotentialSpec& potential,
                                const Metric& g, const ResidualOptions& opt = {});
// Same, from S snapshots (centred difference on the middle of three, or
// midpoint of two).
double hamilton_jacobi_residual(std::span<const ScalarField> S_t, const ScalarField& mu,
                                const PotentialSpec& potential, const Metric& g, double dt,
                                const ResidualOptions& opt = {});

}  // namespace weylworlds
