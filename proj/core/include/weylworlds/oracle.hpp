#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "weylworlds/config_space.hpp"
#include "weylworlds/weyl.hpp"

namespace weylworlds {

using Complex = std::complex<double>;

// Grid-sampled wavefunction. Norm is sum |psi|^2 sqrt(g) w with the same
// trapezoid weights as integrate().
class WaveFunction {
public:
    WaveFunction(Grid grid, Metric metric, std::vector<Complex> values, double t = 0.0,
                 double hbar = 1.0);

    const Grid& grid() const { return grid_; }
    const Metric& metric() const { return metric_; }
    std::span<const Complex> values() const { return values_; }
    std::span<Complex> values() { return values_; }
    Complex operator[](std::size_t i) const { return values_[i]; }
    double t() const { return t_; }
    void set_time(double t) { t_ = t; }
    double hbar() const { return hbar_; }

    double norm() const;
    void normalize();
    ScalarField density() const;

private:
    Grid grid_;
    Metric metric_;
    std::vector<Complex> values_;
    double t_;
    double hbar_;
};

// <a|b> with the norm's quadrature.
Complex overlap(const WaveFunction& a, const WaveFunction& b);

// psi * exp(i k.x).
WaveFunction boost(const WaveFunction& psi, std::span<const double> k);

enum class StateKind {
    ho_ground,           // coherent state of the isotropic oscillator (ground state when undisplaced)
    free_gaussian,       // spreading packet, V = 0
    angular_eigenstate,  // (x + i sgn(m) y)^|m| exp(-r^2 / (2 s^2)), oscillator eigenstate, n = 2 or 3
    double_gaussian,     // two free packets at -+center moving with +-momentum, combined with parity
};

StateKind parse_state_kind(const std::string& name);
std::string to_string(StateKind kind);

// Closed-form reference states. All coordinates share one mass; the metric
// is mass * identity.
//   ho_ground:          density width sqrt(hbar / (2 m omega)); center/momentum
//                       displace it into a coherent state.
//   free_gaussian:      density width sigma at t = 0, packet at center with
//                       mean momentum `momentum`.
//   angular_eigenstate: envelope width sqrt(hbar / (m omega)), winding m_w,
//                       node along the z axis (n = 3) or at the origin (n = 2).
//   double_gaussian:    two free_gaussian packets with parity +1 or -1.
struct AnalyticState {
    StateKind kind = StateKind::ho_ground;
    std::size_t dim = 1;
    double mass = 1.0;
    double omega = 1.0;
    double sigma = 1.0;
    double hbar = 1.0;
    Point center;    // empty means origin
    Point momentum;  // empty means zero
    int winding = 1;
    int parity = 1;
};

void validate(const AnalyticState& s);
Metric state_metric(const AnalyticState& s);

// Exact psi and its gradient at one point and time, unit norm under the
// measure sqrt(g) d^n x used by WaveFunction::norm.
Complex analytic_value(const AnalyticState& s, std::span<const double> x, double t);
Complex analytic_value(const AnalyticState& s, std::span<const double> x, double t,
                       std::span<Complex> grad);

WaveFunction analytic_state(const AnalyticState& s, const Grid& grid, double t);

// External potential the state is an exact solution for (zero for free kinds).
double analytic_potential(const AnalyticState& s, std::span<const double> x);
ScalarField analytic_potential(const AnalyticState& s, const Grid& grid);

// Closed-form density and momentum field hbar Im(psi* d psi) / |psi|^2; the
// momentum field is masked where the density is below eps_node * max.
ScalarField analytic_density(const AnalyticState& s, const Grid& grid, double t);
VectorField analytic_momentum(const AnalyticState& s, const Grid& grid, double t,
                              double eps_node = kDefaultNodeFloor);

// Exact zero set of the state. Empty for nodeless states.
struct NodeLocus {
    std::size_t codimension = 0;
    Point point;      // a point on the locus
    Point direction;  // line tangent for a codimension-2 line, normal for a plane
};
std::vector<NodeLocus> node_locus(const AnalyticState& s);

// Strang split-step propagator on a fully periodic grid: half potential
// kick, spectral kinetic step with g^aa k_a^2, half potential kick.
class SplitStepPropagator {
public:
    SplitStepPropagator(WaveFunction psi, const ScalarField& potential, double dt);
    ~SplitStepPropagator();
    SplitStepPropagator(SplitStepPropagator&&) noexcept;
    SplitStepPropagator& operator=(SplitStepPropagator&&) noexcept;

    void step(std::size_t steps = 1);
    const WaveFunction& state() const;
    double dt() const;

    // |psi| on the boundary faces must stay below this.
    static constexpr double kBoundaryTolerance = 1e-10;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

WaveFunction split_step_evolve(const WaveFunction& psi, const ScalarField& potential, double dt,
                               std::size_t steps);

struct Hydrodynamic {
    ScalarField mu;
    VectorField p;  // covariant, masked below the node floor
};

// mu = |psi|^2 and p_i = hbar Im(conj(psi) d_i psi) / |psi|^2.
Hydrodynamic decompose(const WaveFunction& psi, double eps_node = kDefaultNodeFloor,
                       int order = 2);

}  // namespace weylworlds
