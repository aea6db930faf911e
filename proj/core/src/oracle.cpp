#include "weylworlds/oracle.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stencil.hpp"
#include "weylworlds/error.hpp"
#include "weylworlds/parallel.hpp"

namespace weylworlds {

using std::numbers::pi;

WaveFunction::WaveFunction(Grid grid, Metric metric, std::vector<Complex> values, double t,
                           double hbar)
    : grid_(std::move(grid)), metric_(std::move(metric)), values_(std::move(values)), t_(t),
      hbar_(hbar) {
    if (values_.size() != grid_.size())
        throw InvalidArgument("wavefunction value count does not match grid");
    if (metric_.dim() != grid_.dim()) throw InvalidArgument("metric dimension does not match grid");
    if (!(hbar_ > 0.0)) throw InvalidArgument("hbar must be positive");
}

double WaveFunction::norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
        s += std::norm(values_[i]) * grid_.quadrature_weight(i);
    return s * metric_.sqrt_g();
}

void WaveFunction::normalize() {
    const double nrm = norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalError("cannot normalize wavefunction");
    const double f = 1.0 / std::sqrt(nrm);
    for (Complex& v : values_) v *= f;
}

ScalarField WaveFunction::density() const {
    std::vector<double> mu(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) mu[i] = std::norm(values_[i]);
    return ScalarField(grid_, std::move(mu), "mu");
}

Complex overlap(const WaveFunction& a, const WaveFunction& b) {
    if (!(a.grid() == b.grid())) throw InvalidArgument("overlap of wavefunctions on different grids");
    Complex s = 0.0;
    for (std::size_t i = 0; i < a.grid().size(); ++i)
        s += std::conj(a[i]) * b[i] * a.grid().quadrature_weight(i);
    return s * a.metric().sqrt_g();
}

WaveFunction boost(const WaveFunction& psi, std::span<const double> k) {
    const Grid& grid = psi.grid();
    if (k.size() != grid.dim()) throw InvalidArgument("boost vector has wrong dimension");
    std::vector<Complex> v(psi.values().begin(), psi.values().end());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double ph = 0.0;
        for (std::size_t a = 0; a < grid.dim(); ++a) ph += k[a] * grid.coord(i, a);
        v[i] *= std::polar(1.0, ph);
    }
    return WaveFunction(grid, psi.metric(), std::move(v), psi.t(), psi.hbar());
}

// ---------------------------------------------------------------------------
// closed-form states

StateKind parse_state_kind(const std::string& name) {
    if (name == "ho_ground") return StateKind::ho_ground;
    if (name == "free_gaussian") return StateKind::free_gaussian;
    if (name == "angular_eigenstate" || name == "angular_eigenstate_3d")
        return StateKind::angular_eigenstate;
    if (name == "double_gaussian") return StateKind::double_gaussian;
    throw InvalidArgument("unknown analytic state kind '" + name + "'");
}

std::string to_string(StateKind kind) {
    switch (kind) {
    case StateKind::ho_ground: return "ho_ground";
    case StateKind::free_gaussian: return "free_gaussian";
    case StateKind::angular_eigenstate: return "angular_eigenstate";
    case StateKind::double_gaussian: return "double_gaussian";
    }
    return "?";
}

namespace {

double component(const Point& v, std::size_t a) { return v.empty() ? 0.0 : v[a]; }

// 1D free packet: density width sigma at t = 0, centre x0, wavenumber k0.
// Returns psi and writes d psi / dx.
Complex free_packet(double x, double t, double x0, double k0, double sigma, double m,
                    double hbar, Complex& dpsi) {
    const double tau = hbar * t / (2.0 * m * sigma * sigma);
    const Complex z(1.0, tau);
    const double u = x - x0;
    const Complex i(0.0, 1.0);
    const Complex expo =
        (-u * u / (4.0 * sigma * sigma) + i * k0 * u - i * sigma * sigma * k0 * k0 * tau) / z;
    const Complex psi = std::pow(2.0 * pi * sigma * sigma, -0.25) / std::sqrt(z) * std::exp(expo);
    dpsi = psi * (-u / (2.0 * sigma * sigma) + i * k0) / z;
    return psi;
}

// 1D oscillator coherent state (ground state when x0 = p0 = 0).
Complex coherent_packet(double x, double t, double x0, double p0, double m, double w,
                        double hbar, Complex& dpsi) {
    const double xc = x0 * std::cos(w * t) + p0 / (m * w) * std::sin(w * t);
    const double pc = p0 * std::cos(w * t) - m * w * x0 * std::sin(w * t);
    const Complex i(0.0, 1.0);
    const double u = x - xc;
    const Complex expo =
        -m * w * u * u / (2.0 * hbar) + i * pc * (x - 0.5 * xc) / hbar - i * w * t / 2.0;
    const Complex psi = std::pow(m * w / (pi * hbar), 0.25) * std::exp(expo);
    dpsi = psi * (-m * w * u / hbar + i * pc / hbar);
    return psi;
}

// Product of 1D free packets centred at cs * center with mean momentum
// ps * momentum; gradient written to grad.
Complex free_product(const AnalyticState& s, std::span<const double> x, double t, double cs,
                     double ps, std::span<Complex> grad) {
    const std::size_t n = x.size();
    Complex psi = 1.0;
    std::vector<Complex> f(n), df(n);
    for (std::size_t a = 0; a < n; ++a) {
        const double x0 = cs * component(s.center, a);
        const double k0 = ps * component(s.momentum, a) / s.hbar;
        f[a] = free_packet(x[a], t, x0, k0, s.sigma, s.mass, s.hbar, df[a]);
        psi *= f[a];
    }
    for (std::size_t a = 0; a < n; ++a) {
        Complex g = df[a];
        for (std::size_t b = 0; b < n; ++b)
            if (b != a) g *= f[b];
        grad[a] = g;
    }
    return psi;
}

double double_gaussian_scale(const AnalyticState& s) {
    // <f1|f2> for packets at -c (momentum +p) and +c (momentum -p)
    Complex ov = 1.0;
    for (std::size_t a = 0; a < s.dim; ++a) {
        const double a1 = -component(s.center, a), a2 = -a1;
        const double k1 = component(s.momentum, a) / s.hbar, k2 = -k1;
        const double d = a1 - a2, mid = 0.5 * (a1 + a2), dk = k2 - k1;
        const double re = -d * d / (8.0 * s.sigma * s.sigma) - s.sigma * s.sigma * dk * dk / 2.0;
        const double im = dk * mid - k2 * a2 + k1 * a1;
        ov *= std::exp(Complex(re, im));
    }
    const double nrm = 2.0 + 2.0 * s.parity * ov.real();
    if (!(nrm > 1e-14)) throw InvalidArgument("double_gaussian lobes cancel exactly");
    return 1.0 / std::sqrt(nrm);
}

double factorial(int m) {
    double f = 1.0;
    for (int k = 2; k <= m; ++k) f *= k;
    return f;
}

}  // namespace

void validate(const AnalyticState& s) {
    if (s.dim < 1) throw InvalidArgument("state dimension must be positive");
    if (!(s.mass > 0.0) || !(s.hbar > 0.0)) throw InvalidArgument("mass and hbar must be positive");
    if (!s.center.empty() && s.center.size() != s.dim)
        throw InvalidArgument("state center has wrong dimension");
    if (!s.momentum.empty() && s.momentum.size() != s.dim)
        throw InvalidArgument("state momentum has wrong dimension");
    switch (s.kind) {
    case StateKind::ho_ground:
        if (!(s.omega > 0.0)) throw InvalidArgument("oscillator frequency must be positive");
        break;
    case StateKind::free_gaussian:
        if (!(s.sigma > 0.0)) throw InvalidArgument("packet width must be positive");
        break;
    case StateKind::angular_eigenstate:
        if (!(s.omega > 0.0)) throw InvalidArgument("oscillator frequency must be positive");
        if (s.dim != 2 && s.dim != 3)
            throw InvalidArgument("angular_eigenstate needs dimension 2 or 3");
        if (std::abs(s.winding) > 12) throw InvalidArgument("winding too large");
        break;
    case StateKind::double_gaussian:
        if (!(s.sigma > 0.0)) throw InvalidArgument("packet width must be positive");
        if (s.parity != 1 && s.parity != -1) throw InvalidArgument("parity must be +1 or -1");
        break;
    }
}

Metric state_metric(const AnalyticState& s) {
    return Metric(std::vector<double>(s.dim, s.mass));
}

namespace {

// Normalized against plain d^n x.
Complex flat_value(const AnalyticState& s, std::span<const double> x, double t,
                   std::span<Complex> grad) {
    const std::size_t n = s.dim;
    if (x.size() != n || grad.size() != n) throw InvalidArgument("point has wrong dimension");
    switch (s.kind) {
    case StateKind::ho_ground: {
        Complex psi = 1.0;
        std::vector<Complex> f(n), df(n);
        for (std::size_t a = 0; a < n; ++a) {
            f[a] = coherent_packet(x[a], t, component(s.center, a), component(s.momentum, a),
                                   s.mass, s.omega, s.hbar, df[a]);
            psi *= f[a];
        }
        for (std::size_t a = 0; a < n; ++a) {
            Complex g = df[a];
            for (std::size_t b = 0; b < n; ++b)
                if (b != a) g *= f[b];
            grad[a] = g;
        }
        return psi;
    }
    case StateKind::free_gaussian:
        return free_product(s, x, t, 1.0, 1.0, grad);
    case StateKind::double_gaussian: {
        std::vector<Complex> g1(n), g2(n);
        // lobe at -center moving with +momentum, mirrored lobe at +center
        const Complex a = free_product(s, x, t, -1.0, 1.0, g1);
        const Complex b = free_product(s, x, t, 1.0, -1.0, g2);
        const double c = double_gaussian_scale(s);
        for (std::size_t k = 0; k < n; ++k) grad[k] = c * (g1[k] + double(s.parity) * g2[k]);
        return c * (a + double(s.parity) * b);
    }
    case StateKind::angular_eigenstate: {
        const int mw = std::abs(s.winding);
        const double sgn = s.winding < 0 ? -1.0 : 1.0;
        const double s2 = s.hbar / (s.mass * s.omega);
        const double sig = std::sqrt(s2);
        std::vector<double> u(n);
        double r2 = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            u[a] = x[a] - component(s.center, a);
            r2 += u[a] * u[a];
        }
        const double norm =
            1.0 / std::sqrt(std::pow(pi, 0.5 * static_cast<double>(n)) * factorial(mw) *
                            std::pow(sig, 2.0 * mw + static_cast<double>(n)));
        const double energy = s.hbar * s.omega * (mw + 0.5 * static_cast<double>(n));
        const Complex i(0.0, 1.0);
        const Complex w(u[0], sgn * u[1]);
        const Complex wm = std::pow(w, mw);
        const Complex wm1 = mw > 0 ? std::pow(w, mw - 1) : Complex(0.0);
        const Complex env = norm * std::exp(Complex(-r2 / (2.0 * s2), -energy * t / s.hbar));
        const Complex psi = wm * env;
        grad[0] = (double(mw) * wm1 - u[0] / s2 * wm) * env;
        grad[1] = (i * sgn * double(mw) * wm1 - u[1] / s2 * wm) * env;
        for (std::size_t a = 2; a < n; ++a) grad[a] = -u[a] / s2 * psi;
        return psi;
    }
    }
    throw InvalidArgument("unknown analytic state kind");
}

}  // namespace

// The library measure is sqrt(g) d^n x = mass^(n/2) d^n x.
Complex analytic_value(const AnalyticState& s, std::span<const double> x, double t,
                       std::span<Complex> grad) {
    const double scale = std::pow(s.mass, -0.25 * static_cast<double>(s.dim));
    const Complex v = flat_value(s, x, t, grad) * scale;
    for (Complex& g : grad) g *= scale;
    return v;
}

Complex analytic_value(const AnalyticState& s, std::span<const double> x, double t) {
    std::vector<Complex> g(s.dim);
    return analytic_value(s, x, t, g);
}

WaveFunction analytic_state(const AnalyticState& s, const Grid& grid, double t) {
    validate(s);
    if (grid.dim() != s.dim) throw InvalidArgument("grid dimension does not match state");
    std::vector<Complex> v(grid.size());
    parallel_for(grid.size(), [&](std::size_t b, std::size_t e) {
        Point x(grid.dim());
        std::vector<Complex> g(grid.dim());
        for (std::size_t i = b; i < e; ++i) {
            for (std::size_t a = 0; a < grid.dim(); ++a) x[a] = grid.coord(i, a);
            v[i] = analytic_value(s, x, t, g);
        }
    });
    return WaveFunction(grid, state_metric(s), std::move(v), t, s.hbar);
}

double analytic_potential(const AnalyticState& s, std::span<const double> x) {
    if (s.kind != StateKind::ho_ground && s.kind != StateKind::angular_eigenstate) return 0.0;
    double r2 = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        const double u =
            x[a] - (s.kind == StateKind::angular_eigenstate ? component(s.center, a) : 0.0);
        r2 += u * u;
    }
    return 0.5 * s.mass * s.omega * s.omega * r2;
}

ScalarField analytic_potential(const AnalyticState& s, const Grid& grid) {
    return ScalarField::sample(
        grid, [&](std::span<const double> x) { return analytic_potential(s, x); }, "V");
}

ScalarField analytic_density(const AnalyticState& s, const Grid& grid, double t) {
    return analytic_state(s, grid, t).density();
}

VectorField analytic_momentum(const AnalyticState& s, const Grid& grid, double t,
                              double eps_node) {
    validate(s);
    if (grid.dim() != s.dim) throw InvalidArgument("grid dimension does not match state");
    const std::size_t n = grid.dim();
    std::vector<std::vector<double>> p(n, std::vector<double>(grid.size(), 0.0));
    std::vector<double> mu(grid.size());
    parallel_for(grid.size(), [&](std::size_t b, std::size_t e) {
        Point x(n);
        std::vector<Complex> g(n);
        for (std::size_t i = b; i < e; ++i) {
            for (std::size_t a = 0; a < n; ++a) x[a] = grid.coord(i, a);
            const Complex psi = analytic_value(s, x, t, g);
            mu[i] = std::norm(psi);
            if (mu[i] > 0.0)
                for (std::size_t a = 0; a < n; ++a)
                    p[a][i] = s.hbar * std::imag(std::conj(psi) * g[a]) / mu[i];
        }
    });
    VectorField out(grid, std::move(p), Variance::covariant, "p");
    out.set_mask(node_mask(ScalarField(grid, std::move(mu)), eps_node));
    return out;
}

std::vector<NodeLocus> node_locus(const AnalyticState& s) {
    validate(s);
    std::vector<NodeLocus> out;
    Point c(s.dim, 0.0);
    for (std::size_t a = 0; a < s.dim; ++a) c[a] = component(s.center, a);
    if (s.kind == StateKind::angular_eigenstate && s.winding != 0) {
        NodeLocus l;
        l.codimension = 2;
        l.point = c;
        if (s.dim == 3) l.direction = {0.0, 0.0, 1.0};
        out.push_back(l);
    } else if (s.kind == StateKind::double_gaussian && s.parity < 0) {
        // Exact zero plane x.c = 0 when the lobes move along the separation axis.
        double cn = 0.0;
        for (double v : c) cn += v * v;
        cn = std::sqrt(cn);
        if (cn == 0.0) return out;
        Point nrm(s.dim);
        for (std::size_t a = 0; a < s.dim; ++a) nrm[a] = c[a] / cn;
        double pn = 0.0, pd = 0.0;
        for (std::size_t a = 0; a < s.dim; ++a) {
            const double pa = component(s.momentum, a);
            pn += pa * pa;
            pd += pa * nrm[a];
        }
        if (std::abs(pn - pd * pd) > 1e-12 * (1.0 + pn)) return out;
        NodeLocus l;
        l.codimension = 1;
        l.point = Point(s.dim, 0.0);
        l.direction = nrm;
        out.push_back(l);
    }
    return out;
}

// ---------------------------------------------------------------------------
// split-step propagation

struct SplitStepPropagator::Impl {
    WaveFunction psi;
    double dt;
    std::vector<Complex> half_kick;
    std::vector<Complex> kinetic;  // includes the 1/N of the inverse transform
    fftw_complex* buf = nullptr;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    Impl(WaveFunction p, double step) : psi(std::move(p)), dt(step) {}
    ~Impl() {
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
        if (buf) fftw_free(buf);
    }

    double boundary_amplitude() const {
        const Grid& grid = psi.grid();
        const double scale = 1.0 / std::sqrt(psi.norm());
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            bool face = false;
            for (std::size_t a = 0; a < grid.dim() && !face; ++a) {
                const std::size_t k = grid.index(i, a);
                face = k == 0 || k + 1 == grid.axis(a).count;
            }
            if (face) worst = std::max(worst, std::abs(psi[i]) * scale);
        }
        return worst;
    }

    void check_boundary() const {
        const double b = boundary_amplitude();
        if (b > kBoundaryTolerance) {
            std::ostringstream msg;
            msg << "wavefunction amplitude " << b << " on the grid boundary at t = " << psi.t()
                << " exceeds " << kBoundaryTolerance << "; enlarge the domain";
            throw DomainTooSmall(msg.str());
        }
    }
};

namespace {

double wavenumber(const Axis& ax, std::size_t j) {
    const long n = static_cast<long>(ax.count);
    long m = static_cast<long>(j);
    if (m >= (n + 1) / 2) m -= n;
    return 2.0 * pi * static_cast<double>(m) / (ax.max - ax.min);
}

}  // namespace

SplitStepPropagator::SplitStepPropagator(WaveFunction psi, const ScalarField& potential, double dt)
    : impl_(std::make_unique<Impl>(std::move(psi), dt)) {
    Impl& s = *impl_;
    const Grid& grid = s.psi.grid();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
    if (!(potential.grid() == grid)) throw InvalidArgument("potential grid does not match wavefunction");
    if (!potential.all_finite()) throw InvalidArgument("potential has non-finite values");
    for (std::size_t a = 0; a < grid.dim(); ++a)
        if (!grid.axis(a).periodic)
            throw InvalidArgument("split-step evolution needs periodic axes");
    s.check_boundary();

    const double hbar = s.psi.hbar();
    const Metric& g = s.psi.metric();
    const std::size_t size = grid.size();
    s.half_kick.resize(size);
    for (std::size_t i = 0; i < size; ++i)
        s.half_kick[i] = std::polar(1.0, -potential[i] * dt / (2.0 * hbar));

    s.kinetic.resize(size);
    std::vector<double> ekin(size);
    for (std::size_t i = 0; i < size; ++i) {
        double e = 0.0;
        for (std::size_t a = 0; a < grid.dim(); ++a) {
            const double k = wavenumber(grid.axis(a), grid.index(i, a));
            e += g.upper(a) * k * k;
        }
        ekin[i] = 0.5 * hbar * hbar * e;
        s.kinetic[i] = std::polar(1.0 / static_cast<double>(size), -ekin[i] * dt / hbar);
    }

    std::vector<int> dims(grid.dim());
    for (std::size_t a = 0; a < grid.dim(); ++a) dims[a] = static_cast<int>(grid.axis(a).count);
    s.buf = fftw_alloc_complex(size);
    s.forward = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), s.buf, s.buf,
                              FFTW_FORWARD, FFTW_ESTIMATE);
    s.backward = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), s.buf, s.buf,
                               FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!s.forward || !s.backward) throw NumericalError("FFT plan creation failed");

    // The kinetic phase per step must stay below pi on every occupied mode.
    auto* z = reinterpret_cast<Complex*>(s.buf);
    std::copy(s.psi.values().begin(), s.psi.values().end(), z);
    fftw_execute(s.forward);
    double top = 0.0;
    for (std::size_t i = 0; i < size; ++i) top = std::max(top, std::abs(z[i]));
    double emax = 0.0;
    for (std::size_t i = 0; i < size; ++i)
        if (std::abs(z[i]) > 1e-8 * top) emax = std::max(emax, ekin[i]);
    if (emax * dt / hbar > pi) {
        std::ostringstream msg;
        msg << "time step " << dt << " does not resolve the kinetic frequency " << emax / hbar
            << " of the occupied spectrum";
        throw InvalidArgument(msg.str());
    }
}

SplitStepPropagator::~SplitStepPropagator() = default;
SplitStepPropagator::SplitStepPropagator(SplitStepPropagator&&) noexcept = default;
SplitStepPropagator& SplitStepPropagator::operator=(SplitStepPropagator&&) noexcept = default;

void SplitStepPropagator::step(std::size_t steps) {
    Impl& s = *impl_;
    const std::size_t size = s.psi.grid().size();
    auto* z = reinterpret_cast<Complex*>(s.buf);
    auto v = s.psi.values();
    for (std::size_t k = 0; k < steps; ++k) {
        for (std::size_t i = 0; i < size; ++i) z[i] = v[i] * s.half_kick[i];
        fftw_execute(s.forward);
        for (std::size_t i = 0; i < size; ++i) z[i] *= s.kinetic[i];
        fftw_execute(s.backward);
        for (std::size_t i = 0; i < size; ++i) v[i] = z[i] * s.half_kick[i];
        s.psi.set_time(s.psi.t() + s.dt);
    }
    s.check_boundary();
}

const WaveFunction& SplitStepPropagator::state() const { return impl_->psi; }
double SplitStepPropagator::dt() const { return impl_->dt; }

WaveFunction split_step_evolve(const WaveFunction& psi, const ScalarField& potential, double dt,
                               std::size_t steps) {
    SplitStepPropagator prop(psi, potential, dt);
    prop.step(steps);
    return prop.state();
}

Hydrodynamic decompose(const WaveFunction& psi, double eps_node, int order) {
    const Grid& grid = psi.grid();
    const std::size_t n = grid.dim();
    const int radius = detail::checked_radius(order);
    ScalarField mu = psi.density();
    const Mask nodes = node_mask(mu, eps_node);

    std::vector<std::vector<double>> p(n, std::vector<double>(grid.size(), 0.0));
    Mask bad = nodes;
    const auto v = psi.values();
    for (std::size_t a = 0; a < n; ++a) {
        const detail::AxisLine line(grid, nodes, a);
        const double h = grid.spacing(a);
        parallel_for(grid.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                Complex d;
                if (!detail::first_derivative_at<Complex>(v, line, i, radius, h, d)) {
                    bad[i] = 1;
                    continue;
                }
                p[a][i] = psi.hbar() * std::imag(std::conj(v[i]) * d) / mu[i];
            }
        });
    }
    VectorField pf(grid, std::move(p), Variance::covariant, "p");
    pf.set_mask(std::move(bad));
    mu.set_name("mu");
    return {std::move(mu), std::move(pf)};
}

}  // namespace weylworlds
