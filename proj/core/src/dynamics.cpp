#include "weylworlds/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "weylworlds/error.hpp"
#include "weylworlds/parallel.hpp"

namespace weylworlds {

double PotentialSpec::V(std::span<const double> x) const { return value ? value(x) : 0.0; }

void PotentialSpec::dV(std::span<const double> x, std::span<double> out) const {
    if (gradient) {
        gradient(x, out);
        return;
    }
    if (!value) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    Point y(x.begin(), x.end());
    for (std::size_t a = 0; a < x.size(); ++a) {
        const double h = 1e-5 * (1.0 + std::abs(x[a]));
        y[a] = x[a] + h;
        const double vp = value(y);
        y[a] = x[a] - h;
        const double vm = value(y);
        y[a] = x[a];
        out[a] = (vp - vm) / (2.0 * h);
    }
}

double PotentialSpec::coupling(std::size_t n) const { return gamma ? *gamma : weyl_coupling(n); }

PotentialSpec harmonic_potential(const Metric& g, double omega, double lambda) {
    PotentialSpec p;
    const std::vector<double> diag(g.diag().begin(), g.diag().end());
    p.value = [diag, omega](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) s += diag[a] * x[a] * x[a];
        return 0.5 * omega * omega * s;
    };
    p.gradient = [diag, omega](std::span<const double> x, std::span<double> out) {
        for (std::size_t a = 0; a < x.size(); ++a) out[a] = omega * omega * diag[a] * x[a];
    };
    p.lambda = lambda;
    return p;
}

PotentialSpec grid_potential(ScalarField v, double lambda, int order, Interpolation scheme) {
    auto field = std::make_shared<ScalarField>(std::move(v));
    auto grad = std::make_shared<VectorField>(gradient(*field, order));
    PotentialSpec p;
    p.value = [field, scheme](std::span<const double> x) { return interpolate(*field, x, scheme); };
    p.gradient = [grad, scheme](std::span<const double> x, std::span<double> out) {
        interpolate(*grad, x, out, scheme);
    };
    p.lambda = lambda;
    return p;
}

ScalarField sample_potential(const PotentialSpec& p, const Grid& grid) {
    if (!p.value) return ScalarField(grid, 0.0, "V");
    return ScalarField::sample(grid, [&](std::span<const double> x) { return p.V(x); }, "V");
}

ScalarField quantum_potential(const ScalarField& mu, const Metric& g, double lambda,
                              double eps_node, int order) {
    if (!(lambda >= 0.0)) throw InvalidArgument("coupling lambda must be nonnegative");
    if (g.dim() != mu.grid().dim()) throw InvalidArgument("metric dimension does not match grid");
    if (lambda == 0.0) return ScalarField(mu.grid(), 0.0, "Q");
    const Mask nodes = node_mask(mu, eps_node);
    std::vector<double> amp(mu.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (!nodes[i]) amp[i] = std::sqrt(mu[i]);
    ScalarField root(mu.grid(), amp, "sqrt_mu");
    root.set_mask(nodes);
    const ScalarField lap = laplace_beltrami(root, g, order);
    if (lap.masked_count() == lap.size()) throw InvalidArgument("density is masked everywhere");
    std::vector<double> q(mu.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (!lap.masked(i)) q[i] = -0.5 * lambda * lambda * lap[i] / amp[i];
    ScalarField out(mu.grid(), std::move(q), "Q");
    out.set_mask(lap.mask());
    return out;
}

VectorField total_force(const PotentialSpec& p, const ScalarField& mu, const Metric& g,
                        double eps_node, int order) {
    const ScalarField q = quantum_potential(mu, g, p.lambda, eps_node, order);
    const ScalarField v = sample_potential(p, mu.grid());
    std::vector<double> w(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) w[i] = v[i] + q[i];
    ScalarField total(mu.grid(), std::move(w), "V+Q");
    total.set_mask(q.mask());
    VectorField f = raise(gradient(total, order), g);
    for (std::size_t a = 0; a < f.dim(); ++a)
        for (double& x : f.component(a)) x = -x;
    f.set_name("F");
    return f;
}

std::string to_string(Scheme s) {
    return s == Scheme::velocity_verlet ? "velocity-verlet" : "euler-guided";
}
std::string to_string(DensityRefresh r) {
    return r == DensityRefresh::every_step ? "every-step" : "exact-oracle";
}
std::string to_string(NodePolicy p) { return p == NodePolicy::error ? "error" : "extrapolate"; }

Scheme parse_scheme(const std::string& s) {
    if (s == "velocity-verlet") return Scheme::velocity_verlet;
    if (s == "euler-guided") return Scheme::euler_guided;
    throw InvalidArgument("unknown integrator scheme '" + s + "'");
}

DensityRefresh parse_density_refresh(const std::string& s) {
    if (s == "every-step") return DensityRefresh::every_step;
    if (s == "exact-oracle") return DensityRefresh::exact_oracle;
    throw InvalidArgument("unknown density refresh mode '" + s + "'");
}

NodePolicy parse_node_policy(const std::string& s) {
    if (s == "error") return NodePolicy::error;
    if (s == "extrapolate") return NodePolicy::extrapolate;
    throw InvalidArgument("unknown node policy '" + s + "'");
}

namespace {

// Value of the unmasked grid point nearest to x, searching outward in
// Chebyshev shells.
template <class Get>
void nearest_unmasked(const Grid& grid, const Mask& mask, std::span<const double> x, Get&& get) {
    const std::size_t n = grid.dim();
    std::vector<long> c(n);
    for (std::size_t a = 0; a < n; ++a) {
        const long cnt = static_cast<long>(grid.axis(a).count);
        long j = std::lround((x[a] - grid.axis(a).min) / grid.spacing(a));
        if (grid.axis(a).periodic)
            j = ((j % cnt) + cnt) % cnt;
        else
            j = std::clamp(j, 0L, cnt - 1);
        c[a] = j;
    }
    constexpr long kMaxShell = 16;
    for (long r = 0; r <= kMaxShell; ++r) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_flat = 0;
        std::vector<long> off(n, -r);
        while (true) {
            long cheb = 0;
            for (long o : off) cheb = std::max(cheb, std::abs(o));
            if (cheb == r) {
                std::size_t flat = 0;
                double d2 = 0.0;
                bool ok = true;
                for (std::size_t a = 0; a < n && ok; ++a) {
                    const long cnt = static_cast<long>(grid.axis(a).count);
                    long j = c[a] + off[a];
                    if (grid.axis(a).periodic)
                        j = ((j % cnt) + cnt) % cnt;
                    else if (j < 0 || j >= cnt)
                        ok = false;
                    if (!ok) break;
                    flat += static_cast<std::size_t>(j) * grid.stride(a);
                    const double d = grid.axis(a).coord(static_cast<std::size_t>(j)) - x[a];
                    d2 += d * d;
                }
                if (ok && !mask[flat] && d2 < best) {
                    best = d2;
                    best_flat = flat;
                }
            }
            std::size_t a = n;
            bool done = true;
            while (a-- > 0) {
                if (++off[a] <= r) {
                    done = false;
                    break;
                }
                off[a] = -r;
            }
            if (done) break;
        }
        if (std::isfinite(best)) {
            get(best_flat);
            return;
        }
    }
    throw NodeProximityError("no unmasked grid point near the requested position");
}

void wrap_periodic(const Grid& grid, std::span<double> q) {
    for (std::size_t a = 0; a < grid.dim(); ++a) {
        const Axis& ax = grid.axis(a);
        if (!ax.periodic) continue;
        const double len = ax.max - ax.min;
        q[a] = ax.min + std::fmod(std::fmod(q[a] - ax.min, len) + len, len);
    }
}

// Interpolates a vector field at x; at nodes follows the policy. Returns
// false when the value was extrapolated.
bool sample_vector(const VectorField& f, std::span<const double> x, std::span<double> out,
                   Interpolation scheme, NodePolicy policy, std::size_t world) {
    try {
        interpolate(f, x, out, scheme);
        return true;
    } catch (const NodeProximityError& err) {
        if (policy == NodePolicy::error) {
            std::ostringstream msg;
            msg << "world " << world << ": " << err.what();
            throw NodeProximityError(msg.str(), world);
        }
    }
    nearest_unmasked(f.grid(), f.mask(), x, [&](std::size_t flat) { f.at(flat, out); });
    return false;
}

bool sample_scalar(const ScalarField& f, std::span<const double> x, double& out,
                   Interpolation scheme, NodePolicy policy, std::size_t world) {
    try {
        out = interpolate(f, x, scheme);
        return true;
    } catch (const NodeProximityError& err) {
        if (policy == NodePolicy::error) {
            std::ostringstream msg;
            msg << "world " << world << ": " << err.what();
            throw NodeProximityError(msg.str(), world);
        }
    }
    nearest_unmasked(f.grid(), f.mask(), x, [&](std::size_t flat) { out = f[flat]; });
    return false;
}

void report_extrapolated(const std::vector<std::uint8_t>& flags, std::size_t step,
                         std::vector<std::string>& warnings) {
    std::size_t count = 0, first = 0;
    for (std::size_t k = 0; k < flags.size(); ++k)
        if (flags[k]) {
            if (count == 0) first = k;
            ++count;
        }
    if (count == 0) return;
    std::ostringstream msg;
    msg << "step " << step << ": " << count << " world(s) inside node cells (first: world "
        << first << "); force extrapolated from the nearest unmasked cell";
    warnings.push_back(msg.str());
}

void check_crossing_1d(const WorldEnsemble& e, std::size_t step,
                       std::vector<std::string>& warnings) {
    if (e.dim() != 1) return;
    if (auto k = find_crossing(e)) {
        std::ostringstream msg;
        msg << "invariant violation at step " << step << ": worlds crossed (label rank " << *k
            << ")";
        warnings.push_back(msg.str());
    }
}

}  // namespace

SelfContainedIntegrator::SelfContainedIntegrator(Grid grid, Metric g, PotentialSpec potential,
                                                 IntegratorConfig cfg, DensitySource exact)
    : grid_(std::move(grid)), metric_(std::move(g)), potential_(std::move(potential)),
      cfg_(std::move(cfg)), exact_(std::move(exact)) {
    if (metric_.dim() != grid_.dim()) throw InvalidArgument("metric dimension does not match grid");
    if (!(cfg_.dt > 0.0) || !std::isfinite(cfg_.dt)) throw InvalidArgument("dt must be positive");
    if (!(potential_.lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
    stencil_radius(cfg_.order);
    if (cfg_.scheme != Scheme::velocity_verlet)
        throw InvalidArgument("self-contained integration uses velocity-verlet");
    if (cfg_.refresh == DensityRefresh::exact_oracle && !exact_)
        throw InvalidArgument("exact-oracle density refresh needs a density source");
    if (cfg_.estimator == DensityMethod::spacing1d && grid_.dim() != 1)
        throw InvalidArgument("spacing1d estimator is 1D only");
}

void SelfContainedIntegrator::rebuild(const WorldEnsemble& e, std::vector<std::string>& warnings) {
    if (potential_.lambda == 0.0) {
        q_.emplace(grid_, 0.0, "Q");
        dq_.emplace(gradient(*q_, cfg_.order));
        if (!mu_) mu_.emplace(grid_, 0.0, "mu");
        return;
    }
    if (cfg_.refresh == DensityRefresh::exact_oracle) {
        ScalarField mu = exact_(e.t());
        if (!(mu.grid() == grid_)) throw InvalidArgument("density source returned a different grid");
        mu_.emplace(std::move(mu));
    } else if (cfg_.estimator == DensityMethod::spacing1d) {
        mu_.emplace(estimate_density_spacing_1d(e, grid_, metric_, cfg_.spacing_stride).mu);
    } else if (cfg_.estimator == DensityMethod::kde) {
        std::vector<double> bw = cfg_.bandwidth;
        if (bw.empty()) {
            bw = silverman_bandwidth(e);
            for (std::size_t a = 0; a < bw.size(); ++a)
                if (!(bw[a] > grid_.spacing(a))) {
                    std::ostringstream msg;
                    msg << "Silverman bandwidth " << bw[a] << " on axis " << a
                        << " raised to 1.5 grid spacings";
                    warnings.push_back(msg.str());
                    bw[a] = 1.5 * grid_.spacing(a);
                }
        } else if (bw.size() == 1 && grid_.dim() > 1) {
            bw.assign(grid_.dim(), bw[0]);
        }
        mu_.emplace(estimate_density_kde(e, grid_, bw, metric_).mu);
    } else {
        throw InvalidArgument("every-step refresh needs the kde or spacing1d estimator");
    }
    q_.emplace(quantum_potential(*mu_, metric_, potential_.lambda, cfg_.eps_node, cfg_.order));
    dq_.emplace(gradient(*q_, cfg_.order));
}

void SelfContainedIntegrator::forces(const WorldEnsemble& e, std::vector<double>& out,
                                     std::vector<std::string>& warnings) {
    const std::size_t n = e.dim();
    out.assign(e.size() * n, 0.0);
    std::vector<std::uint8_t> extrapolated(e.size(), 0);
    parallel_for(
        e.size(),
        [&](std::size_t b, std::size_t end) {
            std::vector<double> dv(n), dq(n);
            for (std::size_t k = b; k < end; ++k) {
                const auto q = e.position(k);
                potential_.dV(q, dv);
                if (!sample_vector(*dq_, q, dq, cfg_.interpolation, cfg_.node_policy, k))
                    extrapolated[k] = 1;
                for (std::size_t a = 0; a < n; ++a) {
                    const double f = -metric_.upper(a) * (dv[a] + dq[a]);
                    if (!std::isfinite(f)) {
                        std::ostringstream msg;
                        msg << "non-finite force on world " << k << " at t = " << e.t();
                        throw NumericalError(msg.str());
                    }
                    out[k * n + a] = f;
                }
            }
        },
        64);
    report_extrapolated(extrapolated, step_, warnings);
}

double SelfContainedIntegrator::stable_dt(const WorldEnsemble& e) {
    std::vector<std::string> ignored;
    rebuild(e, ignored);
    const ScalarField v = sample_potential(potential_, grid_);
    std::vector<double> w(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) w[i] = v[i] + (*q_)[i];
    ScalarField total(grid_, std::move(w), "V+Q");
    total.set_mask(q_->mask());
    std::vector<ScalarField> curv;
    for (std::size_t a = 0; a < grid_.dim(); ++a) curv.push_back(second_partial(total, a, 2));

    double vmax = 0.0, w2max = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) {
        const auto q = e.position(k);
        double qv = 0.0;
        if (potential_.lambda > 0.0)
            sample_scalar(*q_, q, qv, Interpolation::linear, NodePolicy::extrapolate, k);
        vmax = std::max(vmax, std::abs(potential_.V(q) + qv));
        double w2 = 0.0;
        for (std::size_t a = 0; a < grid_.dim(); ++a) {
            double c = 0.0;
            sample_scalar(curv[a], q, c, Interpolation::linear, NodePolicy::extrapolate, k);
            w2 = std::max(w2, metric_.upper(a) * std::abs(c));
        }
        w2max = std::max(w2max, w2);
    }
    double hmin = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < grid_.dim(); ++a) hmin = std::min(hmin, grid_.spacing(a));
    const double mmin = *std::min_element(metric_.diag().begin(), metric_.diag().end());
    const double inf = std::numeric_limits<double>::infinity();
    const double b1 = vmax > 0.0 ? hmin / std::sqrt(2.0 * vmax / mmin) : inf;
    const double b2 = w2max > 0.0 ? 2.0 * std::numbers::pi / std::sqrt(w2max) : inf;
    return 0.1 * std::min(b1, b2);
}

StepReport SelfContainedIntegrator::step(WorldEnsemble& e) {
    if (e.dim() != grid_.dim()) throw InvalidArgument("ensemble and grid dimensions differ");
    StepReport rep;
    if (cfg_.stability_check && !checked_) {
        const double limit = stable_dt(e);
        if (cfg_.dt > limit) {
            std::ostringstream msg;
            msg << "dt = " << cfg_.dt << " exceeds the stability limit " << limit;
            throw InvalidArgument(msg.str());
        }
        checked_ = true;
        force_.clear();
    }
    if (force_.size() != e.size() * e.dim()) {
        rebuild(e, rep.warnings);
        forces(e, force_, rep.warnings);
    }
    const std::size_t n = e.dim();
    const double dt = cfg_.dt;
    auto pos = e.positions();
    auto vel = e.velocities();
    for (std::size_t k = 0; k < e.size(); ++k) {
        for (std::size_t a = 0; a < n; ++a) {
            vel[k * n + a] += 0.5 * dt * force_[k * n + a];
            pos[k * n + a] += dt * vel[k * n + a];
        }
        wrap_periodic(grid_, e.position(k));
    }
    e.set_time(e.t() + dt);
    ++step_;
    rebuild(e, rep.warnings);
    forces(e, force_, rep.warnings);
    for (std::size_t i = 0; i < vel.size(); ++i) vel[i] += 0.5 * dt * force_[i];
    if (!e.all_finite()) throw NumericalError("non-finite world state after step");
    check_crossing_1d(e, step_, rep.warnings);
    rep.step = step_;
    rep.t = e.t();
    return rep;
}

std::vector<StepReport> SelfContainedIntegrator::run(WorldEnsemble& e, std::size_t steps) {
    std::vector<StepReport> out;
    out.reserve(steps);
    for (std::size_t s = 0; s < steps; ++s) out.push_back(step(e));
    return out;
}

std::vector<double> SelfContainedIntegrator::world_energies(const WorldEnsemble& e) {
    if (!q_) {
        std::vector<std::string> ignored;
        rebuild(e, ignored);
    }
    std::vector<double> out(e.size());
    for (std::size_t k = 0; k < e.size(); ++k) {
        const auto q = e.position(k);
        double qv = 0.0;
        if (potential_.lambda > 0.0)
            sample_scalar(*q_, q, qv, cfg_.interpolation, NodePolicy::extrapolate, k);
        out[k] = 0.5 * metric_.norm_sq_contravariant(e.velocity(k)) + potential_.V(q) + qv;
    }
    return out;
}

StepReport step_guided(WorldEnsemble& e, const MomentumSource& source, const Metric& g, double dt,
                       const GuidedOptions& opt) {
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (g.dim() != e.dim()) throw InvalidArgument("metric dimension does not match ensemble");
    const std::size_t n = e.dim();
    const double t0 = e.t();
    const VectorField p0 = source(t0);
    const VectorField ph = source(t0 + 0.5 * dt);
    if (p0.variance() != Variance::covariant || ph.variance() != Variance::covariant)
        throw InvalidArgument("momentum source must return covariant fields");
    const Grid& grid = p0.grid();
    std::vector<std::uint8_t> extrapolated(e.size(), 0);

    parallel_for(
        e.size(),
        [&](std::size_t b, std::size_t end) {
            std::vector<double> p(n), mid(n);
            for (std::size_t k = b; k < end; ++k) {
                auto q = e.position(k);
                if (!sample_vector(p0, q, p, opt.interpolation, opt.node_policy, k))
                    extrapolated[k] = 1;
                for (std::size_t a = 0; a < n; ++a) mid[a] = q[a] + 0.5 * dt * g.upper(a) * p[a];
                wrap_periodic(grid, mid);
                if (!sample_vector(ph, mid, p, opt.interpolation, opt.node_policy, k))
                    extrapolated[k] = 1;
                auto v = e.velocity(k);
                for (std::size_t a = 0; a < n; ++a) {
                    v[a] = g.upper(a) * p[a];
                    q[a] += dt * v[a];
                }
                wrap_periodic(grid, q);
            }
        },
        64);
    e.set_time(t0 + dt);
    if (!e.all_finite()) throw NumericalError("non-finite world state after guided step");
    StepReport rep;
    rep.t = e.t();
    report_extrapolated(extrapolated, 0, rep.warnings);
    if (opt.check_crossing) check_crossing_1d(e, 0, rep.warnings);
    return rep;
}

struct OracleMomentumSource::State {
    SplitStepPropagator prop;
    double eps_node;
    int order;
    double cached_t = std::numeric_limits<double>::quiet_NaN();
    std::optional<Hydrodynamic> cached;

    void advance(double t) {
        const double now = prop.state().t();
        const double dt = prop.dt();
        const double steps = (t - now) / dt;
        const long n = std::lround(steps);
        if (n < 0 || std::abs(steps - static_cast<double>(n)) > 1e-6) {
            std::ostringstream msg;
            msg << "oracle cannot serve t = " << t << " from t = " << now << " with step " << dt;
            throw InvalidArgument(msg.str());
        }
        if (n > 0) prop.step(static_cast<std::size_t>(n));
    }

    const Hydrodynamic& at(double t) {
        if (cached && std::abs(t - cached_t) <= 1e-9 * std::max(1.0, std::abs(t))) return *cached;
        advance(t);
        cached.emplace(decompose(prop.state(), eps_node, order));
        cached_t = t;
        return *cached;
    }
};

OracleMomentumSource::OracleMomentumSource(WaveFunction psi0, const ScalarField& potential,
                                           double dt, double eps_node, int order)
    : state_(std::make_shared<State>(
          State{SplitStepPropagator(std::move(psi0), potential, dt), eps_node, order, std::numeric_limits<double>::quiet_NaN(), std::nullopt})) {}

VectorField OracleMomentumSource::operator()(double t) { return state_->at(t).p; }
ScalarField OracleMomentumSource::density(double t) { return state_->at(t).mu; }
const WaveFunction& OracleMomentumSource::state(double t) {
    state_->advance(t);
    return state_->prop.state();
}

// ---------------------------------------------------------------------------
// residuals

namespace {

Mask residual_region(const Grid& grid, const Mask& avoid, const ScalarField& mu,
                     const ResidualOptions& opt) {
    const std::size_t margin =
        opt.margin ? opt.margin : 2 * static_cast<std::size_t>(stencil_radius(opt.order));
    Mask region = interior_cells(grid, margin, avoid);
    if (opt.region_floor > 0.0) {
        const double top = mu.max();
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (!(mu[i] > opt.region_floor * top)) region[i] = 0;
    }
    bool any = false;
    for (auto r : region) any = any || r;
    if (!any) throw InvalidArgument("residual evaluation region is empty");
    return region;
}

ScalarField time_derivative(std::span<const ScalarField> series, double dt, ScalarField& mid) {
    if (series.size() != 2 && series.size() != 3)
        throw InvalidArgument("time series needs two or three snapshots");
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    const Grid& grid = series[0].grid();
    for (const auto& s : series)
        if (!(s.grid() == grid)) throw InvalidArgument("snapshots on different grids");
    const ScalarField& first = series.front();
    const ScalarField& last = series.back();
    const double span = dt * static_cast<double>(series.size() - 1);
    std::vector<double> d(grid.size()), m(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        d[i] = (last[i] - first[i]) / span;
        m[i] = series.size() == 3 ? series[1][i] : 0.5 * (first[i] + last[i]);
    }
    Mask mask;
    for (const auto& s : series) mask = merge_masks(mask, s.mask());
    ScalarField out(grid, std::move(d), "dt");
    out.set_mask(mask);
    mid = ScalarField(grid, std::move(m), first.name());
    mid.set_mask(mask);
    return out;
}

}  // namespace

double continuity_residual(std::span<const ScalarField> mu_t, const VectorField& velocity,
                           const Metric& g, double dt, const ResidualOptions& opt) {
    if (velocity.variance() != Variance::contravariant)
        throw InvalidArgument("continuity residual needs a contravariant velocity");
    ScalarField mu(mu_t.front().grid());
    const ScalarField dmu = time_derivative(mu_t, dt, mu);
    const Grid& grid = mu.grid();
    if (!(velocity.grid() == grid)) throw InvalidArgument("velocity grid differs from density grid");
    const std::size_t n = grid.dim();

    Mask mask = merge_masks(dmu.mask(), velocity.mask());
    std::vector<double> div(grid.size(), 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<double> flux(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) flux[i] = mu[i] * velocity(a, i);
        ScalarField f(grid, std::move(flux));
        f.set_mask(mask);
        const ScalarField d = partial(f, a, opt.order);
        mask = merge_masks(mask, d.mask());
        for (std::size_t i = 0; i < grid.size(); ++i) div[i] += d[i];
    }
    const Mask region = residual_region(grid, mask, mu, opt);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (region[i]) worst = std::max(worst, std::abs(dmu[i] + div[i]));
    return worst * g.sqrt_g();
}

double hamilton_jacobi_residual(const ScalarField& dS_dt, const VectorField& p,
                                const ScalarField& mu, const PotentialSpec& potential,
                                const Metric& g, const ResidualOptions& opt) {
    const Grid& grid = mu.grid();
    if (!(dS_dt.grid() == grid) || !(p.grid() == grid))
        throw InvalidArgument("fields on different grids");
    if (p.variance() != Variance::covariant) throw InvalidArgument("p must be covariant");
    const ScalarField q = quantum_potential(mu, g, potential.lambda, kDefaultNodeFloor, opt.order);
    const ScalarField v = sample_potential(potential, grid);
    const Mask mask = merge_masks(merge_masks(dS_dt.mask(), p.mask()), q.mask());
    const Mask region = residual_region(grid, mask, mu, opt);
    std::vector<double> pv(grid.dim());
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!region[i]) continue;
        p.at(i, pv);
        const double r = dS_dt[i] + 0.5 * g.norm_sq_covariant(pv) + v[i] + q[i];
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

double hamilton_jacobi_residual(std::span<const ScalarField> S_t, const ScalarField& mu,
                                const PotentialSpec& potential, const Metric& g, double dt,
                                const ResidualOptions& opt) {
    ScalarField s(S_t.front().grid());
    const ScalarField ds = time_derivative(S_t, dt, s);
    const VectorField p = gradient(s, opt.order);
    return hamilton_jacobi_residual(ds, p, mu, potential, g, opt);
}

}  // namespace weylworlds
