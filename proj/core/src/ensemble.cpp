#include "weylworlds/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "weylworlds/error.hpp"
#include "weylworlds/parallel.hpp"

namespace weylworlds {

WorldEnsemble::WorldEnsemble(std::size_t dim, std::vector<double> positions,
                             std::vector<double> velocities, double t)
    : dim_(dim), count_(0), positions_(std::move(positions)), velocities_(std::move(velocities)),
      t_(t) {
    if (dim_ == 0) throw InvalidArgument("ensemble dimension must be positive");
    if (positions_.size() % dim_ != 0)
        throw InvalidArgument("position array length is not a multiple of the dimension");
    count_ = positions_.size() / dim_;
    if (count_ < 2) throw InvalidArgument("an ensemble needs at least two worlds");
    if (velocities_.empty()) velocities_.assign(positions_.size(), 0.0);
    if (velocities_.size() != positions_.size())
        throw InvalidArgument("velocity array length does not match positions");
    if (!all_finite()) throw InvalidArgument("ensemble positions must be finite");
    labels_ = positions_;

    std::vector<std::size_t> order(count_);
    std::iota(order.begin(), order.end(), 0);
    auto lab = [&](std::size_t k) { return std::span<const double>(labels_.data() + k * dim_, dim_); };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto la = lab(a), lb = lab(b);
        return std::lexicographical_compare(la.begin(), la.end(), lb.begin(), lb.end());
    });
    for (std::size_t k = 1; k < count_; ++k) {
        auto la = lab(order[k - 1]), lb = lab(order[k]);
        if (std::equal(la.begin(), la.end(), lb.begin())) {
            std::ostringstream msg;
            msg << "worlds " << order[k - 1] << " and " << order[k] << " share a label";
            throw InvalidArgument(msg.str());
        }
    }
}

WorldEnsemble WorldEnsemble::restore(std::size_t dim, std::vector<double> labels,
                                     std::vector<double> positions,
                                     std::vector<double> velocities, double t) {
    WorldEnsemble e(dim, std::move(labels), {}, t);
    if (positions.size() != e.positions_.size())
        throw InvalidArgument("position array length does not match labels");
    e.positions_ = std::move(positions);
    if (!velocities.empty()) {
        if (velocities.size() != e.positions_.size())
            throw InvalidArgument("velocity array length does not match positions");
        e.velocities_ = std::move(velocities);
    }
    if (!e.all_finite()) throw InvalidArgument("ensemble positions must be finite");
    return e;
}

bool WorldEnsemble::all_finite() const {
    for (double v : positions_)
        if (!std::isfinite(v)) return false;
    for (double v : velocities_)
        if (!std::isfinite(v)) return false;
    return true;
}

double WorldEnsemble::mean(std::size_t axis) const {
    double s = 0.0;
    for (std::size_t k = 0; k < count_; ++k) s += positions_[k * dim_ + axis];
    return s / static_cast<double>(count_);
}

double WorldEnsemble::stddev(std::size_t axis) const {
    const double m = mean(axis);
    double s = 0.0;
    for (std::size_t k = 0; k < count_; ++k) {
        const double d = positions_[k * dim_ + axis] - m;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(count_));
}

std::optional<std::size_t> find_crossing(const WorldEnsemble& e) {
    if (e.dim() != 1) throw InvalidArgument("crossing check is defined for n = 1");
    std::vector<std::size_t> order(e.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return e.label(a)[0] < e.label(b)[0]; });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (!(e.position(order[k])[0] > e.position(order[k - 1])[0])) return k;
    return std::nullopt;
}

std::string to_string(DensityMethod m) {
    switch (m) {
    case DensityMethod::kde: return "kde";
    case DensityMethod::spacing1d: return "spacing1d";
    case DensityMethod::exact: return "exact";
    }
    return "?";
}

DensityMethod parse_density_method(const std::string& name) {
    if (name == "kde") return DensityMethod::kde;
    if (name == "spacing1d") return DensityMethod::spacing1d;
    if (name == "exact" || name == "exact-oracle" || name == "exact_oracle")
        return DensityMethod::exact;
    throw InvalidArgument("unknown density estimator '" + name + "'");
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = 0.0;
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double th = 2.0 * std::numbers::pi * v;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
}

namespace {

// 1D axis weight matching Grid::quadrature_weight.
double axis_weight(const Axis& ax, std::size_t j) {
    const double h = ax.spacing();
    if (!ax.periodic && (j == 0 || j + 1 == ax.count)) return 0.5 * h;
    return h;
}

void check_density(const ScalarField& mu) {
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu.masked(i)) continue;
        if (!std::isfinite(mu[i]) || mu[i] < 0.0)
            throw InvalidArgument("reference density must be finite and nonnegative");
        total += mu[i];
    }
    if (!(total > 0.0) || !std::isfinite(total))
        throw InvalidArgument("reference density is not normalizable");
}

// Piecewise-linear marginal density along one axis and its exact CDF.
struct MarginalCdf {
    std::vector<double> x;  // nodes (periodic axes get the closing node at max)
    std::vector<double> d;  // density at nodes
    std::vector<double> f;  // CDF at nodes, f.back() = 1

    double operator()(double q) const {
        if (q <= x.front()) return 0.0;
        if (q >= x.back()) return 1.0;
        const std::size_t j =
            static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), q) - x.begin()) - 1;
        const double h = x[j + 1] - x[j];
        const double s = (q - x[j]) / h;
        return f[j] + h * (d[j] * s + 0.5 * (d[j + 1] - d[j]) * s * s);
    }

    double inverse(double r) const {
        if (r <= 0.0) return x.front();
        if (r >= 1.0) return x.back();
        std::size_t j =
            static_cast<std::size_t>(std::upper_bound(f.begin(), f.end(), r) - f.begin());
        j = std::clamp<std::size_t>(j, 1, f.size() - 1) - 1;
        const double h = x[j + 1] - x[j];
        const double a = 0.5 * h * (d[j + 1] - d[j]);
        const double b = h * d[j];
        const double rr = r - f[j];
        double s = 0.0;
        const double disc = b * b + 4.0 * a * rr;
        if (b + std::sqrt(std::max(disc, 0.0)) > 0.0)
            s = 2.0 * rr / (b + std::sqrt(std::max(disc, 0.0)));
        else if (a > 0.0)
            s = std::sqrt(rr / a);
        return x[j] + h * std::clamp(s, 0.0, 1.0);
    }
};

MarginalCdf marginal_cdf(const ScalarField& mu, std::size_t axis) {
    const Grid& grid = mu.grid();
    const Axis& ax = grid.axis(axis);
    MarginalCdf c;
    std::vector<double> m(ax.count, 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (mu.masked(i)) continue;
        const std::size_t j = grid.index(i, axis);
        m[j] += mu[i] * grid.quadrature_weight(i) / axis_weight(ax, j);
    }
    for (std::size_t j = 0; j < ax.count; ++j) {
        c.x.push_back(ax.coord(j));
        c.d.push_back(m[j]);
    }
    if (ax.periodic) {
        c.x.push_back(ax.max);
        c.d.push_back(m[0]);
    }
    c.f.assign(c.x.size(), 0.0);
    for (std::size_t j = 1; j < c.x.size(); ++j)
        c.f[j] = c.f[j - 1] + 0.5 * (c.x[j] - c.x[j - 1]) * (c.d[j] + c.d[j - 1]);
    const double total = c.f.back();
    if (!(total > 0.0)) throw InvalidArgument("marginal density has no mass");
    for (double& v : c.f) v /= total;
    for (double& v : c.d) v /= total;
    return c;
}

ScalarField normalized(const ScalarField& mu, const Metric& g) {
    const double total = integrate(mu, g);
    if (!(total > 0.0) || !std::isfinite(total))
        throw InvalidArgument("density is not normalizable on the grid");
    std::vector<double> v(mu.values().begin(), mu.values().end());
    for (double& x : v) x /= total;
    ScalarField out(mu.grid(), std::move(v), mu.name());
    out.set_mask(mu.mask());
    return out;
}

}  // namespace

WorldEnsemble sample_from_density(const ScalarField& mu_ref, std::size_t count,
                                  std::uint64_t seed) {
    if (count < 2) throw InvalidArgument("an ensemble needs at least two worlds");
    check_density(mu_ref);
    const Grid& grid = mu_ref.grid();
    const std::size_t n = grid.dim();
    std::vector<double> cdf(grid.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!mu_ref.masked(i)) acc += mu_ref[i] * grid.quadrature_weight(i);
        cdf[i] = acc;
    }
    Rng rng(seed);
    std::vector<double> pos(count * n);
    for (std::size_t k = 0; k < count; ++k) {
        const double r = rng.uniform() * acc;
        std::size_t cell =
            static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
        cell = std::min(cell, grid.size() - 1);
        for (std::size_t a = 0; a < n; ++a) {
            const Axis& ax = grid.axis(a);
            const double h = grid.spacing(a);
            const double c = grid.coord(cell, a);
            double lo = c - 0.5 * h, hi = c + 0.5 * h;
            if (!ax.periodic) {
                lo = std::max(lo, ax.min);
                hi = std::min(hi, ax.max);
            }
            double x = lo + (hi - lo) * rng.uniform();
            if (ax.periodic) {
                const double len = ax.max - ax.min;
                x = ax.min + std::fmod(std::fmod(x - ax.min, len) + len, len);
            }
            pos[k * n + a] = x;
        }
    }
    return WorldEnsemble(n, std::move(pos));
}

WorldEnsemble quantile_ensemble_1d(const ScalarField& mu_ref, std::size_t count) {
    if (mu_ref.grid().dim() != 1) throw InvalidArgument("quantile ensembles are 1D");
    if (count < 2) throw InvalidArgument("an ensemble needs at least two worlds");
    check_density(mu_ref);
    const MarginalCdf cdf = marginal_cdf(mu_ref, 0);
    std::vector<double> pos(count);
    for (std::size_t k = 0; k < count; ++k)
        pos[k] = cdf.inverse((static_cast<double>(k) + 0.5) / static_cast<double>(count));
    return WorldEnsemble(1, std::move(pos));
}

std::vector<double> silverman_bandwidth(const WorldEnsemble& e) {
    const double n = static_cast<double>(e.dim());
    const double factor = std::pow(4.0 / (n + 2.0), 1.0 / (n + 4.0)) *
                          std::pow(static_cast<double>(e.size()), -1.0 / (n + 4.0));
    std::vector<double> bw(e.dim());
    for (std::size_t a = 0; a < e.dim(); ++a) bw[a] = factor * e.stddev(a);
    return bw;
}

DensityEstimate estimate_density_kde(const WorldEnsemble& e, const Grid& grid,
                                     std::span<const double> bandwidth, const Metric& g) {
    const std::size_t n = grid.dim();
    if (e.dim() != n) throw InvalidArgument("ensemble and grid dimensions differ");
    if (g.dim() != n) throw InvalidArgument("metric dimension does not match grid");
    if (bandwidth.size() != n) throw InvalidArgument("bandwidth needs one entry per axis");
    for (std::size_t a = 0; a < n; ++a) {
        if (!(bandwidth[a] > 0.0)) throw InvalidArgument("bandwidth must be positive");
        if (!(bandwidth[a] > grid.spacing(a))) {
            std::ostringstream msg;
            msg << "bandwidth " << bandwidth[a] << " on axis " << a
                << " does not exceed the grid spacing " << grid.spacing(a);
            throw InvalidArgument(msg.str());
        }
    }

    constexpr std::size_t kChunks = 16;
    constexpr double kCut = 6.0;
    std::vector<std::vector<double>> partial(kChunks);
    const std::size_t count = e.size();
    parallel_for(
        kChunks,
        [&](std::size_t cb, std::size_t ce) {
            std::vector<std::vector<std::size_t>> idx(n);
            std::vector<std::vector<double>> w(n);
            for (std::size_t c = cb; c < ce; ++c) {
                std::vector<double>& acc = partial[c];
                acc.assign(grid.size(), 0.0);
                const std::size_t kb = c * count / kChunks, ke = (c + 1) * count / kChunks;
                for (std::size_t k = kb; k < ke; ++k) {
                    const auto q = e.position(k);
                    bool empty = false;
                    for (std::size_t a = 0; a < n; ++a) {
                        const Axis& ax = grid.axis(a);
                        const double h = grid.spacing(a);
                        const double bw = bandwidth[a];
                        const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * bw);
                        long jlo = static_cast<long>(std::ceil((q[a] - kCut * bw - ax.min) / h));
                        long jhi = static_cast<long>(std::floor((q[a] + kCut * bw - ax.min) / h));
                        const long cnt = static_cast<long>(ax.count);
                        if (!ax.periodic) {
                            jlo = std::max(jlo, 0L);
                            jhi = std::min(jhi, cnt - 1);
                        } else if (jhi - jlo + 1 > cnt) {
                            jhi = jlo + cnt - 1;
                        }
                        idx[a].clear();
                        w[a].clear();
                        for (long j = jlo; j <= jhi; ++j) {
                            const double d = ax.min + h * static_cast<double>(j) - q[a];
                            long jj = j;
                            if (ax.periodic) jj = ((j % cnt) + cnt) % cnt;
                            idx[a].push_back(static_cast<std::size_t>(jj) * grid.stride(a));
                            w[a].push_back(norm * std::exp(-0.5 * d * d / (bw * bw)));
                        }
                        if (idx[a].empty()) empty = true;
                    }
                    if (empty) continue;
                    // tensor-product scatter
                    std::vector<std::size_t> pos(n, 0);
                    while (true) {
                        std::size_t flat = 0;
                        double wt = 1.0;
                        for (std::size_t a = 0; a < n; ++a) {
                            flat += idx[a][pos[a]];
                            wt *= w[a][pos[a]];
                        }
                        acc[flat] += wt;
                        std::size_t a = n;
                        bool done = true;
                        while (a-- > 0) {
                            if (++pos[a] < idx[a].size()) {
                                done = false;
                                break;
                            }
                            pos[a] = 0;
                        }
                        if (done) break;
                    }
                }
            }
        },
        1);

    std::vector<double> mu(grid.size(), 0.0);
    for (std::size_t c = 0; c < kChunks; ++c)
        for (std::size_t i = 0; i < grid.size(); ++i) mu[i] += partial[c][i];
    ScalarField field(grid, std::move(mu), "mu_kde");
    return {normalized(field, g), DensityMethod::kde,
            std::vector<double>(bandwidth.begin(), bandwidth.end())};
}

DensityEstimate estimate_density_kde(const WorldEnsemble& e, const Grid& grid, double bandwidth,
                                     const Metric& g) {
    std::vector<double> bw(grid.dim(), bandwidth);
    return estimate_density_kde(e, grid, bw, g);
}

namespace {

// Natural cubic spline through (x, y); x strictly increasing.
// Cubic spline with prescribed second derivatives at both ends.
class CubicSpline {
public:
    CubicSpline(std::vector<double> x, std::vector<double> y, double m2_first, double m2_last)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t m = x_.size();
        m2_.assign(m, 0.0);
        m2_.front() = m2_first;
        m2_.back() = m2_last;
        if (m < 3) return;
        std::vector<double> c(m, 0.0), d(m, 0.0);
        d[0] = m2_first;
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const double hl = x_[i] - x_[i - 1], hr = x_[i + 1] - x_[i];
            const double a = hl / 6.0, b = (hl + hr) / 3.0, cc = hr / 6.0;
            double r = (y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl;
            if (i + 2 == m) r -= cc * m2_last;
            const double denom = b - a * c[i - 1];
            c[i] = i + 2 == m ? 0.0 : cc / denom;
            d[i] = (r - a * d[i - 1]) / denom;
        }
        for (std::size_t i = m - 1; i-- > 1;) m2_[i] = d[i] - c[i] * m2_[i + 1];
    }

    double operator()(double q) const {
        const std::size_t j = segment(q);
        const double h = x_[j + 1] - x_[j];
        const double a = (x_[j + 1] - q) / h, b = (q - x_[j]) / h;
        return a * y_[j] + b * y_[j + 1] +
               ((a * a * a - a) * m2_[j] + (b * b * b - b) * m2_[j + 1]) * h * h / 6.0;
    }

    double slope(double q) const {
        const std::size_t j = segment(q);
        const double h = x_[j + 1] - x_[j];
        const double a = (x_[j + 1] - q) / h, b = (q - x_[j]) / h;
        return (y_[j + 1] - y_[j]) / h +
               (-(3 * a * a - 1) * m2_[j] + (3 * b * b - 1) * m2_[j + 1]) * h / 6.0;
    }

private:
    std::size_t segment(double q) const {
        std::size_t j =
            static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), q) - x_.begin());
        return std::clamp<std::size_t>(j, 1, x_.size() - 1) - 1;
    }

    std::vector<double> x_, y_, m2_;
};

struct Quadratic {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    double operator()(double u) const { return c0 + u * (c1 + u * c2); }
};

// Least-squares ln mu = c0 + c1 u + c2 u^2 with u measured outward from the
// end midpoint; c2 <= 0 and c1 <= 0 are enforced so the tail decays.
Quadratic fit_tail(std::span<const double> u, std::span<const double> y) {
    auto solve = [&](int terms) {
        double m[3][4] = {};
        for (std::size_t k = 0; k < u.size(); ++k) {
            const double b[3] = {1.0, u[k], u[k] * u[k]};
            for (int r = 0; r < terms; ++r) {
                for (int c = 0; c < terms; ++c) m[r][c] += b[r] * b[c];
                m[r][3] += b[r] * y[k];
            }
        }
        for (int p = 0; p < terms; ++p) {
            int best = p;
            for (int r = p + 1; r < terms; ++r)
                if (std::abs(m[r][p]) > std::abs(m[best][p])) best = r;
            std::swap(m[p], m[best]);
            for (int r = 0; r < terms; ++r) {
                if (r == p || m[p][p] == 0.0) continue;
                const double f = m[r][p] / m[p][p];
                for (int c = p; c < 4; ++c) m[r][c] -= f * m[p][c];
            }
        }
        Quadratic q;
        double coef[3] = {0.0, 0.0, 0.0};
        for (int r = 0; r < terms; ++r) coef[r] = m[r][r] == 0.0 ? 0.0 : m[r][3] / m[r][r];
        q.c0 = coef[0];
        q.c1 = coef[1];
        q.c2 = coef[2];
        return q;
    };
    Quadratic q = solve(3);
    if (q.c2 > 0.0) q = solve(2);
    if (q.c1 > 0.0) q.c1 = 0.0;
    return q;
}

// ln mu through the midpoints: spline inside, quadratic tails outside. The
// tails are fitted to the outermost points, their curvature closes the
// spline, and they join it with matching value and slope.
class LogDensity {
public:
    LogDensity(const std::vector<double>& x, const std::vector<double>& y)
        : x0_(x.front()), x1_(x.back()) {
        const std::size_t tail = std::min<std::size_t>(8, std::max<std::size_t>(3, x.size() / 4));
        std::vector<double> ul(tail), yl(tail), ur(tail), yr(tail);
        for (std::size_t k = 0; k < tail; ++k) {
            ul[k] = x.front() - x[k];
            yl[k] = y[k];
            ur[k] = x[x.size() - 1 - k] - x.back();
            yr[k] = y[y.size() - 1 - k];
        }
        const Quadratic lf = fit_tail(ul, yl), rf = fit_tail(ur, yr);
        spline_ = CubicSpline(x, y, 2.0 * lf.c2, 2.0 * rf.c2);
        left_ = {y.front(), std::min(0.0, -spline_.slope(x0_)), lf.c2};
        right_ = {y.back(), std::min(0.0, spline_.slope(x1_)), rf.c2};
    }

    double operator()(double x) const {
        if (x < x0_) return left_(x0_ - x);
        if (x > x1_) return right_(x - x1_);
        return spline_(x);
    }

private:
    double x0_, x1_;
    CubicSpline spline_{{0.0, 1.0}, {0.0, 0.0}, 0.0, 0.0};
    Quadratic left_, right_;
};

}  // namespace

std::size_t default_spacing_stride(std::size_t count) {
    return std::max<std::size_t>(1, (count + 12) / 25);
}

DensityEstimate estimate_density_spacing_1d(const WorldEnsemble& e, const Grid& grid,
                                            const Metric& g, std::size_t stride) {
    if (e.dim() != 1 || grid.dim() != 1) throw InvalidArgument("spacing estimator is 1D only");
    const std::size_t count = e.size();
    if (count < 4) throw InvalidArgument("spacing estimator needs at least four worlds");
    std::vector<double> q(e.positions().begin(), e.positions().end());
    std::sort(q.begin(), q.end());
    const double scale = std::max(1.0, std::abs(q.back() - q.front()));
    for (std::size_t k = 0; k + 1 < count; ++k)
        if (!(q[k + 1] - q[k] > 1e-14 * scale)) {
            std::ostringstream msg;
            msg << "worlds at " << q[k] << " and " << q[k + 1] << " coincide";
            throw DegenerateSpacing(msg.str());
        }
    if (stride == 0) stride = default_spacing_stride(count);
    // gaps spanning `stride` worlds, spread evenly, at least three of them
    const std::size_t gaps = std::max<std::size_t>(3, std::min(count - 1, (count - 1 + stride - 1) / stride));
    std::vector<std::size_t> idx(gaps + 1);
    for (std::size_t j = 0; j <= gaps; ++j) idx[j] = j * (count - 1) / gaps;
    std::vector<double> mid(gaps), lnmu(gaps);
    for (std::size_t j = 0; j < gaps; ++j) {
        const double width = q[idx[j + 1]] - q[idx[j]];
        mid[j] = 0.5 * (q[idx[j + 1]] + q[idx[j]]);
        lnmu[j] = std::log(static_cast<double>(idx[j + 1] - idx[j]) /
                           (static_cast<double>(count) * width));
    }
    const double h = grid.spacing(0);
    const double reach_l = std::max(q[idx[1]] - q[0], 12.0 * h);
    const double reach_r = std::max(q[count - 1] - q[idx[gaps - 1]], 12.0 * h);

    // 1 / (N dq) is the mean of mu over the gap, not its midpoint value.
    // Midpoint values are corrected until the reconstruction reproduces
    // every gap mean (Gauss-Legendre quadrature of exp(ln mu) per gap).
    std::vector<double> y = lnmu;
    LogDensity rec(mid, y);
    constexpr double gx[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                              0.9602898564975363};
    constexpr double gw[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                              0.1012285362903763};
    for (int iter = 0; iter < 50; ++iter) {
        double change = 0.0;
        for (std::size_t k = 0; k < gaps; ++k) {
            const double c = mid[k], r = 0.5 * (q[idx[k + 1]] - q[idx[k]]);
            double avg = 0.0;
            for (int j = 0; j < 4; ++j)
                avg += 0.5 * gw[j] * (std::exp(rec(c - r * gx[j]) - y[k]) +
                                      std::exp(rec(c + r * gx[j]) - y[k]));
            const double next = lnmu[k] - std::log(avg);
            change = std::max(change, std::abs(next - y[k]));
            y[k] = next;
        }
        rec = LogDensity(mid, y);
        if (change < 1e-10) break;
    }

    std::vector<double> mu(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.coord(i, 0);
        if (mid.front() - x > reach_l || x - mid.back() > reach_r) continue;
        mu[i] = std::exp(rec(x));
    }
    ScalarField field(grid, std::move(mu), "mu_spacing");
    return {normalized(field, g), DensityMethod::spacing1d, {}};
}

double marginal_ks(const WorldEnsemble& e, const ScalarField& mu_ref, std::size_t axis) {
    if (axis >= e.dim() || e.dim() != mu_ref.grid().dim())
        throw InvalidArgument("axis or dimension mismatch in KS distance");
    const MarginalCdf cdf = marginal_cdf(mu_ref, axis);
    std::vector<double> x(e.size());
    for (std::size_t k = 0; k < e.size(); ++k) x[k] = e.position(k)[axis];
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double f = cdf(x[k]);
        d = std::max({d, (static_cast<double>(k) + 1.0) / n - f, f - static_cast<double>(k) / n});
    }
    return d;
}

double l1_distance(const ScalarField& a, const ScalarField& b, const Metric& g) {
    if (!(a.grid() == b.grid())) throw InvalidArgument("L1 distance of fields on different grids");
    const Grid& grid = a.grid();
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (a.masked(i) && b.masked(i)) continue;
        s += std::abs(a[i] - b[i]) * grid.quadrature_weight(i);
    }
    return s * g.sqrt_g();
}

DistributionDistance distribution_distance(const WorldEnsemble& e, const ScalarField& mu_ref,
                                           const Metric& g, bool with_l1) {
    check_density(mu_ref);
    DistributionDistance out;
    for (std::size_t a = 0; a < e.dim(); ++a) out.ks = std::max(out.ks, marginal_ks(e, mu_ref, a));
    if (!with_l1) {
        out.l1 = -1.0;
        return out;
    }
    const Grid& grid = mu_ref.grid();
    std::vector<double> bw = silverman_bandwidth(e);
    // the estimator precondition needs at least a spacing and a half
    for (std::size_t a = 0; a < bw.size(); ++a) bw[a] = std::max(bw[a], 1.5 * grid.spacing(a));
    const DensityEstimate kde = estimate_density_kde(e, grid, bw, g);
    out.l1 = l1_distance(kde.mu, normalized(mu_ref, g), g);
    return out;
}

}  // namespace weylworlds
