#include "mflab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "mflab/errors.hpp"
#include "mflab/fft.hpp"

namespace mflab {

namespace {

std::size_t stride_of(const GridSpec& g, int axis) {
    if (axis == 0) return 1;
    if (axis == 1) return static_cast<std::size_t>(g.cells[0]);
    return static_cast<std::size_t>(g.cells[0]) * g.cells[1];
}

}  // namespace

VelocityConvolver::VelocityConvolver(const GridSpec& grid, const KernelSpec& kernel,
                                     std::optional<double> delta, bool principal_value)
    : grid_(grid), dim_(grid.dim) {
    if (kernel.dim != grid.dim)
        throw StructureError("convolver: kernel/grid dimension mismatch");
    zero_ = !kernel.singular() && kernel.family == "zero";
    if (zero_) return;
    if (kernel.singular() && !delta && !principal_value)
        throw ConfigError(
            "convolver: singular kernel needs 'delta' or principal_value = true");

    std::optional<MollifiedKernel> mollified;
    if (delta) mollified.emplace(kernel, make_mollifier(dim_, *delta));

    std::array<std::size_t, 3> m{1, 1, 1};
    std::size_t total = 1;
    for (int k = 0; k < dim_; ++k) {
        m[k] = 2 * static_cast<std::size_t>(grid.cells[k]) - 1;
        total *= m[k];
    }
    offsets_.assign(static_cast<std::size_t>(dim_) * total, 0.0);

    const std::size_t m1 = dim_ >= 2 ? m[1] : 1;
    const std::size_t m2 = dim_ >= 3 ? m[2] : 1;
    for (std::size_t o2 = 0; o2 < m2; ++o2) {
        for (std::size_t o1 = 0; o1 < m1; ++o1) {
            for (std::size_t o0 = 0; o0 < m[0]; ++o0) {
                Vec z = zero_vec();
                const long off[3] = {static_cast<long>(o0) - (grid.cells[0] - 1),
                                     dim_ >= 2 ? static_cast<long>(o1) - (grid.cells[1] - 1) : 0,
                                     dim_ >= 3 ? static_cast<long>(o2) - (grid.cells[2] - 1) : 0};
                for (int k = 0; k < dim_; ++k) z[k] = off[k] * grid.dx(k);
                Vec value = zero_vec();
                const bool at_origin = norm_sq(z, dim_) == 0.0;
                if (mollified && kernel.singular()) {
                    value = mollified->eval(z);
                } else if (!at_origin) {
                    value = eval_kernel(kernel, z);
                } else if (!kernel.singular()) {
                    value = eval_kernel(kernel, z);
                }  // singular principal value: zero offset skipped
                const std::size_t idx = o0 + m[0] * (o1 + m1 * o2);
                double sq = 0.0;
                for (int c = 0; c < dim_; ++c) {
                    offsets_[c * total + idx] = value[c];
                    sq += value[c] * value[c];
                }
                kernel_sup_ = std::max(kernel_sup_, std::sqrt(sq));
            }
        }
    }

    prefer_fft_ = grid.cell_count() > 1024;
    for (int k = 0; k < dim_; ++k) pad_[k] = next_pow2(m[k]);
    std::size_t pad_total = 1;
    for (int k = 0; k < dim_; ++k) pad_total *= pad_[k];
    kernel_hat_.resize(dim_);
    for (int c = 0; c < dim_; ++c) {
        kernel_hat_[c].assign(pad_total, {0.0, 0.0});
        for (std::size_t o2 = 0; o2 < m2; ++o2) {
            for (std::size_t o1 = 0; o1 < m1; ++o1) {
                for (std::size_t o0 = 0; o0 < m[0]; ++o0) {
                    const long off[3] = {
                        static_cast<long>(o0) - (grid.cells[0] - 1),
                        dim_ >= 2 ? static_cast<long>(o1) - (grid.cells[1] - 1) : 0,
                        dim_ >= 3 ? static_cast<long>(o2) - (grid.cells[2] - 1) : 0};
                    std::size_t w = 0, mult = 1;
                    for (int k = 0; k < dim_; ++k) {
                        const std::size_t pk = pad_[k];
                        const std::size_t wrapped =
                            off[k] >= 0 ? static_cast<std::size_t>(off[k])
                                        : pk - static_cast<std::size_t>(-off[k]);
                        w += wrapped * mult;
                        mult *= pk;
                    }
                    kernel_hat_[c][w] = offsets_[c * total + o0 + m[0] * (o1 + m1 * o2)];
                }
            }
        }
        fft_nd(kernel_hat_[c], pad_.data(), dim_, false);
    }
}

GridField VelocityConvolver::apply_direct(const GridField& rho) const {
    if (!(rho.spec == grid_)) throw StructureError("convolver: grid mismatch");
    GridField out(grid_, dim_, rho.time);
    if (zero_) return out;
    const double vol = grid_.cell_volume();
    const int n0 = grid_.count(0), n1 = grid_.count(1), n2 = grid_.count(2);
    const std::size_t m0 = 2 * static_cast<std::size_t>(n0) - 1;
    const std::size_t m1 = grid_.dim >= 2 ? 2 * static_cast<std::size_t>(n1) - 1 : 1;
    std::size_t total = m0 * m1;
    if (grid_.dim >= 3) total *= 2 * static_cast<std::size_t>(n2) - 1;
    for (int c = 0; c < dim_; ++c) {
        const double* kern = offsets_.data() + c * total;
        for (int i2 = 0; i2 < n2; ++i2)
            for (int i1 = 0; i1 < n1; ++i1)
                for (int i0 = 0; i0 < n0; ++i0) {
                    double acc = 0.0;
                    for (int j2 = 0; j2 < n2; ++j2)
                        for (int j1 = 0; j1 < n1; ++j1)
                            for (int j0 = 0; j0 < n0; ++j0) {
                                const std::size_t o0 = static_cast<std::size_t>(i0 - j0 + n0 - 1);
                                const std::size_t o1 =
                                    grid_.dim >= 2 ? static_cast<std::size_t>(i1 - j1 + n1 - 1)
                                                   : 0;
                                const std::size_t o2 =
                                    grid_.dim >= 3 ? static_cast<std::size_t>(i2 - j2 + n2 - 1)
                                                   : 0;
                                acc += kern[o0 + m0 * (o1 + m1 * o2)] *
                                       rho.at(grid_.flat(j0, j1, j2));
                            }
                    out.at(grid_.flat(i0, i1, i2), c) = acc * vol;
                }
    }
    return out;
}

GridField VelocityConvolver::apply_fft(const GridField& rho) const {
    if (!(rho.spec == grid_)) throw StructureError("convolver: grid mismatch");
    GridField out(grid_, dim_, rho.time);
    if (zero_) return out;
    std::size_t pad_total = 1;
    for (int k = 0; k < dim_; ++k) pad_total *= pad_[k];
    std::vector<std::complex<double>> rho_hat(pad_total, {0.0, 0.0});
    const int n0 = grid_.count(0), n1 = grid_.count(1), n2 = grid_.count(2);
    const std::size_t p0 = pad_[0];
    const std::size_t p01 = p0 * (dim_ >= 2 ? pad_[1] : 1);
    for (int i2 = 0; i2 < n2; ++i2)
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i0 = 0; i0 < n0; ++i0)
                rho_hat[i0 + p0 * i1 + p01 * i2] = rho.at(grid_.flat(i0, i1, i2));
    fft_nd(rho_hat, pad_.data(), dim_, false);

    const double vol = grid_.cell_volume();
    std::vector<std::complex<double>> work(pad_total);
    for (int c = 0; c < dim_; ++c) {
        for (std::size_t i = 0; i < pad_total; ++i) work[i] = rho_hat[i] * kernel_hat_[c][i];
        fft_nd(work, pad_.data(), dim_, true);
        for (int i2 = 0; i2 < n2; ++i2)
            for (int i1 = 0; i1 < n1; ++i1)
                for (int i0 = 0; i0 < n0; ++i0)
                    out.at(grid_.flat(i0, i1, i2), c) =
                        work[i0 + p0 * i1 + p01 * i2].real() * vol;
    }
    return out;
}

GridField VelocityConvolver::apply(const GridField& rho) const {
    if (zero_) {
        if (!(rho.spec == grid_)) throw StructureError("convolver: grid mismatch");
        return GridField(grid_, dim_, rho.time);
    }
    return prefer_fft_ ? apply_fft(rho) : apply_direct(rho);
}

GridField convolve_velocity(const GridField& rho, const KernelSpec& kernel,
                            std::optional<double> delta, bool principal_value) {
    return VelocityConvolver(rho.spec, kernel, delta, principal_value).apply(rho);
}

double diffusion_dt_bound(const GridSpec& grid, double nu) {
    if (nu <= 0.0) return std::numeric_limits<double>::infinity();
    double dx_min = grid.dx(0);
    for (int k = 1; k < grid.dim; ++k) dx_min = std::min(dx_min, grid.dx(k));
    return 0.9 * dx_min * dx_min / (2.0 * grid.dim * nu);
}

namespace {

void advect_axis(GridField& rho, const GridField& vel, int axis, double dt) {
    const GridSpec& g = rho.spec;
    const int n = g.count(axis);
    if (n < 2) return;
    const double dx = g.dx(axis);
    const std::size_t stride = stride_of(g, axis);
    const int n0 = g.count(0), n1 = g.count(1), n2 = g.count(2);
    std::vector<double> flux(n + 1);

    const int a0 = axis == 0 ? 1 : 0, a1 = axis == 1 ? 1 : 0, a2 = axis == 2 ? 1 : 0;
    const int l0 = a0 ? 1 : n0, l1 = a1 ? 1 : n1, l2 = a2 ? 1 : n2;
    for (int i2 = 0; i2 < l2; ++i2)
        for (int i1 = 0; i1 < l1; ++i1)
            for (int i0 = 0; i0 < l0; ++i0) {
                const std::size_t base = g.flat(i0, i1, i2);
                flux[0] = 0.0;
                flux[n] = 0.0;
                for (int f = 1; f < n; ++f) {
                    const std::size_t left = base + (f - 1) * stride;
                    const std::size_t right = base + f * stride;
                    const double u = 0.5 * (vel.at(left, axis) + vel.at(right, axis));
                    flux[f] = u >= 0.0 ? u * rho.at(left) : u * rho.at(right);
                }
                for (int c = 0; c < n; ++c)
                    rho.at(base + c * stride) -= dt / dx * (flux[c + 1] - flux[c]);
            }
}

void diffuse(GridField& rho, double dt, double nu) {
    const GridSpec& g = rho.spec;
    std::vector<double> delta(rho.data.size(), 0.0);
    for (int axis = 0; axis < g.dim; ++axis) {
        const int n = g.count(axis);
        if (n < 2) continue;
        const double coef = nu * dt / (g.dx(axis) * g.dx(axis));
        const std::size_t stride = stride_of(g, axis);
        const int n0 = g.count(0), n1 = g.count(1), n2 = g.count(2);
        const int l0 = axis == 0 ? 1 : n0, l1 = axis == 1 ? 1 : n1, l2 = axis == 2 ? 1 : n2;
        for (int i2 = 0; i2 < l2; ++i2)
            for (int i1 = 0; i1 < l1; ++i1)
                for (int i0 = 0; i0 < l0; ++i0) {
                    const std::size_t base = g.flat(i0, i1, i2);
                    for (int f = 1; f < n; ++f) {
                        const std::size_t left = base + (f - 1) * stride;
                        const std::size_t right = base + f * stride;
                        const double flow = coef * (rho.data[right] - rho.data[left]);
                        delta[left] += flow;
                        delta[right] -= flow;
                    }
                }
    }
    for (std::size_t i = 0; i < rho.data.size(); ++i) rho.data[i] += delta[i];
}

double max_axis_speed(const GridField& vel, int axis) {
    double m = 0.0;
    const std::size_t n = vel.spec.cell_count();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(vel.at(i, axis)));
    return m;
}

}  // namespace

GridField step_pde(const GridField& rho, const GridField& velocity, double dt, double nu) {
    if (rho.comps != 1) throw StructureError("step_pde: scalar density required");
    if (!(velocity.spec == rho.spec) || velocity.comps != rho.spec.dim)
        throw StructureError("step_pde: velocity field shape mismatch");
    const double bound = diffusion_dt_bound(rho.spec, nu);
    if (nu > 0.0 && dt > bound * (1.0 + 1e-12))
        throw NumericalError("step_pde: dt " + std::to_string(dt) +
                             " exceeds the diffusion stability bound; use dt <= " +
                             std::to_string(bound));

    GridField next = rho;
    // Advection CFL: substep so that u dt / dx <= 1/2 per sweep.
    int subs = 1;
    for (int axis = 0; axis < rho.spec.dim; ++axis) {
        const double u = max_axis_speed(velocity, axis);
        if (u > 0.0)
            subs = std::max(subs, static_cast<int>(
                                      std::ceil(dt * u / (0.5 * rho.spec.dx(axis)) - 1e-12)));
    }
    const double dt_adv = dt / subs;
    for (int s = 0; s < subs; ++s)
        for (int axis = 0; axis < rho.spec.dim; ++axis) advect_axis(next, velocity, axis, dt_adv);
    if (nu > 0.0) diffuse(next, dt, nu);
    next.time = rho.time + dt;
    return next;
}

namespace {

double field_mass(const GridField& f) {
    double s = 0.0;
    for (double v : f.data) s += v;
    return s * f.spec.cell_volume();
}

}  // namespace

PdeSolution solve_pde(const InitialDensity& density, const PdeConfig& cfg) {
    const GridSpec& grid = cfg.grid;
    if (grid.dim != density.dim) throw StructureError("solve_pde: grid/density dimension mismatch");
    if (cfg.dt <= 0.0 || cfg.horizon < 0.0) throw ConfigError("solve_pde: dt > 0, horizon >= 0");
    const double bound = diffusion_dt_bound(grid, cfg.nu);
    if (cfg.nu > 0.0 && cfg.dt > bound * (1.0 + 1e-12))
        throw NumericalError("solve_pde: dt " + std::to_string(cfg.dt) +
                             " violates the diffusion stability bound; use dt <= " +
                             std::to_string(bound));

    std::vector<double> frames = cfg.frame_times;
    if (frames.empty()) {
        const std::size_t steps =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt)));
        frames.resize(steps + 1);
        for (std::size_t k = 0; k <= steps; ++k) frames[k] = k * (cfg.horizon / steps);
    }
    if (frames.front() != 0.0) throw ConfigError("solve_pde: frame times must start at 0");
    for (std::size_t k = 1; k < frames.size(); ++k)
        if (frames[k] <= frames[k - 1])
            throw ConfigError("solve_pde: frame times must be strictly increasing");

    const bool zero_kernel = !cfg.kernel.singular() && cfg.kernel.family == "zero";
    std::optional<VelocityConvolver> convolver;
    if (!zero_kernel)
        convolver.emplace(grid, cfg.kernel, cfg.delta, cfg.principal_value);

    PdeSolution sol;
    sol.grid = grid;
    sol.nu = cfg.nu;

    GridField rho = project_density(density, grid);
    sol.initial_mass = field_mass(rho);
    double rho_max0 = *std::max_element(rho.data.begin(), rho.data.end());
    if (rho_max0 <= 0.0) throw NumericalError("solve_pde: projected density vanishes on the grid");
    sol.min_density = *std::min_element(rho.data.begin(), rho.data.end());

    auto record = [&](double t, const GridField& state) {
        GridField frame = state;
        frame.time = t;
        for (double& v : frame.data)
            if (v < 0.0 && v > -1e-12) {
                v = 0.0;
                ++sol.clipped_cells;
            }
        GridField vel = zero_kernel ? GridField(grid, grid.dim, t) : convolver->apply(frame);
        vel.time = t;
        sol.times.push_back(t);
        sol.mass.push_back(field_mass(frame));
        sol.density.push_back(std::move(frame));
        sol.velocity.push_back(std::move(vel));
    };

    record(0.0, rho);
    double t = 0.0;
    for (std::size_t f = 1; f < frames.size(); ++f) {
        const double target = frames[f];
        const int subs = std::max(1, static_cast<int>(std::ceil((target - t) / cfg.dt - 1e-9)));
        const double dt_sub = (target - t) / subs;
        for (int s = 0; s < subs; ++s) {
            GridField vel =
                zero_kernel ? GridField(grid, grid.dim, t) : convolver->apply(rho);
            rho = step_pde(rho, vel, dt_sub, cfg.nu);
            const double mass = field_mass(rho);
            if (!std::isfinite(mass))
                throw NumericalError("solve_pde: non-finite state at t = " + std::to_string(t));
            sol.mass_drift = std::max(sol.mass_drift, std::fabs(mass - sol.initial_mass));
            const double mn = *std::min_element(rho.data.begin(), rho.data.end());
            sol.min_density = std::min(sol.min_density, mn);
            const double mx = *std::max_element(rho.data.begin(), rho.data.end());
            if (mx > cfg.blowup_factor * rho_max0)
                throw NumericalError("solve_pde: possible blow-up at t = " + std::to_string(t) +
                                     " (max density grew beyond the guard)");
        }
        t = target;
        rho.time = t;
        record(t, rho);
    }
    return sol;
}

Vec VelocityProvider::operator()(const Vec& x, double t) const {
    const PdeSolution& sol = *sol_;
    const std::vector<double>& times = sol.times;
    if (t > times.back() + 1e-9)
        throw NumericalError("velocity provider: query beyond the solved horizon");
    auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12);
    std::size_t frame = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    if (frame >= sol.velocity.size()) frame = sol.velocity.size() - 1;
    const GridField& vel = sol.velocity[frame];
    const GridSpec& g = sol.grid;

    for (int k = 0; k < g.dim; ++k)
        if (x[k] < g.lo[k] || x[k] > g.hi[k]) {
            oob_.fetch_add(1, std::memory_order_relaxed);
            return zero_vec();
        }

    int base[3] = {0, 0, 0};
    double frac[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k < g.dim; ++k) {
        const double u = (x[k] - g.lo[k]) / g.dx(k) - 0.5;
        int i = static_cast<int>(std::floor(u));
        double s = u - i;
        if (i < 0) i = 0, s = 0.0;
        if (i > g.cells[k] - 2) i = g.cells[k] - 2, s = 1.0;
        if (g.cells[k] == 1) i = 0, s = 0.0;
        base[k] = i;
        frac[k] = s;
    }
    Vec out = zero_vec();
    const int corners = 1 << g.dim;
    for (int m = 0; m < corners; ++m) {
        double w = 1.0;
        int idx[3] = {base[0], base[1], base[2]};
        for (int k = 0; k < g.dim; ++k) {
            if (m & (1 << k)) {
                w *= frac[k];
                idx[k] = std::min(base[k] + 1, g.cells[k] - 1);
            } else {
                w *= 1.0 - frac[k];
            }
        }
        if (w == 0.0) continue;
        const std::size_t cell = g.flat(idx[0], idx[1], idx[2]);
        for (int c = 0; c < g.dim; ++c) out[c] += w * vel.at(cell, c);
    }
    return out;
}

VelocityFn VelocityProvider::fn() const {
    return [this](const Vec& x, double t) { return (*this)(x, t); };
}

}  // namespace mflab
