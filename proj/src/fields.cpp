#include "mflab/fields.hpp"

#include <cmath>

#include "mflab/errors.hpp"

namespace mflab {

std::size_t GridSpec::cell_count() const {
    std::size_t n = 1;
    for (int k = 0; k < dim; ++k) n *= static_cast<std::size_t>(cells[k]);
    return n;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= dx(k);
    return v;
}

std::size_t GridSpec::flat(int i0, int i1, int i2) const {
    std::size_t idx = static_cast<std::size_t>(i0);
    if (dim >= 2) idx += static_cast<std::size_t>(cells[0]) * i1;
    if (dim >= 3) idx += static_cast<std::size_t>(cells[0]) * cells[1] * i2;
    return idx;
}

Vec GridSpec::center(int i0, int i1, int i2) const {
    Vec c = zero_vec();
    const int idx[3] = {i0, i1, i2};
    for (int k = 0; k < dim; ++k) c[k] = lo[k] + (idx[k] + 0.5) * dx(k);
    return c;
}

bool GridSpec::operator==(const GridSpec& other) const {
    if (dim != other.dim) return false;
    for (int k = 0; k < dim; ++k)
        if (lo[k] != other.lo[k] || hi[k] != other.hi[k] || cells[k] != other.cells[k])
            return false;
    return true;
}

double epsilon_for(double h, int dim, double q0) {
    if (h <= 0.0) throw ConfigError("epsilon_for: h must be positive");
    const double q = q0 > 0.0 ? q0 : 1.0 / (6.0 * dim);
    return std::pow(h, q);
}

GridField project_density(const InitialDensity& density, const GridSpec& grid) {
    if (grid.dim != density.dim)
        throw StructureError("project_density: grid/density dimension mismatch");
    GridField field(grid, 1, 0.0);
    const int n0 = grid.count(0), n1 = grid.count(1), n2 = grid.count(2);
    for (int i2 = 0; i2 < n2; ++i2)
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i0 = 0; i0 < n0; ++i0)
                field.at(grid.flat(i0, i1, i2)) = density.eval(grid.center(i0, i1, i2));
    return field;
}

GridField deposit_empirical(const LatticeSample& sample, std::span<const Vec> positions,
                            const BlobSpec& blob, const GridSpec& grid) {
    const int d = grid.dim;
    if (d != blob.dim || d != sample.dim)
        throw StructureError("deposit: dimension mismatch between grid, blob and sample");
    if (positions.size() != sample.count())
        throw StructureError("deposit: position count differs from sample size");
    const double eps = blob.epsilon;
    for (int k = 0; k < d; ++k)
        if (grid.dx(k) > 0.25 * eps * (1.0 + 1e-12))
            throw ConfigError("deposit: grid spacing exceeds epsilon/4 on axis " +
                              std::to_string(k));

    GridField field(grid, 1);
    const double inv_eps = 1.0 / eps;
    std::array<std::vector<double>, 3> axis_weight;
    std::array<int, 3> first{0, 0, 0}, count{1, 1, 1};

    for (std::size_t p = 0; p < positions.size(); ++p) {
        const double w = sample.weights[p];
        if (w == 0.0) continue;
        bool overlap = true;
        for (int k = 0; k < d; ++k) {
            const double x = positions[p][k];
            const double dxk = grid.dx(k);
            // Cells whose centers fall inside the support slab |c - x| < eps/2.
            int i_lo = static_cast<int>(std::ceil((x - 0.5 * eps - grid.lo[k]) / dxk - 0.5));
            int i_hi = static_cast<int>(std::floor((x + 0.5 * eps - grid.lo[k]) / dxk - 0.5));
            i_lo = std::max(i_lo, 0);
            i_hi = std::min(i_hi, grid.cells[k] - 1);
            if (i_lo > i_hi) {
                overlap = false;
                break;
            }
            first[k] = i_lo;
            count[k] = i_hi - i_lo + 1;
            axis_weight[k].resize(count[k]);
            for (int i = 0; i < count[k]; ++i) {
                const double c = grid.lo[k] + (i_lo + i + 0.5) * dxk;
                axis_weight[k][i] = inv_eps * blob_profile((c - x) * inv_eps, blob);
            }
        }
        if (!overlap) continue;
        const int c1 = d >= 2 ? count[1] : 1;
        const int c2 = d >= 3 ? count[2] : 1;
        for (int i2 = 0; i2 < c2; ++i2) {
            const double w2 = d >= 3 ? axis_weight[2][i2] : 1.0;
            for (int i1 = 0; i1 < c1; ++i1) {
                const double w12 = w2 * (d >= 2 ? axis_weight[1][i1] : 1.0);
                if (w12 == 0.0) continue;
                const std::size_t base =
                    grid.flat(first[0], d >= 2 ? first[1] + i1 : 0, d >= 3 ? first[2] + i2 : 0);
                for (int i0 = 0; i0 < count[0]; ++i0)
                    field.data[base + i0] += w * w12 * axis_weight[0][i0];
            }
        }
    }
    return field;
}

GridField gradient(const GridField& field) {
    if (field.comps != 1) throw StructureError("gradient: scalar field required");
    const GridSpec& g = field.spec;
    const int d = g.dim;
    GridField out(g, d, field.time);

    const int n0 = g.count(0), n1 = g.count(1), n2 = g.count(2);
    for (int axis = 0; axis < d; ++axis) {
        const double inv2 = 1.0 / (2.0 * g.dx(axis));
        const int n = g.count(axis);
        if (n < 2) continue;
        const std::size_t stride = axis == 0 ? 1
                                 : axis == 1 ? static_cast<std::size_t>(n0)
                                             : static_cast<std::size_t>(n0) * n1;
        for (int i2 = 0; i2 < n2; ++i2) {
            for (int i1 = 0; i1 < n1; ++i1) {
                for (int i0 = 0; i0 < n0; ++i0) {
                    const int along = axis == 0 ? i0 : axis == 1 ? i1 : i2;
                    const std::size_t c = g.flat(i0, i1, i2);
                    double v;
                    if (n < 3) {
                        v = (field.at(along == 0 ? c + stride : c) -
                             field.at(along == 0 ? c : c - stride)) /
                            g.dx(axis);
                    } else if (along == 0) {
                        v = (-3.0 * field.at(c) + 4.0 * field.at(c + stride) -
                             field.at(c + 2 * stride)) *
                            inv2;
                    } else if (along == n - 1) {
                        v = (3.0 * field.at(c) - 4.0 * field.at(c - stride) +
                             field.at(c - 2 * stride)) *
                            inv2;
                    } else {
                        v = (field.at(c + stride) - field.at(c - stride)) * inv2;
                    }
                    out.at(c, axis) = v;
                }
            }
        }
    }
    return out;
}

double l2_norm_sq(const GridField& field) {
    double s = 0.0;
    for (double v : field.data) s += v * v;
    return s * field.spec.cell_volume();
}

SobolevError sobolev_error(const std::vector<GridField>& rho,
                           const std::vector<GridField>& rho_h) {
    if (rho.size() != rho_h.size() || rho.empty())
        throw StructureError("sobolev_error: series length mismatch");
    SobolevError err;
    err.times.reserve(rho.size());
    double integral = 0.0;
    double prev_grad = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) {
        if (!(rho[k].spec == rho_h[k].spec) || rho[k].time != rho_h[k].time)
            throw StructureError("sobolev_error: grid or time axis mismatch");
        GridField diff = rho[k];
        for (std::size_t i = 0; i < diff.data.size(); ++i) diff.data[i] -= rho_h[k].data[i];
        const double e = l2_norm_sq(diff);
        const double gsq = l2_norm_sq(gradient(diff));
        if (k > 0) integral += 0.5 * (gsq + prev_grad) * (rho[k].time - rho[k - 1].time);
        prev_grad = gsq;
        err.times.push_back(rho[k].time);
        err.l2_sq.push_back(e);
        err.grad_l2_sq.push_back(gsq);
        err.grad_integral.push_back(integral);
        err.headline = std::max(err.headline, e + integral);
    }
    return err;
}

}  // namespace mflab
