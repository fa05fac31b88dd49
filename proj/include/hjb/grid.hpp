#ifndef HJB_GRID_HPP
#define HJB_GRID_HPP

#include "hjb/common.hpp"

#include <vector>

namespace hjb {

/// One-dimensional spatial grid with strictly increasing nodes.
/// Grids are immutable after construction and safe to share between threads.
class SpatialGrid1D {
public:
    explicit SpatialGrid1D(VectorXd nodes);

    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    int num_cells() const { return num_nodes() - 1; }
    double node(int i) const { return nodes_[i]; }
    const VectorXd& nodes() const { return nodes_; }

    /// h_i = x_{i+1} - x_i, for i in [0, num_cells()).
    double spacing(int i) const { return spacings_[i]; }
    const VectorXd& spacings() const { return spacings_; }

    double max_spacing() const { return max_spacing_; }
    double min_spacing() const { return min_spacing_; }
    bool is_uniform() const { return uniform_; }

    double xmin() const { return nodes_[0]; }
    double xmax() const { return nodes_[nodes_.size() - 1]; }

    /// Index i of the cell [x_i, x_{i+1}] containing x; clamped to the
    /// first/last cell for x outside the grid.
    int cell_containing(double x) const;

private:
    VectorXd nodes_;
    VectorXd spacings_;
    double max_spacing_ = 0.0;
    double min_spacing_ = 0.0;
    bool uniform_ = false;
};

/// Uniform time grid t_n = n * dt with dt = horizon / steps.
struct TimeGrid {
    double horizon = 1.0;
    int steps = 1;

    TimeGrid() = default;
    TimeGrid(double T, int N);

    double dt() const { return horizon / steps; }
    double node(int n) const { return n * dt(); }
};

/// Uniform periodic tensor grid on (-pi, pi)^2 with J nodes per axis.
/// Values on the grid are stored flat, row-major: index = i * J + j,
/// where i indexes the first axis.
class PeriodicGrid2D {
public:
    explicit PeriodicGrid2D(int nodes_per_axis);

    int nodes_per_axis() const { return J_; }
    int num_nodes() const { return J_ * J_; }
    double spacing() const { return dx_; }

    int wrap(int i) const {
        int r = i % J_;
        return r < 0 ? r + J_ : r;
    }
    int flat_index(int i, int j) const { return wrap(i) * J_ + wrap(j); }

    double coord(int i) const { return -M_PI + wrap(i) * dx_; }
    Vector2d node(int i, int j) const { return {coord(i), coord(j)}; }

private:
    int J_;
    double dx_;
};

/// J+1 equally spaced nodes on [xmin, xmax].
SpatialGrid1D build_uniform_grid(double xmin, double xmax, int num_cells);

/// Non-uniform grid on [0, 200] with piecewise-constant spacings refined by
/// 2^k; total cell count is 60 * 2^k.
SpatialGrid1D build_butterfly_grid(int k);

/// Piecewise-linear interpolation of nodal values; outside the grid the
/// nearest boundary value is returned.
double interp_linear(const SpatialGrid1D& grid, const VectorXd& values, double x);

/// Periodic Q1 (bilinear) interpolation of flat row-major nodal values.
double interp_bilinear_periodic(const PeriodicGrid2D& grid, const VectorXd& values,
                                const Vector2d& p);

/// Three-point second-derivative approximation on a possibly non-uniform
/// grid; exact on quadratics. Requires an interior node index.
double d2_nonuniform(const VectorXd& values, const SpatialGrid1D& grid, int i);

/// Weights (w_minus, w_center, w_plus) such that d2_nonuniform(u, grid, i)
/// equals w_minus*u_{i-1} + w_center*u_i + w_plus*u_{i+1}.
struct D2Weights {
    double minus;
    double center;
    double plus;
};
D2Weights d2_nonuniform_weights(const SpatialGrid1D& grid, int i);

} // namespace hjb

#endif
