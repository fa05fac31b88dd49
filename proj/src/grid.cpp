#include "hjb/grid.hpp"

#include <algorithm>

namespace hjb {

SpatialGrid1D::SpatialGrid1D(VectorXd nodes) : nodes_(std::move(nodes)) {
    require(nodes_.size() >= 2, "grid needs at least two nodes");
    spacings_.resize(nodes_.size() - 1);
    for (int i = 0; i + 1 < nodes_.size(); ++i) {
        spacings_[i] = nodes_[i + 1] - nodes_[i];
        require(spacings_[i] > 0.0, "grid nodes must be strictly increasing");
    }
    max_spacing_ = spacings_.maxCoeff();
    min_spacing_ = spacings_.minCoeff();
    uniform_ = (spacings_.array() - spacings_[0]).abs().maxCoeff() <= 1e-12 * spacings_[0];
}

int SpatialGrid1D::cell_containing(double x) const {
    const double* begin = nodes_.data();
    const double* end = begin + nodes_.size();
    int i = static_cast<int>(std::upper_bound(begin, end, x) - begin) - 1;
    return std::clamp(i, 0, num_cells() - 1);
}

TimeGrid::TimeGrid(double T, int N) : horizon(T), steps(N) {
    require(T > 0.0, "time horizon must be positive");
    require(N >= 1, "need at least one time step");
}

PeriodicGrid2D::PeriodicGrid2D(int nodes_per_axis) : J_(nodes_per_axis) {
    require(J_ >= 3, "periodic grid needs at least three nodes per axis");
    dx_ = 2.0 * M_PI / J_;
}

SpatialGrid1D build_uniform_grid(double xmin, double xmax, int num_cells) {
    require(xmax > xmin, "xmax must exceed xmin");
    require(num_cells >= 2, "need at least two cells");
    VectorXd nodes = VectorXd::LinSpaced(num_cells + 1, xmin, xmax);
    return SpatialGrid1D(std::move(nodes));
}

SpatialGrid1D build_butterfly_grid(int k) {
    require(k >= 0, "refinement level must be nonnegative");
    // Segment breakpoints and base spacings; each spacing is divided by 2^k.
    const double breaks[] = {0, 40, 80, 88, 98, 102, 112, 120, 160, 200};
    const double steps[] = {10, 5, 2, 1, 0.5, 1, 2, 5, 10};
    const double scale = std::pow(2.0, -k);

    std::vector<double> nodes;
    nodes.push_back(0.0);
    for (int s = 0; s < 9; ++s) {
        const double h = steps[s] * scale;
        const int cells = static_cast<int>(std::lround((breaks[s + 1] - breaks[s]) / h));
        for (int c = 1; c <= cells; ++c)
            nodes.push_back(breaks[s] + c * h);
        nodes.back() = breaks[s + 1]; // pin breakpoints exactly
    }
    return SpatialGrid1D(Eigen::Map<const VectorXd>(nodes.data(), nodes.size()));
}

double interp_linear(const SpatialGrid1D& grid, const VectorXd& values, double x) {
    require(values.size() == grid.num_nodes(), "one value per grid node expected");
    require(is_finite(x), "interpolation point must be finite");
    if (x <= grid.xmin()) return values[0];
    if (x >= grid.xmax()) return values[values.size() - 1];
    const int i = grid.cell_containing(x);
    const double w = (x - grid.node(i)) / grid.spacing(i);
    return (1.0 - w) * values[i] + w * values[i + 1];
}

double interp_bilinear_periodic(const PeriodicGrid2D& grid, const VectorXd& values,
                                const Vector2d& p) {
    require(values.size() == grid.num_nodes(), "J*J values expected");
    require(is_finite(p[0]) && is_finite(p[1]), "interpolation point must be finite");
    const double dx = grid.spacing();
    // Cell index and local coordinate per axis, with periodic reduction.
    double u = (p[0] + M_PI) / dx;
    double v = (p[1] + M_PI) / dx;
    const int i0 = static_cast<int>(std::floor(u));
    const int j0 = static_cast<int>(std::floor(v));
    const double a = u - i0;
    const double b = v - j0;
    const double v00 = values[grid.flat_index(i0, j0)];
    const double v01 = values[grid.flat_index(i0, j0 + 1)];
    const double v10 = values[grid.flat_index(i0 + 1, j0)];
    const double v11 = values[grid.flat_index(i0 + 1, j0 + 1)];
    return (1.0 - a) * ((1.0 - b) * v00 + b * v01) + a * ((1.0 - b) * v10 + b * v11);
}

D2Weights d2_nonuniform_weights(const SpatialGrid1D& grid, int i) {
    require(i >= 1 && i <= grid.num_nodes() - 2, "second difference needs an interior node");
    const double hm = grid.spacing(i - 1);
    const double hp = grid.spacing(i);
    const double c = 2.0 / (hm + hp);
    return {c / hm, -c * (1.0 / hm + 1.0 / hp), c / hp};
}

double d2_nonuniform(const VectorXd& values, const SpatialGrid1D& grid, int i) {
    require(values.size() == grid.num_nodes(), "one value per grid node expected");
    const D2Weights w = d2_nonuniform_weights(grid, i);
    return w.minus * values[i - 1] + w.center * values[i] + w.plus * values[i + 1];
}

} // namespace hjb
