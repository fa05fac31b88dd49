#ifndef HJB_STENCIL_HPP
#define HJB_STENCIL_HPP

#include "hjb/common.hpp"

#include <array>

namespace hjb {

/// One assembled row of the per-control system M^a u - G^a: the sparse
/// matrix entries of row i together with the right-hand side G_i.
struct StencilRow {
    static constexpr int kMaxEntries = 9;

    int row = 0;
    int size = 0;
    std::array<int, kMaxEntries> cols{};
    std::array<double, kMaxEntries> coefs{};
    double rhs = 0.0;

    /// Accumulates a coefficient, merging entries with equal column index.
    void add(int col, double value) {
        for (int s = 0; s < size; ++s) {
            if (cols[s] == col) {
                coefs[s] += value;
                return;
            }
        }
        if (size >= kMaxEntries) throw NumericalError("stencil row overflow");
        cols[size] = col;
        coefs[size] = value;
        ++size;
    }

    double coef(int col) const {
        for (int s = 0; s < size; ++s)
            if (cols[s] == col) return coefs[s];
        return 0.0;
    }

    double diag() const { return coef(row); }

    double offdiag_abs_sum() const {
        double sum = 0.0;
        for (int s = 0; s < size; ++s)
            if (cols[s] != row) sum += std::abs(coefs[s]);
        return sum;
    }

    double apply(const VectorXd& x) const {
        double y = 0.0;
        for (int s = 0; s < size; ++s) y += coefs[s] * x[cols[s]];
        return y;
    }
};

} // namespace hjb

#endif
