#ifndef HJB_LINALG_HPP
#define HJB_LINALG_HPP

#include "hjb/common.hpp"

namespace hjb {

/// Direct solver for banded systems A x = b with equal lower/upper
/// bandwidth. The band is stored row-wise: band(i, d) = A(i, i + d - bw)
/// for d in [0, 2*bw]; entries referring to columns outside [0, n) must
/// be zero. Gaussian elimination with partial pivoting.
class BandedSolver {
public:
    BandedSolver(int n, int bandwidth);

    /// Solves in one pass (factor + substitution); the band argument is not
    /// modified. Throws NumericalError with a pivot diagnostic when the
    /// matrix is singular to working precision.
    VectorXd solve(const MatrixXd& band, const VectorXd& rhs);

    int size() const { return n_; }
    int bandwidth() const { return bw_; }

private:
    int n_;
    int bw_;
    MatrixXd work_; // n x (4*bw + 1): fill-in window for pivoted elimination
};

/// Convenience one-shot wrapper around BandedSolver.
VectorXd solve_banded(const MatrixXd& band, const VectorXd& rhs, int bandwidth);

/// Max-norm relative residual ||A x - b|| / (||b|| + ||A||*||x||) for a
/// banded matrix in the storage described above.
double banded_relative_residual(const MatrixXd& band, int bandwidth, const VectorXd& x,
                                const VectorXd& b);

} // namespace hjb

#endif
