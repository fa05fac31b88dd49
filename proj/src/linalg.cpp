#include "hjb/linalg.hpp"

#include <sstream>

namespace hjb {

BandedSolver::BandedSolver(int n, int bandwidth) : n_(n), bw_(bandwidth) {
    require(n >= 1, "matrix dimension must be positive");
    require(bandwidth >= 0, "bandwidth must be nonnegative");
    work_.resize(n_, 3 * bw_ + 1);
}

// Row-window elimination with partial pivoting. Row r keeps entries for
// absolute columns [r - bw, r + 2*bw]; with partial pivoting the U factor
// has at most 2*bw superdiagonals, so the window never overflows.
VectorXd BandedSolver::solve(const MatrixXd& band, const VectorXd& rhs) {
    require(band.rows() == n_ && band.cols() == 2 * bw_ + 1, "band storage shape mismatch");
    require(rhs.size() == n_, "rhs size mismatch");

    const int w = 3 * bw_ + 1;
    work_.leftCols(2 * bw_ + 1) = band;
    if (w > 2 * bw_ + 1) work_.rightCols(bw_).setZero();
    VectorXd b = rhs;

    const double max_entry = std::max(band.cwiseAbs().maxCoeff(), 1e-300);
    double min_pivot = std::numeric_limits<double>::infinity();

    for (int k = 0; k < n_; ++k) {
        const int rlast = std::min(k + bw_, n_ - 1);
        int p = k;
        double pmag = std::abs(work_(k, bw_));
        for (int r = k + 1; r <= rlast; ++r) {
            const double mag = std::abs(work_(r, k - r + bw_));
            if (mag > pmag) {
                pmag = mag;
                p = r;
            }
        }
        min_pivot = std::min(min_pivot, pmag);
        if (pmag <= 1e-14 * max_entry) {
            std::ostringstream oss;
            oss << "banded solve: singular or ill-conditioned matrix at column " << k
                << " (|pivot|/max|entry| = " << pmag / max_entry << ")";
            throw NumericalError(oss.str());
        }
        const int clast = std::min(k + 2 * bw_, n_ - 1);
        if (p != k) {
            for (int col = k; col <= clast; ++col)
                std::swap(work_(k, col - k + bw_), work_(p, col - p + bw_));
            std::swap(b[k], b[p]);
        }
        const double pivot = work_(k, bw_);
        for (int r = k + 1; r <= rlast; ++r) {
            const double m = work_(r, k - r + bw_) / pivot;
            if (m == 0.0) continue;
            work_(r, k - r + bw_) = 0.0;
            for (int col = k + 1; col <= clast; ++col)
                work_(r, col - r + bw_) -= m * work_(k, col - k + bw_);
            b[r] -= m * b[k];
        }
    }

    VectorXd x(n_);
    for (int k = n_ - 1; k >= 0; --k) {
        double s = b[k];
        const int clast = std::min(k + 2 * bw_, n_ - 1);
        for (int col = k + 1; col <= clast; ++col)
            s -= work_(k, col - k + bw_) * x[col];
        x[k] = s / work_(k, bw_);
    }
    return x;
}

VectorXd solve_banded(const MatrixXd& band, const VectorXd& rhs, int bandwidth) {
    BandedSolver solver(static_cast<int>(band.rows()), bandwidth);
    return solver.solve(band, rhs);
}

double banded_relative_residual(const MatrixXd& band, int bandwidth, const VectorXd& x,
                                const VectorXd& b) {
    const int n = static_cast<int>(band.rows());
    double rmax = 0.0;
    for (int i = 0; i < n; ++i) {
        double yi = 0.0;
        for (int d = 0; d <= 2 * bandwidth; ++d) {
            const int col = i + d - bandwidth;
            if (col >= 0 && col < n) yi += band(i, d) * x[col];
        }
        rmax = std::max(rmax, std::abs(yi - b[i]));
    }
    const double scale = b.cwiseAbs().maxCoeff() +
                         band.cwiseAbs().maxCoeff() * x.cwiseAbs().maxCoeff();
    return rmax / std::max(scale, 1e-300);
}

} // namespace hjb
