#ifndef HJB_HOWARD_HPP
#define HJB_HOWARD_HPP

#include "hjb/common.hpp"
#include "hjb/linalg.hpp"
#include "hjb/stencil.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <memory>
#include <optional>
#include <vector>

namespace hjb {

/// One time level of the discretized HJB system
///   sup_a ( M^a x - G^a ) = 0
/// presented row-wise over a finite control set.
class PolicyProblem {
public:
    virtual ~PolicyProblem() = default;

    virtual int size() const = 0;
    virtual int num_controls() const = 0;

    /// F(x)_i = max_a (M^a x - G^a)_i together with the per-row argmax
    /// (ties resolved to the smallest control index). `policy` may be null.
    virtual void residual_and_policy(const VectorXd& x, VectorXd& residual,
                                     std::vector<int>* policy) const = 0;

    /// Solves M^pi x = G^pi for the fixed row-wise policy pi. The relative
    /// residual of the returned solution is at most 1e-12.
    virtual VectorXd solve_for_policy(const std::vector<int>& policy) const = 0;

    /// Row inspection, used by structural audits and tests.
    virtual StencilRow row(int i, int control) const = 0;
};

VectorXd residual(const PolicyProblem& pp, const VectorXd& x);
std::vector<int> improve_policy(const PolicyProblem& pp, const VectorXd& x);
VectorXd solve_policy_linear(const PolicyProblem& pp, const std::vector<int>& policy);

struct HowardConfig {
    double tol = 1e-10; // on ||x_{k+1} - x_k||_inf, combined with policy repetition
    int max_iters = 100;
};

struct PolicyIterationResult {
    VectorXd x;
    int iterations = 0; // number of linear solves performed
    double final_residual = 0.0;
    std::vector<int> policy;
    bool converged = false;
    std::vector<double> residual_history;
    std::vector<double> step_history;
};

/// Policy iteration for sup_a (M^a x - G^a) = 0. Starts from x0; when an
/// initial policy is supplied the first linear solve uses it directly
/// (warm start). Non-convergence is reported through the result, not thrown.
PolicyIterationResult howard_solve(const PolicyProblem& pp, const VectorXd& x0,
                                   const HowardConfig& cfg = {},
                                   const std::vector<int>* initial_policy = nullptr);

/// Backend for 1D schemes: per-control banded matrices, solved by direct
/// banded elimination.
class BandedPolicyProblem final : public PolicyProblem {
public:
    BandedPolicyProblem(int n, int bandwidth, int num_controls);

    /// band(i, d) = M^a(i, i + d - bw); rows of out-of-range columns must be 0.
    MatrixXd& band(int control) { return bands_[control]; }
    const MatrixXd& band(int control) const { return bands_[control]; }
    VectorXd& rhs(int control) { return rhs_[control]; }
    const VectorXd& rhs(int control) const { return rhs_[control]; }
    int bandwidth() const { return bw_; }

    int size() const override { return n_; }
    int num_controls() const override { return static_cast<int>(bands_.size()); }
    void residual_and_policy(const VectorXd& x, VectorXd& residual,
                             std::vector<int>* policy) const override;
    VectorXd solve_for_policy(const std::vector<int>& policy) const override;
    StencilRow row(int i, int control) const override;

private:
    int n_;
    int bw_;
    std::vector<MatrixXd> bands_;
    std::vector<VectorXd> rhs_;
    mutable MatrixXd policy_band_;
    mutable VectorXd policy_rhs_;
    mutable BandedSolver solver_;
};

/// Backend for the 2D nine-point scheme: fixed sparsity pattern with
/// periodic column wrapping, solved by sparse LU.
class NinePointPolicyProblem final : public PolicyProblem {
public:
    /// cols(i, s) lists the (wrapped) column indices of row i; the pattern
    /// is shared by all controls.
    NinePointPolicyProblem(Eigen::MatrixXi cols, int num_controls);

    MatrixXd& coefs(int control) { return coefs_[control]; }
    const MatrixXd& coefs(int control) const { return coefs_[control]; }
    VectorXd& rhs(int control) { return rhs_[control]; }
    const VectorXd& rhs(int control) const { return rhs_[control]; }

    int size() const override { return n_; }
    int num_controls() const override { return static_cast<int>(coefs_.size()); }
    void residual_and_policy(const VectorXd& x, VectorXd& residual,
                             std::vector<int>* policy) const override;
    VectorXd solve_for_policy(const std::vector<int>& policy) const override;
    StencilRow row(int i, int control) const override;

private:
    int n_;
    Eigen::MatrixXi cols_;
    std::vector<MatrixXd> coefs_;
    std::vector<VectorXd> rhs_;
    mutable Eigen::SparseMatrix<double> matrix_;
    mutable Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    mutable std::vector<std::ptrdiff_t> value_slot_; // (i, s) -> value index
    mutable bool pattern_ready_ = false;
    void ensure_pattern() const;
};

/// Dense backend for small systems and enumeration oracles in tests.
class DensePolicyProblem final : public PolicyProblem {
public:
    DensePolicyProblem(std::vector<MatrixXd> matrices, std::vector<VectorXd> rhs);

    int size() const override { return n_; }
    int num_controls() const override { return static_cast<int>(matrices_.size()); }
    void residual_and_policy(const VectorXd& x, VectorXd& residual,
                             std::vector<int>* policy) const override;
    VectorXd solve_for_policy(const std::vector<int>& policy) const override;
    StencilRow row(int i, int control) const override;

private:
    int n_;
    std::vector<MatrixXd> matrices_;
    std::vector<VectorXd> rhs_;
};

} // namespace hjb

#endif
