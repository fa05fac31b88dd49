#include "hjb/howard.hpp"

#include <Eigen/SparseCore>

namespace hjb {

VectorXd residual(const PolicyProblem& pp, const VectorXd& x) {
    VectorXd res(pp.size());
    pp.residual_and_policy(x, res, nullptr);
    return res;
}

std::vector<int> improve_policy(const PolicyProblem& pp, const VectorXd& x) {
    VectorXd res(pp.size());
    std::vector<int> policy(pp.size());
    pp.residual_and_policy(x, res, &policy);
    return policy;
}

VectorXd solve_policy_linear(const PolicyProblem& pp, const std::vector<int>& policy) {
    return pp.solve_for_policy(policy);
}

PolicyIterationResult howard_solve(const PolicyProblem& pp, const VectorXd& x0,
                                   const HowardConfig& cfg,
                                   const std::vector<int>* initial_policy) {
    require(cfg.tol > 0.0, "howard tolerance must be positive");
    require(x0.size() == pp.size(), "start vector size mismatch");

    PolicyIterationResult out;
    out.x = x0;

    std::vector<int> last_solved;
    if (initial_policy && static_cast<int>(initial_policy->size()) == pp.size()) {
        out.x = pp.solve_for_policy(*initial_policy);
        last_solved = *initial_policy;
        out.iterations = 1;
    }

    VectorXd res(pp.size());
    std::vector<int> policy(pp.size());
    while (true) {
        pp.residual_and_policy(out.x, res, &policy);
        out.residual_history.push_back(res.cwiseAbs().maxCoeff());
        if (!last_solved.empty() && policy == last_solved) {
            // x already solves M^pi x = G^pi and pi is still the argmax.
            out.converged = true;
            break;
        }
        if (out.iterations >= cfg.max_iters) break;
        VectorXd x_next = pp.solve_for_policy(policy);
        ++out.iterations;
        const double step = (x_next - out.x).cwiseAbs().maxCoeff();
        out.step_history.push_back(step);
        out.x = std::move(x_next);
        last_solved = policy;
        if (step <= cfg.tol) {
            out.converged = true;
            pp.residual_and_policy(out.x, res, &policy);
            out.residual_history.push_back(res.cwiseAbs().maxCoeff());
            break;
        }
    }
    out.policy = policy;
    out.final_residual = out.residual_history.back();
    return out;
}

// ---------------------------------------------------------------------------
// Banded backend

BandedPolicyProblem::BandedPolicyProblem(int n, int bandwidth, int num_controls)
    : n_(n), bw_(bandwidth), solver_(n, bandwidth) {
    require(num_controls >= 1, "control set must be nonempty");
    bands_.assign(num_controls, MatrixXd::Zero(n_, 2 * bw_ + 1));
    rhs_.assign(num_controls, VectorXd::Zero(n_));
    policy_band_.resize(n_, 2 * bw_ + 1);
    policy_rhs_.resize(n_);
}

void BandedPolicyProblem::residual_and_policy(const VectorXd& x, VectorXd& res,
                                              std::vector<int>* policy) const {
    require(x.size() == n_, "state size mismatch");
    res.resize(n_);
    if (policy) policy->assign(n_, 0);
    static thread_local VectorXd y;
    y.resize(n_);
    for (int a = 0; a < num_controls(); ++a) {
        y = -rhs_[a];
        const MatrixXd& band = bands_[a];
        for (int d = 0; d <= 2 * bw_; ++d) {
            const int off = d - bw_;
            const int r0 = std::max(0, -off);
            const int len = n_ - std::max(0, off) - r0;
            if (len <= 0) continue;
            y.segment(r0, len).array() +=
                band.col(d).segment(r0, len).array() * x.segment(r0 + off, len).array();
        }
        if (a == 0) {
            res = y;
        } else if (policy) {
            for (int i = 0; i < n_; ++i) {
                if (y[i] > res[i]) {
                    res[i] = y[i];
                    (*policy)[i] = a;
                }
            }
        } else {
            res = res.cwiseMax(y);
        }
    }
}

VectorXd BandedPolicyProblem::solve_for_policy(const std::vector<int>& policy) const {
    require(static_cast<int>(policy.size()) == n_, "policy size mismatch");
    for (int i = 0; i < n_; ++i) {
        const int a = policy[i];
        policy_band_.row(i) = bands_[a].row(i);
        policy_rhs_[i] = rhs_[a][i];
    }
    VectorXd x = solver_.solve(policy_band_, policy_rhs_);
    if (banded_relative_residual(policy_band_, bw_, x, policy_rhs_) > 1e-12)
        throw NumericalError("banded policy solve failed the residual contract");
    return x;
}

StencilRow BandedPolicyProblem::row(int i, int control) const {
    StencilRow r;
    r.row = i;
    for (int d = 0; d <= 2 * bw_; ++d) {
        const int col = i + d - bw_;
        const double v = bands_[control](i, d);
        if (col >= 0 && col < n_ && v != 0.0) r.add(col, v);
    }
    if (r.coef(i) == 0.0) r.add(i, 0.0);
    r.rhs = rhs_[control][i];
    return r;
}

// ---------------------------------------------------------------------------
// Nine-point backend

NinePointPolicyProblem::NinePointPolicyProblem(Eigen::MatrixXi cols, int num_controls)
    : n_(static_cast<int>(cols.rows())), cols_(std::move(cols)) {
    require(num_controls >= 1, "control set must be nonempty");
    coefs_.assign(num_controls, MatrixXd::Zero(n_, cols_.cols()));
    rhs_.assign(num_controls, VectorXd::Zero(n_));
}

void NinePointPolicyProblem::residual_and_policy(const VectorXd& x, VectorXd& res,
                                                 std::vector<int>* policy) const {
    require(x.size() == n_, "state size mismatch");
    res.resize(n_);
    if (policy) policy->assign(n_, 0);
    const int S = static_cast<int>(cols_.cols());
    static thread_local VectorXd y;
    y.resize(n_);
    for (int a = 0; a < num_controls(); ++a) {
        y = -rhs_[a];
        const MatrixXd& coef = coefs_[a];
        for (int i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (int s = 0; s < S; ++s) acc += coef(i, s) * x[cols_(i, s)];
            y[i] += acc;
        }
        if (a == 0) {
            res = y;
        } else if (policy) {
            for (int i = 0; i < n_; ++i) {
                if (y[i] > res[i]) {
                    res[i] = y[i];
                    (*policy)[i] = a;
                }
            }
        } else {
            res = res.cwiseMax(y);
        }
    }
}

void NinePointPolicyProblem::ensure_pattern() const {
    if (pattern_ready_) return;
    const int S = static_cast<int>(cols_.cols());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n_) * S);
    for (int i = 0; i < n_; ++i)
        for (int s = 0; s < S; ++s) trip.emplace_back(i, cols_(i, s), 1.0);
    matrix_.resize(n_, n_);
    matrix_.setFromTriplets(trip.begin(), trip.end());
    matrix_.makeCompressed();
    // Record where each (row, stencil slot) lives in the compressed storage
    // so policy updates can rewrite values in place.
    value_slot_.assign(static_cast<size_t>(n_) * S, -1);
    for (int i = 0; i < n_; ++i)
        for (int s = 0; s < S; ++s) {
            const double* p = &matrix_.coeffRef(i, cols_(i, s));
            value_slot_[static_cast<size_t>(i) * S + s] = p - matrix_.valuePtr();
        }
    lu_.analyzePattern(matrix_);
    pattern_ready_ = true;
}

VectorXd NinePointPolicyProblem::solve_for_policy(const std::vector<int>& policy) const {
    require(static_cast<int>(policy.size()) == n_, "policy size mismatch");
    ensure_pattern();
    const int S = static_cast<int>(cols_.cols());
    std::fill(matrix_.valuePtr(), matrix_.valuePtr() + matrix_.nonZeros(), 0.0);
    VectorXd b(n_);
    for (int i = 0; i < n_; ++i) {
        const MatrixXd& coef = coefs_[policy[i]];
        for (int s = 0; s < S; ++s)
            matrix_.valuePtr()[value_slot_[static_cast<size_t>(i) * S + s]] += coef(i, s);
        b[i] = rhs_[policy[i]][i];
    }
    lu_.factorize(matrix_);
    if (lu_.info() != Eigen::Success)
        throw NumericalError("sparse policy solve: factorization failed (singular matrix?)");
    VectorXd x = lu_.solve(b);
    const double scale = b.cwiseAbs().maxCoeff() +
                         Eigen::Map<const VectorXd>(matrix_.valuePtr(), matrix_.nonZeros())
                                 .cwiseAbs()
                                 .maxCoeff() *
                             x.cwiseAbs().maxCoeff();
    if ((matrix_ * x - b).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300))
        throw NumericalError("sparse policy solve failed the residual contract");
    return x;
}

StencilRow NinePointPolicyProblem::row(int i, int control) const {
    StencilRow r;
    r.row = i;
    for (int s = 0; s < cols_.cols(); ++s) r.add(cols_(i, s), coefs_[control](i, s));
    r.rhs = rhs_[control][i];
    return r;
}

// ---------------------------------------------------------------------------
// Dense backend

DensePolicyProblem::DensePolicyProblem(std::vector<MatrixXd> matrices,
                                       std::vector<VectorXd> rhs)
    : matrices_(std::move(matrices)), rhs_(std::move(rhs)) {
    require(!matrices_.empty(), "control set must be nonempty");
    require(matrices_.size() == rhs_.size(), "matrix/rhs count mismatch");
    n_ = static_cast<int>(matrices_[0].rows());
    for (size_t a = 0; a < matrices_.size(); ++a) {
        require(matrices_[a].rows() == n_ && matrices_[a].cols() == n_, "matrix shape mismatch");
        require(rhs_[a].size() == n_, "rhs size mismatch");
    }
}

void DensePolicyProblem::residual_and_policy(const VectorXd& x, VectorXd& res,
                                             std::vector<int>* policy) const {
    require(x.size() == n_, "state size mismatch");
    res.resize(n_);
    if (policy) policy->assign(n_, 0);
    for (int a = 0; a < num_controls(); ++a) {
        VectorXd y = matrices_[a] * x - rhs_[a];
        if (a == 0) {
            res = y;
        } else {
            for (int i = 0; i < n_; ++i) {
                if (y[i] > res[i]) {
                    res[i] = y[i];
                    if (policy) (*policy)[i] = a;
                }
            }
        }
    }
}

VectorXd DensePolicyProblem::solve_for_policy(const std::vector<int>& policy) const {
    require(static_cast<int>(policy.size()) == n_, "policy size mismatch");
    MatrixXd M(n_, n_);
    VectorXd b(n_);
    for (int i = 0; i < n_; ++i) {
        M.row(i) = matrices_[policy[i]].row(i);
        b[i] = rhs_[policy[i]][i];
    }
    Eigen::FullPivLU<MatrixXd> lu(M);
    if (!lu.isInvertible())
        throw NumericalError("dense policy solve: singular matrix (rank " +
                             std::to_string(lu.rank()) + " of " + std::to_string(n_) + ")");
    VectorXd x = lu.solve(b);
    const double scale =
        b.cwiseAbs().maxCoeff() + M.cwiseAbs().maxCoeff() * x.cwiseAbs().maxCoeff();
    if ((M * x - b).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300))
        throw NumericalError("dense policy solve failed the residual contract");
    return x;
}

StencilRow DensePolicyProblem::row(int i, int control) const {
    StencilRow r;
    r.row = i;
    r.add(i, matrices_[control](i, i));
    for (int j = 0; j < n_; ++j)
        if (j != i && matrices_[control](i, j) != 0.0) r.add(j, matrices_[control](i, j));
    r.rhs = rhs_[control][i];
    return r;
}

} // namespace hjb
