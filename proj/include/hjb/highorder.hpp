#ifndef HJB_HIGHORDER_HPP
#define HJB_HIGHORDER_HPP

#include "hjb/scheme.hpp"

namespace hjb {

enum class StencilSide { Minus, Plus };

/// Second-order one-sided first derivative on a uniform spacing:
///   Minus: (3 v_i - 4 v_{i-1} + v_{i-2}) / (2 dx)
///   Plus:  -(3 v_i - 4 v_{i+1} + v_{i+2}) / (2 dx)
double bdf2_d1(const VectorXd& values, double dx, int i, StencilSide side);

/// BDF2 row (time levels n+1, n, n-1) with the shifted second-order drift
/// stencils; rows i in {1, J-1} fall back to first-order upwind drift.
StencilRow assemble_bdf2_row(const HJBProblem& problem, const SpatialGrid1D& grid, double tau,
                             double t_next, int i, double a, const VectorXd& un,
                             const VectorXd& unm1);

/// First-step variant: implicit Euler in time with the same BDF2 spatial
/// discretization.
StencilRow assemble_bdf2_first_row(const HJBProblem& problem, const SpatialGrid1D& grid,
                                   double tau, double t_next, int i, double a,
                                   const VectorXd& u0);

/// Solves the first BDF2 step for u^1 by policy iteration.
VectorXd bdf2_first_step(const HJBProblem& problem, const SpatialGrid1D& grid, double tau,
                         const VectorXd& u0, const HowardConfig& cfg = {});

/// Crank-Nicolson row: trapezoidal average of the nonlinear operator with
/// classical centered drift differences; the explicit half step carries its
/// own optimization over the control set, the running cost sits at the
/// midpoint.
StencilRow assemble_cn_row(const HJBProblem& problem, const SpatialGrid1D& grid, double tau,
                           double t_next, int i, double a, const VectorXd& un);

/// Nine-point implicit finite-difference row on the periodic 2D grid.
StencilRow assemble_fd2d_row(const HJBProblem& problem, const PeriodicGrid2D& grid, double tau,
                             double t_next, int i, int j, const Vector2d& a, const VectorXd& un);

std::unique_ptr<SchemeFamily> make_bdf2_family(const HJBProblem& problem,
                                               const SpatialGrid1D& grid, double tau);

/// rannacher = true replaces the first two steps with plain implicit Euler.
std::unique_ptr<SchemeFamily> make_cn_family(const HJBProblem& problem,
                                             const SpatialGrid1D& grid, double tau,
                                             bool rannacher);

std::unique_ptr<SchemeFamily> make_fd2d_family(const HJBProblem& problem,
                                               const PeriodicGrid2D& grid, double tau);

} // namespace hjb

#endif
