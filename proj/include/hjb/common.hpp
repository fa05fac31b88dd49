#ifndef HJB_COMMON_HPP
#define HJB_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace hjb {

using Eigen::VectorXd;
using Eigen::Vector2d;
using Eigen::MatrixXd;

// Thrown when a precondition on user-supplied data is violated.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Thrown when a numerical phase cannot complete (singular solve,
// policy iteration that did not converge, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

inline bool is_finite(double x) { return std::isfinite(x); }

} // namespace hjb

#endif
