#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

namespace tipcav {

/// Weighted nonlinear least squares: minimise sum_i r_i(p)^2, where the
/// caller already folds sqrt(weight) into r.
struct LeastSquaresProblem {
  std::size_t n_residuals = 0;
  /// Fills r (size n_residuals) and, when J is non-null, the Jacobian
  /// dr/dp (n_residuals x n_params).
  std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J)> evaluate;
  /// Optional domain check; infeasible trial points count as rejected steps.
  std::function<bool(const Eigen::VectorXd& p)> feasible;
};

struct LmOptions {
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 0.1;
  double relative_tolerance = 1e-10;  // on the residual norm change
  double gradient_tolerance = 1e-8;   // on the normalized gradient
  int max_iterations = 200;
  std::vector<bool> fixed;  // per parameter; empty = all free
};

struct LmResult {
  Eigen::VectorXd params;
  double cost = std::numeric_limits<double>::infinity();  // sum of squared residuals
  bool converged = false;
  bool singular = false;
  int iterations = 0;
  /// max_i |J_i . r| / (|J_i| |r|) over free parameters; scale-free.
  double gradient_norm = std::numeric_limits<double>::infinity();
  /// Covariance estimate s^2 (J^T J)^-1 with s^2 = cost / (n - p_free);
  /// rows/columns of fixed parameters are zero.
  Eigen::MatrixXd covariance;
  /// Cost after every accepted step, starting with the initial cost.
  std::vector<double> cost_history;
};

LmResult levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& initial,
                             const LmOptions& options = {});

}  // namespace tipcav
