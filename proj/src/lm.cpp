#include "tipcav/lm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tipcav {

namespace {

double normalized_gradient(const Eigen::MatrixXd& J, const Eigen::VectorXd& r) {
  const double rn = r.norm();
  if (rn == 0.0) return 0.0;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < J.cols(); ++j) {
    const double cn = J.col(j).norm();
    if (cn == 0.0) continue;
    worst = std::max(worst, std::abs(J.col(j).dot(r)) / (cn * rn));
  }
  return worst;
}

}  // namespace

LmResult levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& initial,
                             const LmOptions& options) {
  const Eigen::Index np = initial.size();
  if (!problem.evaluate) throw std::invalid_argument("levenberg_marquardt: no residual function");
  if (!options.fixed.empty() && options.fixed.size() != static_cast<std::size_t>(np)) {
    throw std::invalid_argument("levenberg_marquardt: fixed mask size mismatch");
  }

  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < np; ++i) {
    if (options.fixed.empty() || !options.fixed[static_cast<std::size_t>(i)]) free.push_back(i);
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  const auto n = static_cast<Eigen::Index>(problem.n_residuals);

  auto is_feasible = [&](const Eigen::VectorXd& p) {
    if (!p.allFinite()) return false;
    return !problem.feasible || problem.feasible(p);
  };

  LmResult out;
  out.params = initial;
  if (!is_feasible(initial)) throw std::invalid_argument("levenberg_marquardt: infeasible initial point");

  Eigen::VectorXd r(n), r_trial(n);
  Eigen::MatrixXd J_full(n, np), J(n, nf);
  auto evaluate_with_jacobian = [&](const Eigen::VectorXd& p) {
    problem.evaluate(p, r, &J_full);
    for (Eigen::Index k = 0; k < nf; ++k) J.col(k) = J_full.col(free[static_cast<std::size_t>(k)]);
  };

  evaluate_with_jacobian(out.params);
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) throw std::invalid_argument("levenberg_marquardt: non-finite initial residuals");
  out.cost_history.push_back(cost);

  double damping = options.initial_damping;
  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    out.gradient_norm = normalized_gradient(J, r);
    if (cost == 0.0 || out.gradient_norm <= options.gradient_tolerance) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd scale = A.diagonal();
    const double floor = std::max(scale.maxCoeff(), 1e-300) * 1e-12;
    for (Eigen::Index k = 0; k < nf; ++k) scale[k] = std::max(scale[k], floor);

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd M = A;
      M.diagonal() += damping * scale;
      const Eigen::VectorXd step = M.ldlt().solve(-g);
      Eigen::VectorXd trial = out.params;
      for (Eigen::Index k = 0; k < nf; ++k) trial[free[static_cast<std::size_t>(k)]] += step[k];

      double trial_cost = std::numeric_limits<double>::infinity();
      if (step.allFinite() && is_feasible(trial)) {
        problem.evaluate(trial, r_trial, nullptr);
        trial_cost = r_trial.squaredNorm();
      }
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        const double previous = cost;
        out.params = trial;
        evaluate_with_jacobian(out.params);
        cost = r.squaredNorm();
        out.cost_history.push_back(cost);
        damping = std::max(damping * options.damping_down, 1e-15);
        accepted = true;
        if (previous - cost <= options.relative_tolerance * previous) {
          out.gradient_norm = normalized_gradient(J, r);
          out.converged = true;
        }
      } else {
        damping *= options.damping_up;
        if (damping > 1e16) break;
      }
    }
    if (out.converged) break;
    if (!accepted) {
      // Damping exhausted: no descent direction left at working precision.
      out.gradient_norm = normalized_gradient(J, r);
      out.converged = out.gradient_norm <= 1e-6;
      break;
    }
  }
  out.cost = cost;

  out.covariance = Eigen::MatrixXd::Zero(np, np);
  if (nf > 0) {
    const Eigen::MatrixXd A = J.transpose() * J;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    out.singular = sv[0] == 0.0 || sv[nf - 1] <= sv[0] * 1e-14;
    const double dof = static_cast<double>(std::max<Eigen::Index>(n - nf, 1));
    const double s2 = cost / dof;
    if (!out.singular) {
      const Eigen::MatrixXd inv = svd.solve(Eigen::MatrixXd::Identity(nf, nf));
      for (Eigen::Index a = 0; a < nf; ++a) {
        for (Eigen::Index b = 0; b < nf; ++b) {
          out.covariance(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]) = s2 * inv(a, b);
        }
      }
    } else {
      for (Eigen::Index k = 0; k < nf; ++k) {
        const auto i = free[static_cast<std::size_t>(k)];
        out.covariance(i, i) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return out;
}

}  // namespace tipcav
