#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sqn {

/// min ½‖r(x)‖². When `jacobian` is empty, central differences are used.
struct LeastSquaresProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residuals;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

struct DoglegOptions {
  int max_iterations = 200;
  double ftol = 1.49e-8;  // relative reduction of the cost
  double xtol = 1.49e-8;  // relative scaled step
  double gtol = 0.0;      // cosine between residual and Jacobian columns
  double initial_radius_factor = 100.0;
  /// Relative step for finite-difference Jacobians.
  double fd_step = 6e-6;
  bool record_trace = false;
};

struct DoglegTraceEntry {
  double radius = 0.0;     // trust radius the step was constrained by
  double step_norm = 0.0;  // scaled norm ‖D p‖
  double cost_before = 0.0;
  double cost_after = 0.0;
  double rho = 0.0;  // actual over predicted reduction
  bool accepted = false;
};

struct DoglegResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;  // at x
  double cost = 0.0;         // ½‖r‖²
  int iterations = 0;        // Jacobian evaluations after the first
  bool converged = false;
  std::string reason;
  std::vector<DoglegTraceEntry> trace;
};

/// Powell's dog-leg trust-region method with MINPACK-style diagonal scaling
/// (D_j = running max of the Jacobian column norms).
DoglegResult dogleg(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                    const DoglegOptions& opts = {});

Eigen::MatrixXd central_difference_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double rel_step);

struct Covariance {
  Eigen::MatrixXd matrix;  // σ̂² (JᵀJ)⁻¹
  Eigen::VectorXd sigmas;
  Eigen::MatrixXd correlation;
  double residual_variance = 0.0;  // σ̂² = ‖r‖²/(m − p)
};

/// Gauss-Newton covariance at an optimum. Throws SingularJacobian when the
/// column-equilibrated Jacobian has condition number above 1e14 or when there
/// are no spare degrees of freedom.
Covariance gauss_newton_covariance(const Eigen::MatrixXd& jacobian,
                                   const Eigen::VectorXd& residuals);

}  // namespace sqn
