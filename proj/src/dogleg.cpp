#include "sqn/dogleg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sqn/error.hpp"

namespace sqn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd central_difference_jacobian(const std::function<VectorXd(const VectorXd&)>& f,
                                     const VectorXd& x, double rel_step) {
  MatrixXd jac;
  VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(std::abs(x[j]), 1e-3);
    xp[j] = x[j] + h;
    const VectorXd fp = f(xp);
    xp[j] = x[j] - h;
    const VectorXd fm = f(xp);
    xp[j] = x[j];
    if (j == 0) jac.resize(fp.size(), x.size());
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

namespace {

// Step of scaled length ≤ radius along Powell's dog-leg path.
VectorXd dogleg_step(const MatrixXd& jac, const VectorXd& r, const VectorXd& diag, double radius) {
  // Gauss-Newton step in scaled variables z = D p.
  const MatrixXd js = jac * diag.cwiseInverse().asDiagonal();
  const VectorXd z_gn = js.completeOrthogonalDecomposition().solve(-r);
  if (z_gn.norm() <= radius) return diag.cwiseInverse().cwiseProduct(z_gn);

  const VectorXd g = js.transpose() * r;  // scaled gradient
  const double g_norm = g.norm();
  if (g_norm == 0.0) return diag.cwiseInverse().cwiseProduct(z_gn * (radius / z_gn.norm()));
  const double jg = (js * g).squaredNorm();
  const double alpha = jg > 0.0 ? g_norm * g_norm / jg : std::numeric_limits<double>::infinity();
  const double sd_norm = alpha * g_norm;
  if (sd_norm >= radius) {
    return diag.cwiseInverse().cwiseProduct(-g * (radius / g_norm));
  }
  // z = z_sd + β (z_gn − z_sd) with ‖z‖ = radius
  const VectorXd z_sd = -alpha * g;
  const VectorXd d = z_gn - z_sd;
  const double a = d.squaredNorm();
  const double b = 2.0 * z_sd.dot(d);
  const double c = z_sd.squaredNorm() - radius * radius;
  const double disc = std::sqrt(std::max(b * b - 4.0 * a * c, 0.0));
  // stable root of a β² + b β + c = 0 with β ∈ [0, 1]
  const double beta = b > 0.0 ? (-2.0 * c) / (b + disc) : (-b + disc) / (2.0 * a);
  return diag.cwiseInverse().cwiseProduct(z_sd + std::clamp(beta, 0.0, 1.0) * d);
}

}  // namespace

DoglegResult dogleg(const LeastSquaresProblem& problem, const VectorXd& x0,
                    const DoglegOptions& opts) {
  auto jacobian_at = [&](const VectorXd& x) {
    return problem.jacobian ? problem.jacobian(x)
                            : central_difference_jacobian(problem.residuals, x, opts.fd_step);
  };

  DoglegResult res;
  res.x = x0;
  res.residuals = problem.residuals(x0);
  res.cost = 0.5 * res.residuals.squaredNorm();
  if (!std::isfinite(res.cost)) throw SingularJacobian("residuals are not finite at the start point");
  res.jacobian = jacobian_at(x0);

  const Eigen::Index n = x0.size();
  VectorXd diag = res.jacobian.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (diag[j] == 0.0) diag[j] = 1.0;
  }
  double radius = opts.initial_radius_factor * diag.cwiseProduct(x0).norm();
  if (radius == 0.0) radius = opts.initial_radius_factor;

  for (int iter = 0;; ++iter) {
    if (res.cost == 0.0) {
      res.converged = true;
      res.reason = "zero residual";
      break;
    }
    const VectorXd grad = res.jacobian.transpose() * res.residuals;
    if (opts.gtol > 0.0) {
      const double r_norm = res.residuals.norm();
      double cosine = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double col = res.jacobian.col(j).norm();
        if (col > 0.0) cosine = std::max(cosine, std::abs(grad[j]) / (col * r_norm));
      }
      if (cosine <= opts.gtol) {
        res.converged = true;
        res.reason = "gradient orthogonal to residual";
        break;
      }
    }
    if (grad.cwiseQuotient(diag).norm() == 0.0) {
      res.converged = true;
      res.reason = "zero gradient";
      break;
    }
    if (iter >= opts.max_iterations) {
      res.reason = "iteration limit";
      break;
    }

    // Inner loop: shrink the trust region until a step is accepted.
    bool done = false;
    for (;;) {
      const VectorXd p = dogleg_step(res.jacobian, res.residuals, diag, radius);
      const double p_norm = diag.cwiseProduct(p).norm();
      const VectorXd x_new = res.x + p;
      const VectorXd r_new = problem.residuals(x_new);
      double cost_new = 0.5 * r_new.squaredNorm();
      if (!std::isfinite(cost_new)) cost_new = std::numeric_limits<double>::infinity();
      const double predicted = res.cost - 0.5 * (res.residuals + res.jacobian * p).squaredNorm();
      const double actual = res.cost - cost_new;
      const double rho = predicted > 0.0 ? actual / predicted : -1.0;

      DoglegTraceEntry entry{radius, p_norm, res.cost, cost_new, rho, false};
      const double radius_used = radius;
      if (rho < 0.25) {
        radius = 0.25 * std::min(radius, p_norm);
      } else if (rho > 0.75) {
        radius = std::max(radius, 2.0 * p_norm);
      }

      if (rho > 1e-4 && cost_new <= res.cost) {
        entry.accepted = true;
        if (opts.record_trace) res.trace.push_back(entry);
        const double x_norm = diag.cwiseProduct(x_new).norm();
        const bool small_step = p_norm <= opts.xtol * x_norm;
        const bool small_drop = actual <= opts.ftol * res.cost && predicted <= opts.ftol * res.cost;
        res.x = x_new;
        res.residuals = r_new;
        res.cost = cost_new;
        res.jacobian = jacobian_at(res.x);
        ++res.iterations;
        diag = diag.cwiseMax(res.jacobian.colwise().norm().transpose());
        if (small_step || small_drop) {
          res.converged = true;
          res.reason = small_step ? "step below xtol" : "cost reduction below ftol";
          done = true;
        }
        break;
      }
      if (opts.record_trace) res.trace.push_back(entry);
      const double x_norm = diag.cwiseProduct(res.x).norm();
      if (radius_used <= opts.xtol * x_norm || radius == 0.0) {
        // No descent left at machine resolution: the current point is optimal.
        res.converged = true;
        res.reason = "trust region collapsed";
        done = true;
        break;
      }
    }
    if (done) break;
  }
  return res;
}

Covariance gauss_newton_covariance(const MatrixXd& jacobian, const VectorXd& residuals) {
  const Eigen::Index m = jacobian.rows();
  const Eigen::Index p = jacobian.cols();
  if (m <= p) throw SingularJacobian("covariance needs more residuals than parameters");

  VectorXd scale = jacobian.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(scale[j] > 0.0)) throw SingularJacobian("a parameter does not affect the residuals");
  }
  const MatrixXd js = jacobian * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<MatrixXd> svd(js, Eigen::ComputeThinV);
  const VectorXd sv = svd.singularValues();
  if (!(sv[p - 1] > 0.0) || sv[0] / sv[p - 1] > 1e14) {
    throw SingularJacobian("Jacobian is rank deficient at the optimum");
  }

  Covariance out;
  out.residual_variance = residuals.squaredNorm() / static_cast<double>(m - p);
  const MatrixXd v = svd.matrixV() * sv.cwiseInverse().asDiagonal();
  const MatrixXd inner = v * v.transpose();
  out.matrix = out.residual_variance * scale.cwiseInverse().asDiagonal() * inner *
               scale.cwiseInverse().asDiagonal();
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose());
  out.sigmas = out.matrix.diagonal().cwiseSqrt();
  out.correlation = MatrixXd::Identity(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double d = out.sigmas[i] * out.sigmas[j];
      if (i != j) out.correlation(i, j) = d > 0.0 ? out.matrix(i, j) / d : 0.0;
    }
  }
  return out;
}

}  // namespace sqn
