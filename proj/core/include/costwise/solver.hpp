#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "costwise/dnf.hpp"
#include "costwise/groups.hpp"

namespace costwise {

/// Design matrix with labels in {-1, +1}. Column names match circuit
/// feature ids, or "<feature>#<way>" after extension.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> columns;

    Eigen::Index rows() const { return X.rows(); }
    Eigen::Index cols() const { return X.cols(); }
};

/// Duplicates each feature column once per way, in extended-index order, so
/// the prediction x'beta lets ways of the same feature compete.
Dataset extend_design(const Dataset& base, const ThreeLayerForm& form);

struct LossGrad {
    double loss = 0.0;
    Eigen::VectorXd grad;
    double grad_intercept = 0.0;
};

/// Mean logistic loss (1/N) sum log(1 + exp(-y_i (x_i'beta + b))) and its
/// gradient, computed overflow-safely.
LossGrad logistic_loss_grad(const Eigen::VectorXd& beta, double intercept, const Dataset& data);
double logistic_loss(const Eigen::VectorXd& beta, double intercept, const Dataset& data);

double soft_threshold(double x, double t);

/// Euclidean projection onto the l1 ball of radius r (sort-based
/// water-filling, O(d log d), deterministic).
Eigen::VectorXd project_l1(const Eigen::VectorXd& v, double r);

/// argmin_x 0.5||x - v||^2 + tau ||x||_inf, via Moreau decomposition:
/// v minus the projection of v onto the l1 ball of radius tau.
Eigen::VectorXd prox_linf(const Eigen::VectorXd& v, double tau);

struct FitConfig {
    double lambda_financial = 0.0;
    double lambda_time = 0.0;
    int max_iters = 5000;
    double tol = 1e-6;
    double admm_rho = 1.0;
    bool adapt_rho = true;
    bool fit_intercept = true;
    std::uint64_t seed = 0;  // recorded in model files; every fit is deterministic
};

struct FitDiagnostics {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double objective = 0.0;
    bool converged = false;
};

/// Logistic loss plus the overlapping group-l-inf penalty, solved by ADMM
/// consensus splitting: one duplicate block per group with a closed-form
/// l-inf prox, beta-subproblem by warm-started accelerated gradient,
/// relative primal/dual residual stopping. Intercept unpenalized.
ExtendedModel fit_group(const Dataset& data, const std::vector<GroupSpec>& specs,
                        const FitConfig& cfg, FitDiagnostics* diag = nullptr);

/// FISTA with per-coordinate soft-thresholding. fit_l1 is fit_scaled_l1
/// with unit scale; both operate on base (non-extended) features.
ExtendedModel fit_l1(const Dataset& data, double lambda, const FitConfig& cfg,
                     FitDiagnostics* diag = nullptr);
ExtendedModel fit_scaled_l1(const Dataset& data, double lambda, const std::vector<double>& scale,
                            const FitConfig& cfg, FitDiagnostics* diag = nullptr);

/// Column z-scoring fitted on the training split. Constant columns get
/// stddev 1 so they pass through centered.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Standardizer fit(const Eigen::MatrixXd& X);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

}  // namespace costwise
