#include "costwise/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace costwise {

namespace {

double softplus(double z) {  // log(1 + exp(z)), overflow-safe
    if (z > 0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double sigma_neg(double m) {  // 1 / (1 + exp(m))
    if (m >= 0) {
        double e = std::exp(-m);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(m));
}

void check_dataset(const Dataset& data) {
    if (data.X.rows() != data.y.size())
        throw error("dataset: " + std::to_string(data.X.rows()) + " rows but " +
                    std::to_string(data.y.size()) + " labels");
    if (data.X.rows() == 0) throw error("dataset: empty");
    for (Eigen::Index i = 0; i < data.y.size(); ++i)
        if (data.y(i) != 1.0 && data.y(i) != -1.0)
            throw error("dataset: label at row " + std::to_string(i) + " is not +/-1");
}

// Largest eigenvalue of [X, 1]' [X, 1] (without the 1-column when the
// intercept is fixed), by deterministic power iteration.
double design_gram_norm(const Dataset& data, bool with_intercept) {
    const Eigen::Index d = data.X.cols() + (with_intercept ? 1 : 0);
    if (d == 0) return 0.0;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(d) / std::sqrt(static_cast<double>(d));
    double lambda = 0.0;
    for (int it = 0; it < 300; ++it) {
        Eigen::VectorXd w = data.X * v.head(data.X.cols());
        if (with_intercept) w.array() += v(d - 1);
        Eigen::VectorXd next(d);
        next.head(data.X.cols()) = data.X.transpose() * w;
        if (with_intercept) next(d - 1) = w.sum();
        double norm = next.norm();
        if (norm == 0.0) return 0.0;
        next /= norm;
        if (std::abs(norm - lambda) <= 1e-12 * std::max(1.0, norm)) return norm;
        lambda = norm;
        v = std::move(next);
    }
    return lambda;
}

double loss_lipschitz(const Dataset& data, bool with_intercept) {
    // Hessian of the mean logistic loss is bounded by Gram/(4N).
    double g = design_gram_norm(data, with_intercept);
    double L = 1.01 * g / (4.0 * static_cast<double>(data.X.rows()));
    return std::max(L, 1e-12);
}

[[noreturn]] void diverged(int iteration) {
    throw error("diverged at iteration " + std::to_string(iteration));
}

// FISTA with monotone restart: on an objective increase the step is retaken
// from the current iterate (plain proximal step, guaranteed descent).
// `prox` maps (point, inverse step) to the next iterate in place.
template <typename Objective, typename Gradient, typename Prox>
int accelerated_descent(Eigen::VectorXd& x, double& b, double L, int max_iters, double tol,
                        bool fit_intercept, Objective&& objective, Gradient&& gradient,
                        Prox&& prox, bool& converged) {
    Eigen::VectorXd y = x;
    double by = b;
    double t = 1.0;
    double F_prev = objective(x, b);
    if (!std::isfinite(F_prev)) diverged(0);
    converged = false;
    int it = 0;
    Eigen::VectorXd grad(x.size());
    for (; it < max_iters; ++it) {
        double gb = 0.0;
        gradient(y, by, grad, gb);
        Eigen::VectorXd xn = y - grad / L;
        double bn = fit_intercept ? by - gb / L : b;
        prox(xn, L);
        double F = objective(xn, bn);
        if (F > F_prev + 1e-15) {
            gradient(x, b, grad, gb);
            xn = x - grad / L;
            bn = fit_intercept ? b - gb / L : b;
            prox(xn, L);
            F = objective(xn, bn);
            t = 1.0;
        }
        if (!std::isfinite(F)) diverged(it + 1);
        double scale = std::max({1.0, x.lpNorm<Eigen::Infinity>(), std::abs(b)});
        double step = std::max((xn - x).lpNorm<Eigen::Infinity>(), std::abs(bn - b));
        double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = xn + ((t - 1.0) / tn) * (xn - x);
        by = bn + ((t - 1.0) / tn) * (bn - b);
        t = tn;
        x = std::move(xn);
        b = bn;
        F_prev = F;
        if (step <= tol * scale) {
            converged = true;
            ++it;
            break;
        }
    }
    return it;
}

ExtendedModel fista_weighted_l1(const Dataset& data, const Eigen::VectorXd& weights,
                                const FitConfig& cfg, FitDiagnostics* diag) {
    check_dataset(data);
    const Eigen::Index d = data.X.cols();
    double L = loss_lipschitz(data, cfg.fit_intercept);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    double b = 0.0;

    auto objective = [&](const Eigen::VectorXd& beta, double ib) {
        return logistic_loss(beta, ib, data) + weights.dot(beta.cwiseAbs());
    };
    auto gradient = [&](const Eigen::VectorXd& beta, double ib, Eigen::VectorXd& g, double& gb) {
        LossGrad lg = logistic_loss_grad(beta, ib, data);
        g = std::move(lg.grad);
        gb = lg.grad_intercept;
    };
    auto prox = [&](Eigen::VectorXd& v, double inv_step) {
        for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = soft_threshold(v(j), weights(j) / inv_step);
    };

    bool converged = false;
    int iters = accelerated_descent(x, b, L, cfg.max_iters, cfg.tol, cfg.fit_intercept, objective,
                                    gradient, prox, converged);
    ExtendedModel model;
    model.beta.assign(x.data(), x.data() + x.size());
    model.intercept = b;
    if (diag) {
        diag->iterations = iters;
        diag->primal_residual = 0.0;
        diag->dual_residual = 0.0;
        diag->objective = objective(x, b);
        diag->converged = converged;
    }
    return model;
}

}  // namespace

Dataset extend_design(const Dataset& base, const ThreeLayerForm& form) {
    std::map<std::string, Eigen::Index> col_of;
    for (std::size_t j = 0; j < base.columns.size(); ++j)
        col_of[base.columns[j]] = static_cast<Eigen::Index>(j);

    Dataset out;
    out.y = base.y;
    out.X.resize(base.X.rows(), static_cast<Eigen::Index>(form.ways.size()));
    for (std::size_t j = 0; j < form.ways.size(); ++j) {
        const Way& w = form.ways[j];
        auto it = col_of.find(w.feature_id);
        if (it == col_of.end()) throw error("extend_design: missing feature column " + w.feature_id);
        out.X.col(static_cast<Eigen::Index>(j)) = base.X.col(it->second);
        out.columns.push_back(w.feature_id + "#" + std::to_string(w.way_index));
    }
    return out;
}

double logistic_loss(const Eigen::VectorXd& beta, double intercept, const Dataset& data) {
    Eigen::VectorXd margins = data.y.array() * (data.X * beta).array() + data.y.array() * intercept;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) loss += softplus(-margins(i));
    return loss / static_cast<double>(margins.size());
}

LossGrad logistic_loss_grad(const Eigen::VectorXd& beta, double intercept, const Dataset& data) {
    if (beta.size() != data.X.cols())
        throw error("logistic_loss_grad: beta has " + std::to_string(beta.size()) +
                    " coordinates, X has " + std::to_string(data.X.cols()) + " columns");
    const double N = static_cast<double>(data.X.rows());
    Eigen::VectorXd margins = data.y.array() * (data.X * beta).array() + data.y.array() * intercept;
    LossGrad out;
    Eigen::VectorXd w(margins.size());
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
        out.loss += softplus(-margins(i));
        w(i) = data.y(i) * sigma_neg(margins(i));
    }
    out.loss /= N;
    out.grad = -(data.X.transpose() * w) / N;
    out.grad_intercept = -w.sum() / N;
    return out;
}

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

Eigen::VectorXd project_l1(const Eigen::VectorXd& v, double r) {
    if (r <= 0) throw error("project_l1: radius must be positive");
    Eigen::VectorXd a = v.cwiseAbs();
    if (a.sum() <= r) return v;
    std::vector<double> u(a.data(), a.data() + a.size());
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cum += u[i];
        double candidate = (cum - r) / static_cast<double>(i + 1);
        if (u[i] - candidate > 0) theta = candidate;
    }
    Eigen::VectorXd out(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        double m = std::max(a(j) - theta, 0.0);
        out(j) = v(j) >= 0 ? m : -m;
    }
    return out;
}

Eigen::VectorXd prox_linf(const Eigen::VectorXd& v, double tau) {
    if (tau < 0) throw error("prox_linf: negative threshold");
    if (tau == 0.0) return v;
    if (v.cwiseAbs().sum() <= tau) return Eigen::VectorXd::Zero(v.size());
    return v - project_l1(v, tau);
}

ExtendedModel fit_l1(const Dataset& data, double lambda, const FitConfig& cfg,
                     FitDiagnostics* diag) {
    if (lambda < 0) throw error("fit_l1: negative lambda");
    return fista_weighted_l1(data, Eigen::VectorXd::Constant(data.X.cols(), lambda), cfg, diag);
}

ExtendedModel fit_scaled_l1(const Dataset& data, double lambda, const std::vector<double>& scale,
                            const FitConfig& cfg, FitDiagnostics* diag) {
    if (lambda < 0) throw error("fit_scaled_l1: negative lambda");
    if (static_cast<Eigen::Index>(scale.size()) != data.X.cols())
        throw error("fit_scaled_l1: scale has " + std::to_string(scale.size()) +
                    " entries, X has " + std::to_string(data.X.cols()) + " columns");
    Eigen::VectorXd weights(data.X.cols());
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
        if (scale[static_cast<std::size_t>(j)] < 1.0)
            throw error("fit_scaled_l1: scale entries must be >= 1");
        weights(j) = lambda * scale[static_cast<std::size_t>(j)];
    }
    return fista_weighted_l1(data, weights, cfg, diag);
}

ExtendedModel fit_group(const Dataset& data, const std::vector<GroupSpec>& specs,
                        const FitConfig& cfg, FitDiagnostics* diag) {
    check_dataset(data);
    const Eigen::Index d = data.X.cols();

    struct FlatGroup {
        double tau;
        std::vector<Eigen::Index> idx;
        Eigen::VectorXd z, u;
    };
    std::vector<FlatGroup> gs;
    for (const auto& spec : specs) {
        for (const auto& g : spec.groups) {
            double tau = spec.lambda * g.cost;
            if (tau == 0.0) continue;  // no penalty, no constraint needed
            FlatGroup fg;
            fg.tau = tau;
            for (std::size_t j : g.indices) {
                if (static_cast<Eigen::Index>(j) >= d)
                    throw error("fit_group: group index " + std::to_string(j) +
                                " outside the design (" + std::to_string(d) + " columns)");
                fg.idx.push_back(static_cast<Eigen::Index>(j));
            }
            fg.z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fg.idx.size()));
            fg.u = fg.z;
            gs.push_back(std::move(fg));
        }
    }
    if (gs.empty())
        return fista_weighted_l1(data, Eigen::VectorXd::Zero(d), cfg, diag);

    Eigen::VectorXd multiplicity = Eigen::VectorXd::Zero(d);
    std::size_t stack_len = 0;
    for (const auto& g : gs) {
        for (Eigen::Index j : g.idx) multiplicity(j) += 1.0;
        stack_len += g.idx.size();
    }
    const double max_mult = multiplicity.maxCoeff();

    const double Lf = loss_lipschitz(data, cfg.fit_intercept);
    double rho = cfg.admm_rho;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
    double b = 0.0;

    auto group_penalty = [&](const Eigen::VectorXd& bb) {
        double p = 0.0;
        for (const auto& g : gs) {
            double m = 0.0;
            for (Eigen::Index j : g.idx) m = std::max(m, std::abs(bb(j)));
            p += g.tau * m;
        }
        return p;
    };

    double r_rel = 1.0, s_rel = 1.0;
    double r = 0.0, s = 0.0;
    bool converged = false;
    int outer = 0;
    Eigen::VectorXd svec(d), agg_change(d);
    for (; outer < cfg.max_iters && !converged; ++outer) {
        // beta-step: loss plus the rho-quadratic pulling beta toward the
        // per-group consensus targets z - u.
        svec.setZero();
        for (const auto& g : gs)
            for (std::size_t i = 0; i < g.idx.size(); ++i) svec(g.idx[i]) += g.z(i) - g.u(i);
        const double Lq = Lf + rho * max_mult;
        double inner_tol =
            std::clamp(0.05 * std::max(r_rel, s_rel), cfg.tol * 1e-2, 1e-4);
        auto objective = [&](const Eigen::VectorXd& bb, double ib) {
            double quad = 0.0;
            for (Eigen::Index j = 0; j < d; ++j)
                quad += multiplicity(j) * bb(j) * bb(j) - 2.0 * svec(j) * bb(j);
            return logistic_loss(bb, ib, data) + 0.5 * rho * quad;
        };
        auto gradient = [&](const Eigen::VectorXd& bb, double ib, Eigen::VectorXd& g, double& gb) {
            LossGrad lg = logistic_loss_grad(bb, ib, data);
            g = lg.grad + rho * (multiplicity.cwiseProduct(bb) - svec);
            gb = lg.grad_intercept;
        };
        auto no_prox = [](Eigen::VectorXd&, double) {};
        bool inner_ok = false;
        accelerated_descent(beta, b, Lq, 500, inner_tol, cfg.fit_intercept, objective, gradient,
                            no_prox, inner_ok);
        if (!std::isfinite(beta.lpNorm<Eigen::Infinity>()) || !std::isfinite(b)) diverged(outer + 1);

        // z-step and dual update, accumulating residuals.
        double primal_sq = 0.0, ax_sq = 0.0, bz_sq = 0.0;
        agg_change.setZero();
        Eigen::VectorXd agg_u = Eigen::VectorXd::Zero(d);
        for (auto& g : gs) {
            Eigen::VectorXd v(g.idx.size());
            for (std::size_t i = 0; i < g.idx.size(); ++i) v(static_cast<Eigen::Index>(i)) = beta(g.idx[i]);
            Eigen::VectorXd zn = prox_linf(v + g.u, g.tau / rho);
            for (std::size_t i = 0; i < g.idx.size(); ++i)
                agg_change(g.idx[i]) += zn(static_cast<Eigen::Index>(i)) - g.z(static_cast<Eigen::Index>(i));
            g.z = std::move(zn);
            g.u += v - g.z;
            for (std::size_t i = 0; i < g.idx.size(); ++i) agg_u(g.idx[i]) += g.u(static_cast<Eigen::Index>(i));
            primal_sq += (v - g.z).squaredNorm();
            ax_sq += v.squaredNorm();
            bz_sq += g.z.squaredNorm();
        }
        r = std::sqrt(primal_sq);
        s = rho * agg_change.norm();
        double ax = std::sqrt(ax_sq), bz = std::sqrt(bz_sq);
        double aty = rho * agg_u.norm();
        double eps_pri = std::sqrt(static_cast<double>(stack_len)) * cfg.tol +
                         cfg.tol * std::max(ax, bz);
        double eps_dual = std::sqrt(static_cast<double>(d)) * cfg.tol + cfg.tol * aty;
        r_rel = r / std::max(1.0, std::max(ax, bz));
        s_rel = s / std::max(1.0, aty);
        converged = r <= eps_pri && s <= eps_dual;

        if (cfg.adapt_rho && !converged) {
            if (r_rel > 10.0 * s_rel) {
                rho *= 2.0;
                for (auto& g : gs) g.u /= 2.0;
            } else if (s_rel > 10.0 * r_rel) {
                rho /= 2.0;
                for (auto& g : gs) g.u *= 2.0;
            }
        }
    }

    // Sparsity lives in the z blocks (the prox produces exact zeros). A dead
    // group means its cost is not paid, so every coordinate it covers is
    // unavailable: one zero copy zeroes the coordinate.
    std::vector<bool> any_zero(static_cast<std::size_t>(d), false);
    for (const auto& g : gs) {
        for (std::size_t i = 0; i < g.idx.size(); ++i)
            if (g.z(static_cast<Eigen::Index>(i)) == 0.0)
                any_zero[static_cast<std::size_t>(g.idx[i])] = true;
    }
    for (Eigen::Index j = 0; j < d; ++j)
        if (any_zero[static_cast<std::size_t>(j)]) beta(j) = 0.0;

    ExtendedModel model;
    model.beta.assign(beta.data(), beta.data() + beta.size());
    model.intercept = b;
    if (diag) {
        diag->iterations = outer;
        diag->primal_residual = r_rel;
        diag->dual_residual = s_rel;
        diag->objective = logistic_loss(beta, b, data) + group_penalty(beta);
        diag->converged = converged;
    }
    return model;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    const double N = static_cast<double>(X.rows());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        double mean = X.col(j).mean();
        double var = (X.col(j).array() - mean).square().sum() / N;
        double sd = std::sqrt(var);
        s.mean.push_back(mean);
        s.stddev.push_back(sd < 1e-12 ? 1.0 : sd);
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    if (static_cast<std::size_t>(X.cols()) != mean.size())
        throw error("standardizer: fitted on " + std::to_string(mean.size()) +
                    " columns, applied to " + std::to_string(X.cols()));
    Eigen::MatrixXd out = X;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        auto k = static_cast<std::size_t>(j);
        out.col(j) = (out.col(j).array() - mean[k]) / stddev[k];
    }
    return out;
}

}  // namespace costwise
