// Independent oracles the tests check library results against. Everything
// here is deliberately written with different algorithms than the library
// (scalar search instead of Moreau, truth tables instead of algebra, plain
// gradient descent instead of FISTA) so agreement is evidence, not tautology.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "costwise/circuit.hpp"
#include "costwise/dnf.hpp"
#include "costwise/rng.hpp"
#include "costwise/solver.hpp"

namespace oracles {

// Random layered circuit: features on top, INPUT selection nodes at the
// bottom, AND/OR/NOT mixed in between. Always passes validate().
inline costwise::CostCircuit random_circuit(costwise::Rng& rng, int max_selection_inputs = 12,
                                            int max_layers = 4) {
    int layers = static_cast<int>(rng.integer(2, max_layers));
    int k = static_cast<int>(rng.integer(2, max_selection_inputs));

    std::vector<std::vector<std::string>> ids(static_cast<std::size_t>(layers));
    std::vector<costwise::Node> nodes;

    auto& sel = ids[static_cast<std::size_t>(layers - 1)];
    for (int i = 0; i < k; ++i) {
        costwise::Node n;
        n.id = "s" + std::to_string(i);
        n.layer = layers;
        n.gate = costwise::GateKind::Input;
        n.costs["financial"] = static_cast<double>(rng.integer(0, 30));
        sel.push_back(n.id);
        nodes.push_back(std::move(n));
    }

    for (int layer = layers - 1; layer >= 1; --layer) {
        auto& below = ids[static_cast<std::size_t>(layer)];
        auto& here = ids[static_cast<std::size_t>(layer - 1)];
        int count = layer == 1 ? static_cast<int>(rng.integer(1, 5))
                               : static_cast<int>(rng.integer(1, 6));
        for (int i = 0; i < count; ++i) {
            costwise::Node n;
            n.id = (layer == 1 ? "f" : "g" + std::to_string(layer) + "_") + std::to_string(i);
            n.layer = layer;
            double kind = rng.uniform();
            if (kind < 0.2) {
                n.gate = costwise::GateKind::Not;
                n.children.push_back(below[rng.index(below.size())]);
            } else {
                n.gate = kind < 0.6 ? costwise::GateKind::And : costwise::GateKind::Or;
                std::vector<std::string> pool = below;
                rng.shuffle(pool);
                std::size_t fan = 1 + rng.index(std::min<std::size_t>(3, pool.size()));
                n.children.assign(pool.begin(), pool.begin() + static_cast<long>(fan));
                std::sort(n.children.begin(), n.children.end());
            }
            here.push_back(n.id);
            nodes.push_back(std::move(n));
        }
    }

    std::vector<std::string> layer_names;
    for (int l = 1; l <= layers; ++l) layer_names.push_back("layer" + std::to_string(l));
    std::vector<costwise::CostChannel> channels{
        {"financial", layers, costwise::Aggregation::Sum, "dollars"}};
    return costwise::CostCircuit(layer_names, layers, channels, std::move(nodes));
}

// Exhaustive truth-table comparison of signed DNFs against gate evaluation
// at the selection layer, all features per assignment pass. Returns the
// number of disagreeing (assignment, feature) pairs.
inline int dnf_mismatches(
    const costwise::CostCircuit& circuit,
    const std::vector<std::pair<std::string, std::vector<costwise::Minterm>>>& dnfs) {
    auto sel = circuit.layer_node_ids(circuit.selection_layer());
    int mismatches = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << sel.size()); ++mask) {
        std::map<std::string, bool> assignment;
        for (std::size_t i = 0; i < sel.size(); ++i)
            assignment[sel[i]] = (mask >> i) & 1;
        auto values = costwise::evaluate_at_layer(circuit, circuit.selection_layer(), assignment);
        for (const auto& [feature, dnf] : dnfs)
            if (values.at(feature) != costwise::dnf_value(dnf, assignment)) ++mismatches;
    }
    return mismatches;
}

// argmin_x 0.5||x-v||^2 + tau ||x||_inf by scalar ternary search over the
// clamp level t: x(t) = clamp(v, -t, t), g(t) = 0.5 sum(|v_i|-t)_+^2 + tau t.
inline Eigen::VectorXd prox_linf_oracle(const Eigen::VectorXd& v, double tau) {
    double hi = v.cwiseAbs().maxCoeff();
    auto g = [&](double t) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            double e = std::abs(v(i)) - t;
            if (e > 0) s += 0.5 * e * e;
        }
        return s + tau * t;
    };
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        double m1 = lo + (hi - lo) / 3.0;
        double m2 = hi - (hi - lo) / 3.0;
        if (g(m1) < g(m2))
            hi = m2;
        else
            lo = m1;
    }
    double t = 0.5 * (lo + hi);
    Eigen::VectorXd x(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        x(i) = std::clamp(v(i), -t, t);
    return x;
}

// KKT check for projection onto the l1 ball: either the identity (inside the
// ball) or soft-thresholding by a single water level theta with a tight
// budget. Returns the worst constraint violation.
inline double project_l1_kkt_violation(const Eigen::VectorXd& v, double r,
                                       const Eigen::VectorXd& x) {
    double worst = 0.0;
    double xs = x.cwiseAbs().sum();
    if (v.cwiseAbs().sum() <= r) return (x - v).cwiseAbs().maxCoeff();
    worst = std::max(worst, std::abs(xs - r));  // active budget
    double theta = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (x(i) != 0.0) {
            if (x(i) * v(i) < 0) return 1.0;  // sign flip is always wrong
            theta = std::max(theta, std::abs(v(i)) - std::abs(x(i)));
        }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (x(i) != 0.0)
            worst = std::max(worst, std::abs(std::abs(v(i)) - std::abs(x(i)) - theta));
        else
            worst = std::max(worst, std::max(0.0, std::abs(v(i)) - theta));
    }
    return worst;
}

// Central finite differences of a scalar function at beta.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& beta, double h = 1e-5) {
    Eigen::VectorXd g(beta.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
        Eigen::VectorXd up = beta, dn = beta;
        up(i) += h;
        dn(i) -= h;
        g(i) = (f(up) - f(dn)) / (2.0 * h);
    }
    return g;
}

// Zooming dense grid search for 2-coordinate objectives: repeated 41x41
// grids, each round centered on the previous winner with a third the span.
inline std::pair<Eigen::Vector2d, double> grid_search_2d(
    const std::function<double(const Eigen::Vector2d&)>& obj, double lo, double hi,
    int rounds = 8) {
    double cx = 0.5 * (lo + hi), cy = cx, span = 0.5 * (hi - lo);
    Eigen::Vector2d best(cx, cy);
    double best_val = obj(best);
    for (int round = 0; round < rounds; ++round) {
        for (int i = 0; i <= 40; ++i)
            for (int j = 0; j <= 40; ++j) {
                Eigen::Vector2d p(cx - span + 2.0 * span * i / 40.0,
                                  cy - span + 2.0 * span * j / 40.0);
                double val = obj(p);
                if (val < best_val) {
                    best_val = val;
                    best = p;
                }
            }
        cx = best(0);
        cy = best(1);
        span /= 3.0;
    }
    return {best, best_val};
}

// Long-run plain gradient descent on the unregularized logistic loss.
// Slow and simple on purpose; the reference the fast solvers must match.
inline costwise::ExtendedModel reference_logistic(const costwise::Dataset& data, int iters = 30000,
                                                  bool fit_intercept = true) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(data.cols());
    double intercept = 0.0;
    double lips = data.X.squaredNorm() / (4.0 * static_cast<double>(data.rows())) + 0.25;
    double step = 1.0 / lips;
    for (int it = 0; it < iters; ++it) {
        auto lg = costwise::logistic_loss_grad(beta, intercept, data);
        beta -= step * lg.grad;
        if (fit_intercept) intercept -= step * lg.grad_intercept;
        if (lg.grad.norm() + std::abs(fit_intercept ? lg.grad_intercept : 0.0) < 1e-10) break;
    }
    costwise::ExtendedModel m;
    m.beta.assign(beta.data(), beta.data() + beta.size());
    m.intercept = intercept;
    return m;
}

// Small random classification dataset with a planted direction.
inline costwise::Dataset random_dataset(costwise::Rng& rng, int n, int d) {
    costwise::Dataset data;
    data.X.resize(n, d);
    data.y.resize(n);
    Eigen::VectorXd truth(d);
    for (int j = 0; j < d; ++j) truth(j) = rng.normal();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) data.X(i, j) = rng.normal();
        double margin = data.X.row(i).dot(truth) + 0.5 * rng.normal();
        data.y(i) = margin > 0 ? 1.0 : -1.0;
    }
    for (int j = 0; j < d; ++j) data.columns.push_back("x" + std::to_string(j));
    return data;
}

}  // namespace oracles
