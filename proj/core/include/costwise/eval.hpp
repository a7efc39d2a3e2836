#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "costwise/circuit.hpp"
#include "costwise/cohort.hpp"
#include "costwise/groups.hpp"
#include "costwise/solver.hpp"

namespace costwise {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct EvalReport {
    std::vector<RocPoint> roc;
    double auc = 0.0;
    std::pair<double, double> auc_ci{0.0, 0.0};           // min/max over bootstrap resamples
    std::map<double, double> sensitivity_at_spec;         // specificity target -> sensitivity
    std::map<std::string, double> costs;                  // post-hoc cost report
    std::string model_ref;
};

/// Per-window probabilities sigma(x'beta + b) for one patient's windows.
std::vector<double> patient_scores(const ExtendedModel& model, const Eigen::MatrixXd& windows);

/// A patient is identified when the risk trajectory rises strictly above
/// the threshold at any window.
bool identify(const std::vector<double>& trajectory, double threshold);

/// ROC staircase over patient-level scores: one point per distinct score
/// threshold, from (0,0) to (1,1), ties producing diagonal segments.
std::vector<RocPoint> roc_curve(const std::vector<double>& pos, const std::vector<double>& neg);

double trapezoid_auc(const std::vector<RocPoint>& roc);

/// Mann-Whitney rank statistic, ties counted one half. Equals the
/// trapezoidal area of roc_curve.
double rank_auc(const std::vector<double>& pos, const std::vector<double>& neg);

/// Best sensitivity among thresholds keeping specificity at or above the
/// target.
double sensitivity_at_specificity(const std::vector<double>& pos, const std::vector<double>& neg,
                                  double specificity);

/// Patient-level bootstrap: B resamples with replacement, min/max AUC
/// reported (B defaults to 10, far too few for percentile intervals).
/// Degenerate one-class resamples are redrawn, bounded retries.
std::pair<double, double> bootstrap_auc(const std::vector<double>& pos,
                                        const std::vector<double>& neg, int B = 10,
                                        std::uint64_t seed = 0);

struct SweepConfig {
    std::vector<std::pair<double, double>> lambda_grid;  // (lambda_financial, lambda_time)
    std::vector<double> wait_caps{0.0, 10.0, 50.0};
    std::vector<std::string> methods{"group"};           // group | l1 | l1scaled
    double train_frac = 0.75;
    int bootstrap_samples = 10;
    double specificity_target = 0.85;
    std::uint64_t seed = 0;
    FitConfig fit;
    ReduceOptions reduce;
    int workers = 1;
};

/// Log-spaced grid of (lambda_financial, lambda_time) pairs with the time
/// weight held fixed.
std::vector<std::pair<double, double>> default_lambda_grid(double lo = 1e-7, double hi = 1e-3,
                                                           int points = 9,
                                                           double lambda_time = 1e-7);

struct SweepPoint {
    std::string method;
    double wait_cap = 0.0;
    double lambda_financial = 0.0;
    double lambda_time = 0.0;
    std::string status = "ok";           // "ok" or the error text of a failed fit
    ExtendedModel model;                 // base-feature or extended space, per method
    FitDiagnostics diagnostics;
    FeatureSelection selection;
    EvalReport report;
    std::vector<std::string> dropped_features;  // infeasible under this wait cap
    std::vector<std::string> activities;        // used nodes deeper than the selection layer
};

/// One split, then per wait cap: filter, reduce, build groups; per grid
/// point and method: fit on the balanced z-scored training windows,
/// evaluate patient-level on the held-out split, attach the post-hoc cost
/// report. Individual fit failures land in the point's status; the sweep
/// continues. Deterministic given cfg.seed, independent of worker count.
std::vector<SweepPoint> sweep(const Cohort& cohort, const CostCircuit& circuit,
                              const SweepConfig& cfg);

/// Indices of the nondominated items under (every cost dimension minimized,
/// AUC maximized). Equal points are all kept.
struct ParetoItem {
    std::vector<double> costs;
    double auc = 0.0;
};
std::vector<std::size_t> pareto_frontier(const std::vector<ParetoItem>& items);

/// Frontier over sweep points: SUM-channel costs down, AUC up; failed
/// points never enter.
std::vector<std::size_t> pareto_frontier(const std::vector<SweepPoint>& points,
                                         const CostCircuit& circuit);

/// One row per sweep point. Costs get one column per SUM channel in
/// declaration order plus the observed wait; id lists are
/// semicolon-joined.
std::string sweep_to_csv(const std::vector<SweepPoint>& points, const CostCircuit& circuit);

/// Frontier of an existing sweep CSV: keeps the header and the
/// nondominated ok rows, in their original order.
std::string frontier_csv(const std::string& sweep_csv_text);

}  // namespace costwise
