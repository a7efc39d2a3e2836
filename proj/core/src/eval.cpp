#include "costwise/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "costwise/circuit_io.hpp"
#include "costwise/dnf.hpp"
#include "costwise/rng.hpp"

namespace costwise {

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<double> patient_scores(const ExtendedModel& model, const Eigen::MatrixXd& windows) {
    if (static_cast<Eigen::Index>(model.beta.size()) != windows.cols())
        throw error("patient_scores: model has " + std::to_string(model.beta.size()) +
                    " coordinates, windows have " + std::to_string(windows.cols()) + " columns");
    Eigen::Map<const Eigen::VectorXd> beta(model.beta.data(),
                                           static_cast<Eigen::Index>(model.beta.size()));
    Eigen::VectorXd margins = windows * beta;
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(margins.size()));
    for (Eigen::Index i = 0; i < margins.size(); ++i)
        scores.push_back(sigmoid(margins(i) + model.intercept));
    return scores;
}

bool identify(const std::vector<double>& trajectory, double threshold) {
    if (trajectory.empty()) throw error("identify: empty trajectory");
    return *std::max_element(trajectory.begin(), trajectory.end()) > threshold;
}

std::vector<RocPoint> roc_curve(const std::vector<double>& pos, const std::vector<double>& neg) {
    if (pos.empty() || neg.empty()) throw error("roc: a class has no scores");
    std::vector<double> p = pos, n = neg;
    std::sort(p.begin(), p.end(), std::greater<double>());
    std::sort(n.begin(), n.end(), std::greater<double>());
    const double P = static_cast<double>(p.size()), N = static_cast<double>(n.size());
    std::vector<RocPoint> roc{{0.0, 0.0}};
    std::size_t i = 0, j = 0;
    while (i < p.size() || j < n.size()) {
        double t = -std::numeric_limits<double>::infinity();
        if (i < p.size()) t = std::max(t, p[i]);
        if (j < n.size()) t = std::max(t, n[j]);
        while (i < p.size() && p[i] == t) ++i;
        while (j < n.size() && n[j] == t) ++j;
        roc.push_back({static_cast<double>(j) / N, static_cast<double>(i) / P});
    }
    return roc;
}

double trapezoid_auc(const std::vector<RocPoint>& roc) {
    double area = 0.0;
    for (std::size_t k = 1; k < roc.size(); ++k)
        area += (roc[k].fpr - roc[k - 1].fpr) * 0.5 * (roc[k].tpr + roc[k - 1].tpr);
    return area;
}

double rank_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    if (pos.empty() || neg.empty()) throw error("auc: a class has no scores");
    double wins = 0.0;
    for (double a : pos) {
        for (double b : neg) {
            if (a > b)
                wins += 1.0;
            else if (a == b)
                wins += 0.5;
        }
    }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double sensitivity_at_specificity(const std::vector<double>& pos, const std::vector<double>& neg,
                                  double specificity) {
    if (specificity < 0.0 || specificity > 1.0)
        throw error("sensitivity_at_specificity: target outside [0, 1]");
    double best = 0.0;
    const double max_fpr = 1.0 - specificity;
    for (const auto& point : roc_curve(pos, neg))
        if (point.fpr <= max_fpr + 1e-12) best = std::max(best, point.tpr);
    return best;
}

std::pair<double, double> bootstrap_auc(const std::vector<double>& pos,
                                        const std::vector<double>& neg, int B,
                                        std::uint64_t seed) {
    if (B < 2) throw error("bootstrap_auc: need at least 2 resamples");
    if (pos.empty() || neg.empty()) throw error("bootstrap_auc: a class has no scores");
    std::vector<std::pair<double, bool>> all;
    for (double s : pos) all.emplace_back(s, true);
    for (double s : neg) all.emplace_back(s, false);

    Rng rng(seed);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int b = 0; b < B; ++b) {
        std::vector<double> rp, rn;
        int retries = 0;
        for (;;) {
            rp.clear();
            rn.clear();
            for (std::size_t k = 0; k < all.size(); ++k) {
                const auto& [s, is_pos] = all[rng.index(all.size())];
                (is_pos ? rp : rn).push_back(s);
            }
            if (!rp.empty() && !rn.empty()) break;
            if (++retries > 100) throw error("bootstrap_auc: resamples keep losing a class");
        }
        double a = rank_auc(rp, rn);
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    return {lo, hi};
}

std::vector<std::pair<double, double>> default_lambda_grid(double lo, double hi, int points,
                                                           double lambda_time) {
    if (points < 1 || lo <= 0 || hi < lo) throw error("lambda grid: bad range");
    std::vector<std::pair<double, double>> grid;
    for (int i = 0; i < points; ++i) {
        double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        grid.emplace_back(std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))), lambda_time);
    }
    return grid;
}

namespace {

struct WaitContext {
    CostCircuit filtered;
    ThreeLayerForm form;
    std::vector<std::string> dropped;       // original features infeasible under the cap
    Dataset ext_train;                      // standardized, extended columns
    Dataset sub_train;                      // standardized, columns = form.features
    std::vector<double> scale_weights;      // scaled-l1 s per form.features
    std::vector<std::string> sum_channels;  // declaration order
    std::string pricing_channel;            // channel feeding the scaled-l1 weights
};

struct TestPatient {
    bool positive = false;
    Eigen::MatrixXd windows;  // standardized, cohort.features order
};

}  // namespace

std::vector<SweepPoint> sweep(const Cohort& cohort, const CostCircuit& circuit,
                              const SweepConfig& cfg) {
    if (cfg.lambda_grid.empty()) throw error("sweep: empty lambda grid");
    if (cfg.wait_caps.empty()) throw error("sweep: no wait caps");
    if (cfg.methods.empty()) throw error("sweep: no methods");
    for (const auto& [lf, lt] : cfg.lambda_grid)
        if (lf < 0 || lt < 0) throw error("sweep: negative lambda in grid");
    for (const auto& m : cfg.methods)
        if (m != "group" && m != "l1" && m != "l1scaled") throw error("sweep: unknown method " + m);

    auto [train_cohort, test_cohort] = split(cohort, cfg.train_frac, cfg.seed);
    Dataset train = make_training_set(train_cohort, cfg.seed);
    Standardizer scaler = Standardizer::fit(train.X);
    Dataset train_std = train;
    train_std.X = scaler.apply(train.X);

    std::vector<TestPatient> test;
    for (const auto& p : test_cohort.patients) {
        TestPatient tp;
        tp.positive = p.event_time.has_value();
        tp.windows = scaler.apply(p.windows);
        test.push_back(std::move(tp));
    }
    if (test.empty()) throw error("sweep: empty test split");

    std::map<std::string, Eigen::Index> base_col;
    for (std::size_t j = 0; j < cohort.features.size(); ++j)
        base_col[cohort.features[j]] = static_cast<Eigen::Index>(j);

    std::vector<WaitContext> contexts;
    for (double cap : cfg.wait_caps) {
        WaitContext ctx;
        ctx.filtered = filter_by_wait(circuit, cap);
        ctx.form = reduce(ctx.filtered, cfg.reduce);
        std::set<std::string> surviving(ctx.form.features.begin(), ctx.form.features.end());
        for (const auto& f : circuit.feature_ids())
            if (!surviving.count(f)) ctx.dropped.push_back(f);
        ctx.ext_train = extend_design(train_std, ctx.form);
        ctx.sub_train.y = train_std.y;
        ctx.sub_train.columns = ctx.form.features;
        ctx.sub_train.X.resize(train_std.X.rows(),
                               static_cast<Eigen::Index>(ctx.form.features.size()));
        for (std::size_t j = 0; j < ctx.form.features.size(); ++j)
            ctx.sub_train.X.col(static_cast<Eigen::Index>(j)) =
                train_std.X.col(base_col.at(ctx.form.features[j]));
        for (const auto& c : ctx.filtered.channels())
            if (c.aggregation == Aggregation::Sum) ctx.sum_channels.push_back(c.name);
        // Scaled-l1 prices features by the selection-anchored channel (the
        // financial one in the bundled graphs), falling back to the first
        // additive channel.
        for (const auto& c : ctx.filtered.channels()) {
            if (c.aggregation != Aggregation::Sum) continue;
            if (ctx.pricing_channel.empty()) ctx.pricing_channel = c.name;
            if (c.anchor_layer == ctx.filtered.selection_layer()) {
                ctx.pricing_channel = c.name;
                break;
            }
        }
        ctx.scale_weights = ctx.pricing_channel.empty()
                                ? std::vector<double>(ctx.form.features.size(), 1.0)
                                : scaled_l1_weights(ctx.form, ctx.filtered, ctx.pricing_channel);
        contexts.push_back(std::move(ctx));
    }

    struct Task {
        std::size_t ctx;
        std::string method;
        double lf, lt;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < contexts.size(); ++c)
        for (const auto& m : cfg.methods)
            for (const auto& [lf, lt] : cfg.lambda_grid) tasks.push_back({c, m, lf, lt});

    std::vector<SweepPoint> points(tasks.size());

    auto run_point = [&](std::size_t t) {
        const Task& task = tasks[t];
        const WaitContext& ctx = contexts[task.ctx];
        SweepPoint& point = points[t];
        point.method = task.method;
        point.wait_cap = cfg.wait_caps[task.ctx];
        point.lambda_financial = task.lf;
        point.lambda_time = task.lt;
        point.dropped_features = ctx.dropped;
        try {
            FitConfig fc = cfg.fit;
            fc.lambda_financial = task.lf;
            fc.lambda_time = task.lt;
            fc.seed = cfg.seed;

            Eigen::VectorXd eff = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cohort.features.size()));
            if (task.method == "group") {
                std::vector<GroupSpec> specs;
                for (const auto& c : ctx.sum_channels) {
                    double lambda = ctx.filtered.find_channel(c)->anchor_layer ==
                                            ctx.filtered.selection_layer()
                                        ? task.lf
                                        : task.lt;
                    specs.push_back(build_groups(ctx.form, ctx.filtered, c, lambda));
                }
                point.model = fit_group(ctx.ext_train, specs, fc, &point.diagnostics);
                point.selection = collapse(point.model, ctx.form);
                for (std::size_t j = 0; j < ctx.form.ways.size(); ++j)
                    eff(base_col.at(ctx.form.ways[j].feature_id)) += point.model.beta[j];
            } else {
                point.model = task.method == "l1"
                                  ? fit_l1(ctx.sub_train, task.lf, fc, &point.diagnostics)
                                  : fit_scaled_l1(ctx.sub_train, task.lf, ctx.scale_weights, fc,
                                                  &point.diagnostics);
                std::vector<std::string> selected;
                for (std::size_t j = 0; j < point.model.beta.size(); ++j) {
                    if (std::abs(point.model.beta[j]) > point.model.support_eps)
                        selected.push_back(ctx.form.features[j]);
                    eff(base_col.at(ctx.form.features[j])) = point.model.beta[j];
                }
                point.selection = cheapest_selection(selected, ctx.form, ctx.filtered);
            }

            std::vector<double> pos_scores, neg_scores;
            for (const auto& tp : test) {
                Eigen::VectorXd margins = tp.windows * eff;
                double best = margins.maxCoeff() + point.model.intercept;
                (tp.positive ? pos_scores : neg_scores).push_back(sigmoid(best));
            }

            point.report.costs = cost_report(point.selection, ctx.filtered);
            point.report.roc = roc_curve(pos_scores, neg_scores);
            point.report.auc = rank_auc(pos_scores, neg_scores);
            point.report.auc_ci = bootstrap_auc(pos_scores, neg_scores, cfg.bootstrap_samples,
                                                cfg.seed + 7919 * (t + 1));
            point.report.sensitivity_at_spec[cfg.specificity_target] = sensitivity_at_specificity(
                pos_scores, neg_scores, cfg.specificity_target);
            point.report.model_ref = task.method + " W=" + format_double(point.wait_cap) +
                                     " lf=" + format_double(task.lf) +
                                     " lt=" + format_double(task.lt);

            std::set<std::string> deeper;
            for (const auto& node_id : point.selection.tests)
                for (const auto& dep : ctx.filtered.required_closure(node_id))
                    if (ctx.filtered.node(dep).layer > ctx.filtered.selection_layer())
                        deeper.insert(dep);
            point.activities.assign(deeper.begin(), deeper.end());
        } catch (const std::exception& e) {
            point.status = e.what();
        }
    };

    const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(tasks.size())));
    if (workers == 1) {
        for (std::size_t t = 0; t < tasks.size(); ++t) run_point(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t t = next.fetch_add(1);
                    if (t >= tasks.size()) return;
                    run_point(t);
                }
            });
        for (auto& th : pool) th.join();
    }
    return points;
}

std::vector<std::size_t> pareto_frontier(const std::vector<ParetoItem>& items) {
    auto dominates = [](const ParetoItem& a, const ParetoItem& b) {
        if (a.costs.size() != b.costs.size()) throw error("pareto: dimension mismatch");
        bool strict = a.auc > b.auc;
        if (a.auc < b.auc) return false;
        for (std::size_t k = 0; k < a.costs.size(); ++k) {
            if (a.costs[k] > b.costs[k]) return false;
            if (a.costs[k] < b.costs[k]) strict = true;
        }
        return strict;
    };
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < items.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < items.size() && !dominated; ++j)
            dominated = j != i && dominates(items[j], items[i]);
        if (!dominated) kept.push_back(i);
    }
    return kept;
}

std::vector<std::size_t> pareto_frontier(const std::vector<SweepPoint>& points,
                                         const CostCircuit& circuit) {
    std::vector<ParetoItem> items;
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].status != "ok") continue;
        ParetoItem item;
        for (const auto& c : circuit.channels())
            if (c.aggregation == Aggregation::Sum)
                item.costs.push_back(points[i].report.costs.at(c.name));
        item.auc = points[i].report.auc;
        items.push_back(std::move(item));
        origin.push_back(i);
    }
    std::vector<std::size_t> kept;
    for (std::size_t k : pareto_frontier(items)) kept.push_back(origin[k]);
    return kept;
}

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (id.find_first_of(",;\n") != std::string::npos)
            throw error("sweep csv: id not representable: " + id);
        if (!out.empty()) out.push_back(';');
        out += id;
    }
    return out;
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string sweep_to_csv(const std::vector<SweepPoint>& points, const CostCircuit& circuit) {
    std::vector<std::string> sum_channels;
    const CostChannel* wait = circuit.wait_channel();
    for (const auto& c : circuit.channels())
        if (c.aggregation == Aggregation::Sum) sum_channels.push_back(c.name);

    std::ostringstream os;
    os << "method,wait_cap,lambda_financial,lambda_time,status,auc,auc_ci_low,auc_ci_high,"
          "specificity_target,sensitivity";
    for (const auto& c : sum_channels) os << ",cost_" << c;
    if (wait) os << ",wait_observed";
    os << ",n_features,n_ways,n_dropped,features,tests,activities\n";

    for (const auto& p : points) {
        std::string status = p.status;
        for (char& c : status)
            if (c == ',' || c == '\n') c = ';';
        os << p.method << ',' << format_double(p.wait_cap) << ','
           << format_double(p.lambda_financial) << ',' << format_double(p.lambda_time) << ','
           << status;
        if (p.status != "ok") {
            int blanks = 11 + static_cast<int>(sum_channels.size()) + (wait ? 1 : 0);
            for (int k = 0; k < blanks; ++k) os << ',';
            os << '\n';
            continue;
        }
        os << ',' << format_double(p.report.auc) << ',' << format_double(p.report.auc_ci.first)
           << ',' << format_double(p.report.auc_ci.second);
        const auto& sens = *p.report.sensitivity_at_spec.begin();
        os << ',' << format_double(sens.first) << ',' << format_double(sens.second);
        for (const auto& c : sum_channels) os << ',' << format_double(p.report.costs.at(c));
        if (wait) os << ',' << format_double(p.report.costs.at(wait->name));
        os << ',' << p.selection.features.size() << ',' << p.selection.ways.size() << ','
           << p.dropped_features.size() << ',' << join_ids(p.selection.features) << ','
           << join_ids(p.selection.tests) << ',' << join_ids(p.activities) << '\n';
    }
    return os.str();
}

std::string frontier_csv(const std::string& sweep_csv_text) {
    std::istringstream is(sweep_csv_text);
    std::string header;
    if (!std::getline(is, header)) throw error("frontier: empty csv");
    auto names = split_cells(header);
    long status_col = -1, auc_col = -1;
    std::vector<std::size_t> cost_cols;
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == "status") status_col = static_cast<long>(k);
        if (names[k] == "auc") auc_col = static_cast<long>(k);
        if (names[k].rfind("cost_", 0) == 0) cost_cols.push_back(k);
    }
    if (status_col < 0 || auc_col < 0 || cost_cols.empty())
        throw error("frontier: input is not a sweep csv (missing status/auc/cost_ columns)");

    std::vector<std::string> lines;
    std::vector<ParetoItem> items;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = split_cells(line);
        if (cells.size() != names.size())
            throw error("frontier: row with " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(names.size()));
        if (cells[static_cast<std::size_t>(status_col)] != "ok") continue;
        ParetoItem item;
        item.auc = std::strtod(cells[static_cast<std::size_t>(auc_col)].c_str(), nullptr);
        for (std::size_t k : cost_cols) item.costs.push_back(std::strtod(cells[k].c_str(), nullptr));
        items.push_back(std::move(item));
        lines.push_back(line);
    }
    std::ostringstream os;
    os << header << '\n';
    for (std::size_t k : pareto_frontier(items)) os << lines[k] << '\n';
    return os.str();
}

}  // namespace costwise
