// costwise: cost-structured feature selection over layered boolean circuits.
//
// Subcommands: validate, reduce, gen-data, fit, sweep, groups, frontier,
// cost-report.
// Exit codes: 0 success, 1 validation/schema error, 2 runtime error.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "costwise/circuit.hpp"
#include "costwise/circuit_io.hpp"
#include "costwise/cohort.hpp"
#include "costwise/dnf.hpp"
#include "costwise/eval.hpp"
#include "costwise/groups.hpp"
#include "costwise/model_io.hpp"
#include "costwise/solver.hpp"

namespace {

using costwise::CostCircuit;

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::uint64_t env_seed() {
    const char* s = std::getenv("COSTWISE_SEED");
    if (!s || !*s) return 1;
    return std::strtoull(s, nullptr, 10);
}

CostCircuit load_valid_circuit(const std::string& path) {
    CostCircuit c = costwise::load_circuit(path);
    auto report = costwise::validate(c);
    if (!report.ok()) throw costwise::error("invalid circuit " + path + "\n" + report.summary());
    return c;
}

// SUM channels anchored at the selection layer carry the financial-style
// weight; deeper SUM channels carry the time-style weight. The MAX channel
// never enters the penalty.
std::vector<std::pair<std::string, double>> routed_lambdas(const CostCircuit& c,
                                                           double lambda_fin,
                                                           double lambda_time) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& ch : c.channels()) {
        if (ch.aggregation != costwise::Aggregation::Sum) continue;
        out.emplace_back(ch.name, ch.anchor_layer == c.selection_layer() ? lambda_fin
                                                                         : lambda_time);
    }
    return out;
}

std::string pricing_channel(const CostCircuit& c) {
    std::string first_sum;
    for (const auto& ch : c.channels()) {
        if (ch.aggregation != costwise::Aggregation::Sum) continue;
        if (first_sum.empty()) first_sum = ch.name;
        if (ch.anchor_layer == c.selection_layer()) return ch.name;
    }
    if (first_sum.empty()) throw costwise::error("circuit declares no SUM channel");
    return first_sum;
}

int cmd_validate(const std::string& graph_path) {
    CostCircuit c = costwise::load_circuit(graph_path);
    auto report = costwise::validate(c);
    if (!report.ok()) {
        std::cerr << report.summary();
        return 1;
    }
    std::cout << "ok: " << c.nodes().size() << " nodes, " << c.layer_count() << " layers, "
              << c.channels().size() << " channels\n";
    return 0;
}

int cmd_reduce(const std::string& graph_path, const std::string& out_path, double wait_cap,
               int max_minterms) {
    CostCircuit c = load_valid_circuit(graph_path);
    if (wait_cap >= 0) c = costwise::filter_by_wait(c, wait_cap);
    costwise::ReduceOptions opts;
    opts.max_minterms = max_minterms;
    auto form = costwise::reduce(c, opts);
    write_text(out_path, costwise::form_to_json(form));
    std::cout << "wrote " << out_path << ": " << form.features.size() << " features, "
              << form.extended_size << " ways";
    if (!form.dropped_features.empty())
        std::cout << ", " << form.dropped_features.size() << " dropped";
    std::cout << "\n";
    return 0;
}

int cmd_gen_data(const std::string& graph_path, const std::string& out_path,
                 const costwise::GenOptions& opts) {
    CostCircuit c = load_valid_circuit(graph_path);
    auto cohort = costwise::generate(c, opts);
    costwise::save_cohort_csv(out_path, cohort);
    std::cout << "wrote " << out_path << ": " << cohort.patients.size() << " patients, "
              << cohort.features.size() << " features\n";
    return 0;
}

int cmd_fit(const std::string& graph_path, const std::string& data_path,
            const std::string& out_path, const std::string& method, double wait_cap,
            int horizon, const costwise::FitConfig& fit_cfg) {
    CostCircuit full = load_valid_circuit(graph_path);
    auto cohort = costwise::load_cohort_csv(data_path, horizon);
    CostCircuit c = costwise::filter_by_wait(full, wait_cap);
    auto form = costwise::reduce(c);

    auto train = costwise::make_training_set(cohort, fit_cfg.seed);
    auto scaler = costwise::Standardizer::fit(train.X);
    train.X = scaler.apply(train.X);

    costwise::ModelFile mf;
    mf.method = method;
    mf.wait_cap = wait_cap;
    mf.scaler_features = train.columns;
    mf.scaler = scaler;
    mf.config = fit_cfg;

    if (method == "group") {
        auto ext = costwise::extend_design(train, form);
        std::vector<costwise::GroupSpec> specs;
        for (const auto& [name, lambda] :
             routed_lambdas(c, fit_cfg.lambda_financial, fit_cfg.lambda_time))
            specs.push_back(costwise::build_groups(form, c, name, lambda));
        mf.model = costwise::fit_group(ext, specs, fit_cfg, &mf.diagnostics);
        mf.index = costwise::ExtendedIndex::from(form).entries;
    } else if (method == "l1" || method == "l1scaled") {
        costwise::Dataset base;
        base.columns = form.features;
        base.X.resize(train.X.rows(), static_cast<Eigen::Index>(form.features.size()));
        for (std::size_t j = 0; j < form.features.size(); ++j) {
            auto it = std::find(train.columns.begin(), train.columns.end(), form.features[j]);
            if (it == train.columns.end())
                throw costwise::error("feature missing from data: " + form.features[j]);
            base.X.col(static_cast<Eigen::Index>(j)) =
                train.X.col(it - train.columns.begin());
        }
        base.y = train.y;
        if (method == "l1") {
            mf.model = costwise::fit_l1(base, fit_cfg.lambda_financial, fit_cfg, &mf.diagnostics);
        } else {
            auto weights = costwise::scaled_l1_weights(form, c, pricing_channel(c));
            mf.model = costwise::fit_scaled_l1(base, fit_cfg.lambda_financial, weights, fit_cfg,
                                               &mf.diagnostics);
        }
        for (const auto& f : form.features) mf.index.emplace_back(f, 0);
    } else {
        throw costwise::error("unknown method: " + method);
    }

    costwise::save_model(out_path, mf);
    std::cout << "wrote " << out_path << ": " << mf.model.support().size() << "/"
              << mf.model.beta.size() << " active coordinates, "
              << (mf.diagnostics.converged ? "converged" : "not converged") << " after "
              << mf.diagnostics.iterations << " iterations\n";
    return 0;
}

int cmd_sweep(const std::string& graph_path, const std::string& data_path,
              const std::string& out_path, const costwise::SweepConfig& cfg, int horizon) {
    CostCircuit c = load_valid_circuit(graph_path);
    auto cohort = costwise::load_cohort_csv(data_path, horizon);
    auto points = costwise::sweep(cohort, c, cfg);
    write_text(out_path, costwise::sweep_to_csv(points, c));
    int ok = 0;
    for (const auto& p : points)
        if (p.status == "ok") ++ok;
    std::cout << "wrote " << out_path << ": " << points.size() << " points, " << ok << " ok\n";
    return 0;
}

int cmd_groups(const std::string& graph_path, const std::string& out_path, double wait_cap,
               double lambda_fin, double lambda_time) {
    CostCircuit c = load_valid_circuit(graph_path);
    if (wait_cap >= 0) c = costwise::filter_by_wait(c, wait_cap);
    auto form = costwise::reduce(c);
    std::vector<costwise::GroupSpec> specs;
    for (const auto& [name, lambda] : routed_lambdas(c, lambda_fin, lambda_time))
        specs.push_back(costwise::build_groups(form, c, name, lambda));
    write_text(out_path, costwise::groups_to_json(specs));
    std::size_t n = 0;
    for (const auto& s : specs) n += s.groups.size();
    std::cout << "wrote " << out_path << ": " << specs.size() << " channels, " << n
              << " groups over " << form.extended_size << " coordinates\n";
    return 0;
}

int cmd_frontier(const std::string& sweep_path, const std::string& out_path) {
    std::string text = read_text(sweep_path);
    std::string front = costwise::frontier_csv(text);
    write_text(out_path, front);
    auto count_rows = [](const std::string& s) {
        long n = std::count(s.begin(), s.end(), '\n');
        return n > 0 ? n - 1 : 0;
    };
    std::cout << "wrote " << out_path << ": " << count_rows(front) << " of " << count_rows(text)
              << " rows on the frontier\n";
    return 0;
}

int cmd_cost_report(const std::string& model_path, const std::string& graph_path) {
    auto mf = costwise::load_model(model_path);
    CostCircuit full = load_valid_circuit(graph_path);
    CostCircuit c = costwise::filter_by_wait(full, mf.wait_cap);
    auto form = costwise::reduce(c);

    costwise::FeatureSelection sel;
    if (mf.method == "group") {
        auto index = costwise::ExtendedIndex::from(form);
        costwise::ExtendedModel aligned;
        aligned.beta.assign(index.size(), 0.0);
        aligned.intercept = mf.model.intercept;
        aligned.support_eps = mf.model.support_eps;
        for (std::size_t j = 0; j < mf.index.size(); ++j)
            aligned.beta[index.at(mf.index[j].first, mf.index[j].second)] = mf.model.beta[j];
        sel = costwise::collapse(aligned, form);
    } else {
        std::vector<std::string> active;
        for (std::size_t j : mf.model.support()) active.push_back(mf.index[j].first);
        sel = costwise::cheapest_selection(active, form, c);
    }

    auto costs = costwise::cost_report(sel, c);
    nlohmann::ordered_json doc;
    doc["model"] = model_path;
    doc["method"] = mf.method;
    doc["wait_cap"] = mf.wait_cap;
    nlohmann::ordered_json jcosts;
    for (const auto& [name, value] : costs) jcosts[name] = value;
    doc["costs"] = jcosts;
    doc["features"] = sel.features;
    doc["tests"] = sel.tests;
    nlohmann::ordered_json jways = nlohmann::ordered_json::array();
    for (const auto& [f, w] : sel.ways) jways.push_back({f, w});
    doc["ways"] = jways;
    std::cout << doc.dump(2) << "\n";
    return 0;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<std::string> parse_name_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cost-structured feature selection over layered boolean circuits"};
    app.require_subcommand(1);

    std::string graph_path, data_path, out_path, model_path, sweep_path;
    std::uint64_t seed = env_seed();

    auto* validate = app.add_subcommand("validate", "check a circuit file");
    validate->add_option("graph", graph_path, "circuit JSON")->required();

    auto* reduce = app.add_subcommand("reduce", "reduce a circuit to its three-layer form");
    reduce->add_option("graph", graph_path, "circuit JSON")->required();
    reduce->add_option("-o,--output", out_path, "form JSON output")->required();
    double reduce_wait = -1.0;
    int max_minterms = 10000;
    reduce->add_option("--wait-cap", reduce_wait, "drop slower tests first (minutes)");
    reduce->add_option("--max-minterms", max_minterms, "reduction blow-up cap");

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic cohort");
    costwise::GenOptions gen_opts;
    gen->add_option("graph", graph_path, "circuit JSON")->required();
    gen->add_option("--pos", gen_opts.n_pos, "number of positive patients");
    gen->add_option("--neg", gen_opts.n_neg, "number of negative patients");
    gen->add_option("--seed", seed, "RNG seed (env COSTWISE_SEED as fallback)");
    gen->add_option("--horizon", gen_opts.horizon_windows, "label horizon in windows");
    gen->add_option("--min-windows", gen_opts.min_windows, "shortest stay");
    gen->add_option("--max-windows", gen_opts.max_windows, "longest stay");
    gen->add_flag("--routine-only", gen_opts.routine_only_signal,
                  "plant signal only on zero-cost features");
    gen->add_option("-o,--output", out_path, "cohort CSV output")->required();

    auto* fit = app.add_subcommand("fit", "fit one model");
    costwise::FitConfig fit_cfg;
    std::string method = "group";
    double wait_cap = 50.0;
    int horizon = 6;
    fit->add_option("--graph", graph_path, "circuit JSON")->required();
    fit->add_option("--data", data_path, "cohort CSV")->required();
    fit->add_option("--lambda-fin", fit_cfg.lambda_financial, "selection-layer channel weight")
        ->required();
    fit->add_option("--lambda-time", fit_cfg.lambda_time, "deeper-channel weight");
    fit->add_option("--wait-cap", wait_cap, "max tolerated wait (minutes)");
    fit->add_option("--method", method, "group | l1 | l1scaled");
    fit->add_option("--seed", seed, "RNG seed (env COSTWISE_SEED as fallback)");
    fit->add_option("--horizon", horizon, "label horizon in windows");
    fit->add_option("--max-iters", fit_cfg.max_iters, "outer iteration cap");
    fit->add_option("--tol", fit_cfg.tol, "convergence tolerance");
    fit->add_option("-o,--output", out_path, "model JSON output")->required();

    auto* sweep = app.add_subcommand("sweep", "sweep the regularization grid");
    costwise::SweepConfig sweep_cfg;
    double grid_min = 1e-7, grid_max = 1e-3, lambda_time = 1e-7;
    int grid_points = 9;
    std::string wait_caps = "0,10,50", methods = "group,l1,l1scaled";
    sweep->add_option("--graph", graph_path, "circuit JSON")->required();
    sweep->add_option("--data", data_path, "cohort CSV")->required();
    sweep->add_option("--grid-min", grid_min, "smallest lambda");
    sweep->add_option("--grid-max", grid_max, "largest lambda");
    sweep->add_option("--grid-points", grid_points, "grid size (log-spaced)");
    sweep->add_option("--lambda-time", lambda_time, "deeper-channel weight (fixed)");
    sweep->add_option("--wait-caps", wait_caps, "comma list of wait scenarios");
    sweep->add_option("--methods", methods, "comma list: group,l1,l1scaled");
    sweep->add_option("--train-frac", sweep_cfg.train_frac, "patient-level split fraction");
    sweep->add_option("--bootstrap", sweep_cfg.bootstrap_samples, "bootstrap resamples");
    sweep->add_option("--workers", sweep_cfg.workers, "parallel fits");
    sweep->add_option("--seed", seed, "RNG seed (env COSTWISE_SEED as fallback)");
    sweep->add_option("--horizon", horizon, "label horizon in windows");
    sweep->add_option("-o,--output", out_path, "sweep CSV output")->required();

    auto* groups = app.add_subcommand("groups", "dump a circuit's penalty groups");
    double groups_wait = -1.0, groups_lfin = 1.0, groups_ltime = 1.0;
    groups->add_option("graph", graph_path, "circuit JSON")->required();
    groups->add_option("-o,--output", out_path, "groups JSON output")->required();
    groups->add_option("--wait-cap", groups_wait, "drop slower tests first (minutes)");
    groups->add_option("--lambda-fin", groups_lfin, "selection-layer channel weight");
    groups->add_option("--lambda-time", groups_ltime, "deeper-channel weight");

    auto* frontier = app.add_subcommand("frontier", "nondominated rows of a sweep CSV");
    frontier->add_option("sweep", sweep_path, "sweep CSV")->required();
    frontier->add_option("-o,--output", out_path, "frontier CSV output")->required();

    auto* report = app.add_subcommand("cost-report", "deployment cost of a fitted model");
    report->add_option("model", model_path, "model JSON")->required();
    report->add_option("graph", graph_path, "circuit JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(validate)) return cmd_validate(graph_path);
        if (app.got_subcommand(reduce)) return cmd_reduce(graph_path, out_path, reduce_wait,
                                                          max_minterms);
        if (app.got_subcommand(gen)) {
            gen_opts.seed = seed;
            return cmd_gen_data(graph_path, out_path, gen_opts);
        }
        if (app.got_subcommand(fit)) {
            fit_cfg.seed = seed;
            return cmd_fit(graph_path, data_path, out_path, method, wait_cap, horizon, fit_cfg);
        }
        if (app.got_subcommand(sweep)) {
            sweep_cfg.lambda_grid =
                costwise::default_lambda_grid(grid_min, grid_max, grid_points, lambda_time);
            sweep_cfg.wait_caps = parse_double_list(wait_caps);
            sweep_cfg.methods = parse_name_list(methods);
            sweep_cfg.seed = seed;
            return cmd_sweep(graph_path, data_path, out_path, sweep_cfg, horizon);
        }
        if (app.got_subcommand(groups))
            return cmd_groups(graph_path, out_path, groups_wait, groups_lfin, groups_ltime);
        if (app.got_subcommand(frontier)) return cmd_frontier(sweep_path, out_path);
        if (app.got_subcommand(report)) return cmd_cost_report(model_path, graph_path);
    } catch (const costwise::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
