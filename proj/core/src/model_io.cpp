#include "costwise/model_io.hpp"

#include <fstream>

#include <json.hpp>

namespace costwise {

namespace {

using nlohmann::json;

json require(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key))
        throw error(std::string("model schema: missing '") + key + "' in " + where);
    return obj.at(key);
}

}  // namespace

std::string model_to_json(const ModelFile& mf) {
    json doc;
    doc["version"] = 1;
    doc["method"] = mf.method;
    doc["wait_cap"] = mf.wait_cap;
    json jindex = json::array();
    for (const auto& [feature, way] : mf.index)
        jindex.push_back({{"feature", feature}, {"way", way}});
    doc["index"] = jindex;
    doc["beta"] = mf.model.beta;
    doc["intercept"] = mf.model.intercept;
    doc["support_eps"] = mf.model.support_eps;
    doc["scaler"] = {{"features", mf.scaler_features},
                     {"mean", mf.scaler.mean},
                     {"stddev", mf.scaler.stddev}};
    doc["config"] = {{"lambda_financial", mf.config.lambda_financial},
                     {"lambda_time", mf.config.lambda_time},
                     {"max_iters", mf.config.max_iters},
                     {"tol", mf.config.tol},
                     {"admm_rho", mf.config.admm_rho},
                     {"adapt_rho", mf.config.adapt_rho},
                     {"fit_intercept", mf.config.fit_intercept},
                     {"seed", mf.config.seed}};
    doc["diagnostics"] = {{"iterations", mf.diagnostics.iterations},
                          {"primal_residual", mf.diagnostics.primal_residual},
                          {"dual_residual", mf.diagnostics.dual_residual},
                          {"objective", mf.diagnostics.objective},
                          {"converged", mf.diagnostics.converged}};
    return doc.dump(2) + "\n";
}

ModelFile parse_model_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw error(std::string("model file is not valid JSON: ") + e.what());
    }
    if (require(doc, "version", "model").get<int>() != 1)
        throw error("unsupported model schema version");

    ModelFile mf;
    mf.method = require(doc, "method", "model").get<std::string>();
    mf.wait_cap = require(doc, "wait_cap", "model").get<double>();
    for (const auto& e : require(doc, "index", "model"))
        mf.index.emplace_back(require(e, "feature", "index entry").get<std::string>(),
                              require(e, "way", "index entry").get<int>());
    mf.model.beta = require(doc, "beta", "model").get<std::vector<double>>();
    mf.model.intercept = require(doc, "intercept", "model").get<double>();
    mf.model.support_eps = require(doc, "support_eps", "model").get<double>();
    if (mf.model.beta.size() != mf.index.size())
        throw error("model schema: beta and index lengths differ");

    json scaler = require(doc, "scaler", "model");
    mf.scaler_features = require(scaler, "features", "scaler").get<std::vector<std::string>>();
    mf.scaler.mean = require(scaler, "mean", "scaler").get<std::vector<double>>();
    mf.scaler.stddev = require(scaler, "stddev", "scaler").get<std::vector<double>>();
    if (mf.scaler.mean.size() != mf.scaler_features.size() ||
        mf.scaler.stddev.size() != mf.scaler_features.size())
        throw error("model schema: scaler arrays and feature list lengths differ");

    json cfg = require(doc, "config", "model");
    mf.config.lambda_financial = require(cfg, "lambda_financial", "config").get<double>();
    mf.config.lambda_time = require(cfg, "lambda_time", "config").get<double>();
    mf.config.max_iters = require(cfg, "max_iters", "config").get<int>();
    mf.config.tol = require(cfg, "tol", "config").get<double>();
    mf.config.admm_rho = require(cfg, "admm_rho", "config").get<double>();
    mf.config.adapt_rho = require(cfg, "adapt_rho", "config").get<bool>();
    mf.config.fit_intercept = require(cfg, "fit_intercept", "config").get<bool>();
    mf.config.seed = require(cfg, "seed", "config").get<std::uint64_t>();

    json diag = require(doc, "diagnostics", "model");
    mf.diagnostics.iterations = require(diag, "iterations", "diagnostics").get<int>();
    mf.diagnostics.primal_residual = require(diag, "primal_residual", "diagnostics").get<double>();
    mf.diagnostics.dual_residual = require(diag, "dual_residual", "diagnostics").get<double>();
    mf.diagnostics.objective = require(diag, "objective", "diagnostics").get<double>();
    mf.diagnostics.converged = require(diag, "converged", "diagnostics").get<bool>();
    return mf;
}

void save_model(const std::string& path, const ModelFile& mf) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write model file: " + path);
    out << model_to_json(mf);
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open model file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_model_json(text);
}

}  // namespace costwise
