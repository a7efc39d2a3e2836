#pragma once

#include <string>
#include <utility>
#include <vector>

#include "costwise/groups.hpp"
#include "costwise/solver.hpp"

namespace costwise {

/// A fitted model plus everything needed to reapply it: the coordinate
/// index ((feature, way) pairs; way 0 marks a base-feature coordinate of
/// the l1 baselines), the training z-scaler over base features, the fit
/// configuration, and convergence diagnostics.
struct ModelFile {
    std::string method;  // group | l1 | l1scaled
    double wait_cap = 0.0;
    std::vector<std::pair<std::string, int>> index;
    ExtendedModel model;
    std::vector<std::string> scaler_features;
    Standardizer scaler;
    FitConfig config;
    FitDiagnostics diagnostics;
};

/// Deterministic JSON (sorted keys, lossless doubles).
std::string model_to_json(const ModelFile& mf);
ModelFile parse_model_json(const std::string& text);

void save_model(const std::string& path, const ModelFile& mf);
ModelFile load_model(const std::string& path);

}  // namespace costwise
