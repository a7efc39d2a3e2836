#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "costwise/circuit.hpp"
#include "costwise/dnf.hpp"

namespace costwise {

/// Position map of the extended parameter vector: one coordinate per
/// (feature, way) pair, features then ways, lexicographic.
struct ExtendedIndex {
    std::vector<std::pair<std::string, int>> entries;           // (feature_id, way_index)
    std::map<std::string, std::pair<std::size_t, std::size_t>> feature_range;  // [begin, end)

    static ExtendedIndex from(const ThreeLayerForm& form);

    std::size_t size() const { return entries.size(); }
    std::size_t at(const std::string& feature, int way_index) const;  // throws on miss
};

/// One penalty group: the ways that charge a cost-bearing node.
struct Group {
    std::string node_id;
    double cost = 0.0;                 // C_k, the node's annotation on the channel
    std::vector<std::size_t> indices;  // S_k as extended coordinates, sorted
};

/// One cost channel's groups with its weight.
struct GroupSpec {
    std::string channel;
    double lambda = 0.0;
    std::vector<Group> groups;
};

struct ExtendedModel {
    std::vector<double> beta;
    double intercept = 0.0;
    double support_eps = 1e-6;

    std::vector<std::size_t> support() const;
};

/// A fitted model collapsed back onto the circuit: which features are
/// computed, through which ways, and which nodes that pulls in.
struct FeatureSelection {
    std::vector<std::string> features;                 // sorted
    std::vector<std::pair<std::string, int>> ways;     // active (feature, way_index)
    std::vector<std::string> tests;                    // union of way selection nodes, sorted
    std::map<std::string, std::vector<std::string>> channel_nodes;  // SUM channel -> used nodes
};

/// Groups for one SUM channel: one group per cost-bearing anchor node that
/// appears in at least one way's usage mask.
GroupSpec build_groups(const ThreeLayerForm& form, const CostCircuit& circuit,
                       const std::string& channel, double lambda);

/// Deployment cost of the support: a node's cost is paid once if any way
/// using it is active. Evaluator only, never optimized directly.
double exact_penalty(const ExtendedModel& model, const std::vector<GroupSpec>& specs);

/// Convex relaxation: sum over groups of C_k times the group's max |beta_j|.
double relaxed_penalty(const ExtendedModel& model, const std::vector<GroupSpec>& specs);

FeatureSelection collapse(const ExtendedModel& model, const ThreeLayerForm& form);

/// Per-channel cost of actually deploying the selection. SUM channels add
/// annotations over the unique used nodes; the MAX (wait) channel reports
/// the largest wait among used anchor nodes, 0 if none.
std::map<std::string, double> cost_report(const FeatureSelection& selection,
                                          const CostCircuit& circuit);

/// Selection for a base-feature model (the ℓ1 baselines): each feature is
/// obtained through its cheapest way. Ways are ranked by per-channel usage
/// cost in the circuit's channel declaration order, then by way index.
FeatureSelection cheapest_selection(const std::vector<std::string>& features,
                                    const ThreeLayerForm& form, const CostCircuit& circuit);

/// Scaled-ℓ1 weights per form.features entry: max(1, cheapest way's summed
/// cost on the given channel).
std::vector<double> scaled_l1_weights(const ThreeLayerForm& form, const CostCircuit& circuit,
                                      const std::string& channel);

/// Deterministic JSON dump of group structures (regression fixture format).
std::string groups_to_json(const std::vector<GroupSpec>& specs);

}  // namespace costwise
