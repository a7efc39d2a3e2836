#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "costwise/circuit.hpp"

namespace costwise {

/// A literal over a selection-layer node. Negative literals can appear in
/// intermediate normal forms but are rejected once ways are extracted,
/// because paying a cost for *not* running a test has no meaning.
struct Lit {
    std::string id;
    bool positive = true;

    friend bool operator==(const Lit&, const Lit&) = default;
    friend auto operator<=>(const Lit&, const Lit&) = default;
};

using Minterm = std::vector<Lit>;  // sorted, unique ids, conjunction

/// One way to obtain a feature: a minimal set of selection-layer nodes that
/// makes the feature true, plus the cost-bearing nodes it pulls in per
/// channel (for deeper channels, through the AND-closure).
struct Way {
    std::string feature_id;
    int way_index = 0;  // 1-based within the feature
    std::vector<std::string> selection_nodes;                        // sorted
    std::map<std::string, std::vector<std::string>> channel_usage;   // SUM channels
};

/// The induced 3-layer circuit: OR over ways at the top, AND over selection
/// nodes per way below. Features whose normal form came out empty are
/// dropped and recorded.
struct ThreeLayerForm {
    std::vector<std::string> features;  // sorted, only features with ways
    std::vector<Way> ways;              // grouped by feature, feature order
    std::map<std::string, int> way_counts;
    std::size_t extended_size = 0;  // sum of way counts
    std::vector<std::string> dropped_features;

    std::vector<const Way*> ways_of(const std::string& feature) const;
    const Way& way(const std::string& feature, int way_index) const;
};

struct ReduceOptions {
    /// Hard cap on minterms materialized during expansion (per feature and
    /// in total). Exceeding it raises an error instead of truncating.
    std::size_t max_minterms = 10000;
};

/// Equivalent circuit in which NOT gates appear only directly above
/// selection-layer nodes (the inputs, whenever the selection layer is the
/// deepest one). Gate structure above the selection layer is rebuilt; the
/// layer count may shrink or grow, and pass-through OR nodes pad short
/// branches. Feature and selection-layer ids are preserved.
CostCircuit to_nnf(const CostCircuit& circuit);

/// Full signed DNF of one feature over selection-layer literals:
/// double negations removed, De Morgan + distribution applied,
/// contradictory products dropped, then idempotence and absorption.
/// Deterministic: minterms and literals are sorted.
std::vector<Minterm> feature_dnf_literals(const CostCircuit& circuit,
                                          const std::string& feature_id,
                                          const ReduceOptions& opts = {});

/// The feature's ways: like feature_dnf_literals but every literal must be
/// positive; a surviving negated literal raises "negative cost literal
/// unsupported".
std::vector<std::vector<std::string>> feature_dnf(const CostCircuit& circuit,
                                                  const std::string& feature_id,
                                                  const ReduceOptions& opts = {});

/// Reduce the whole circuit: ways for every feature plus per-way usage masks
/// for every SUM channel (anchor node used iff some selection node in the
/// way requires it).
ThreeLayerForm reduce(const CostCircuit& circuit, const ReduceOptions& opts = {});

/// Evaluate a signed DNF under a selection-layer assignment.
bool dnf_value(const std::vector<Minterm>& dnf, const std::map<std::string, bool>& assignment);

/// Deterministic JSON report of a reduction (regression fixture format).
std::string form_to_json(const ThreeLayerForm& form);

}  // namespace costwise
