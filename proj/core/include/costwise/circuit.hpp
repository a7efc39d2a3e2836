#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace costwise {

/// Runtime failure of a library operation (bad arguments, broken
/// preconditions). Validation diagnostics are returned as data instead,
/// see ValidationReport.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class GateKind { And, Or, Not, Input };

enum class Aggregation { Sum, Max };

const char* to_string(GateKind g);
const char* to_string(Aggregation a);

/// One cost type (e.g. financial, caregiver time, wait time). SUM channels
/// enter the penalty; the single MAX channel (wait) is handled exclusively
/// by circuit filtering.
struct CostChannel {
    std::string name;
    int anchor_layer = 0;
    Aggregation aggregation = Aggregation::Sum;
    std::string unit;
};

struct Node {
    std::string id;
    int layer = 0;
    GateKind gate = GateKind::Input;
    std::vector<std::string> children;  // ids, all exactly one layer deeper
    std::map<std::string, double> costs;  // channel name -> per-node cost
    std::optional<double> wait_minutes;   // only on the wait channel's anchor layer

    bool cost_bearing(const std::string& channel) const {
        return costs.count(channel) != 0;
    }
};

/// Layered cost-dependency boolean circuit. Layer 1 holds the output
/// (feature) nodes, the deepest layer holds the inputs. Nodes are stored
/// sorted by id so every traversal is deterministic.
///
/// Immutable after construction; all operations on it are pure functions.
class CostCircuit {
public:
    CostCircuit() = default;
    CostCircuit(std::vector<std::string> layer_names, int selection_layer,
                std::vector<CostChannel> channels, std::vector<Node> nodes);

    int layer_count() const { return static_cast<int>(layer_names_.size()); }
    int selection_layer() const { return selection_layer_; }
    const std::vector<std::string>& layer_names() const { return layer_names_; }
    const std::vector<CostChannel>& channels() const { return channels_; }
    const std::vector<Node>& nodes() const { return nodes_; }

    bool has_node(const std::string& id) const;
    const Node& node(const std::string& id) const;  // throws on unknown id
    const CostChannel* find_channel(const std::string& name) const;

    /// Channel with MAX aggregation, or nullptr if none is declared.
    const CostChannel* wait_channel() const;

    /// Node ids of one layer, sorted ascending.
    std::vector<std::string> layer_node_ids(int layer) const;

    /// Feature ids (layer-1 nodes), sorted.
    std::vector<std::string> feature_ids() const { return layer_node_ids(1); }

    /// All nodes reachable from `id` through child edges, `id` included.
    /// For nodes at or below the selection layer this is the AND-closure of
    /// required resources.
    std::vector<std::string> required_closure(const std::string& id) const;

private:
    std::vector<std::string> layer_names_;
    int selection_layer_ = 0;
    std::vector<CostChannel> channels_;
    std::vector<Node> nodes_;                 // sorted by id
    std::map<std::string, std::size_t> index_;
};

struct Violation {
    std::string kind;     // stable machine-readable tag, e.g. "negative cost"
    std::string node_id;  // offending node, empty for circuit-level issues
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

/// Structural validation. Checks, per node: duplicate ids, unknown children,
/// backward edges ("cycle"), layer-skipping edges, gate arity (NOT fan-in 1,
/// AND/OR fan-in >= 1, INPUT fan-in 0), INPUT only at the deepest layer,
/// negative costs, costs on non-anchor layers, wait times off the wait
/// channel's anchor layer, and non-AND gates at or below the selection layer.
ValidationReport validate(const CostCircuit& circuit);

/// Bottom-up truth-value computation given an assignment for every INPUT
/// node. Throws if an input is missing from the assignment.
std::map<std::string, bool> evaluate(const CostCircuit& circuit,
                                     const std::map<std::string, bool>& assignment);

/// Same as evaluate() but with the assignment given at an arbitrary layer;
/// values are computed for that layer and everything above it. Used to check
/// DNF-over-selection-layer equivalence against the original gates.
std::map<std::string, bool> evaluate_at_layer(const CostCircuit& circuit, int layer,
                                              const std::map<std::string, bool>& assignment);

/// Reduced circuit keeping only wait-anchor nodes with wait_minutes <= cap
/// (missing wait counts as zero), the deeper nodes they require, and the
/// shallower nodes still derivable from what is left. OR gates drop removed
/// children; AND and NOT gates are removed when any child is removed.
CostCircuit filter_by_wait(const CostCircuit& circuit, double wait_cap);

}  // namespace costwise
