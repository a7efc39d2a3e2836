#include "costwise/circuit.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace costwise {

const char* to_string(GateKind g) {
    switch (g) {
        case GateKind::And: return "and";
        case GateKind::Or: return "or";
        case GateKind::Not: return "not";
        case GateKind::Input: return "input";
    }
    return "?";
}

const char* to_string(Aggregation a) {
    return a == Aggregation::Sum ? "sum" : "max";
}

CostCircuit::CostCircuit(std::vector<std::string> layer_names, int selection_layer,
                         std::vector<CostChannel> channels, std::vector<Node> nodes)
    : layer_names_(std::move(layer_names)),
      selection_layer_(selection_layer),
      channels_(std::move(channels)),
      nodes_(std::move(nodes)) {
    std::sort(nodes_.begin(), nodes_.end(),
              [](const Node& a, const Node& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        index_.emplace(nodes_[i].id, i);
    }
}

bool CostCircuit::has_node(const std::string& id) const { return index_.count(id) != 0; }

const Node& CostCircuit::node(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw error("unknown node id: " + id);
    return nodes_[it->second];
}

const CostChannel* CostCircuit::find_channel(const std::string& name) const {
    for (const auto& c : channels_) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

const CostChannel* CostCircuit::wait_channel() const {
    for (const auto& c : channels_) {
        if (c.aggregation == Aggregation::Max) return &c;
    }
    return nullptr;
}

std::vector<std::string> CostCircuit::layer_node_ids(int layer) const {
    std::vector<std::string> out;
    for (const auto& n : nodes_) {
        if (n.layer == layer) out.push_back(n.id);
    }
    return out;  // nodes_ is sorted by id
}

std::vector<std::string> CostCircuit::required_closure(const std::string& id) const {
    std::set<std::string> seen;
    std::vector<std::string> stack{id};
    while (!stack.empty()) {
        std::string cur = stack.back();
        stack.pop_back();
        if (!seen.insert(cur).second) continue;
        auto it = index_.find(cur);
        if (it == index_.end()) continue;
        for (const auto& ch : nodes_[it->second].children) stack.push_back(ch);
    }
    return {seen.begin(), seen.end()};
}

std::string ValidationReport::summary() const {
    if (ok()) return "OK";
    std::ostringstream os;
    os << violations.size() << " violation(s):";
    for (const auto& v : violations) {
        os << "\n  [" << v.kind << "] ";
        if (!v.node_id.empty()) os << v.node_id << ": ";
        os << v.message;
    }
    return os.str();
}

ValidationReport validate(const CostCircuit& circuit) {
    ValidationReport report;
    auto add = [&](std::string kind, std::string node_id, std::string message) {
        report.violations.push_back({std::move(kind), std::move(node_id), std::move(message)});
    };

    const int r = circuit.layer_count();
    const int sel = circuit.selection_layer();
    if (r < 1) add("empty circuit", "", "circuit declares no layers");
    if (sel < 1 || sel > r) {
        add("bad selection layer", "",
            "selection_layer " + std::to_string(sel) + " outside [1, " + std::to_string(r) + "]");
    }

    const CostChannel* wait = circuit.wait_channel();
    int max_channels = 0;
    for (const auto& c : circuit.channels()) {
        if (c.aggregation == Aggregation::Max) ++max_channels;
        if (c.anchor_layer < 1 || c.anchor_layer > r) {
            add("bad anchor layer", "",
                "channel " + c.name + " anchored at layer " + std::to_string(c.anchor_layer));
        } else if (c.anchor_layer < sel) {
            add("anchor above selection layer", "",
                "channel " + c.name + " anchored at layer " + std::to_string(c.anchor_layer) +
                    ", above the selection layer; usage masks are undefined there");
        }
    }
    if (max_channels > 1) add("multiple wait channels", "", "more than one MAX-aggregation channel");

    std::set<std::string> ids;
    for (const auto& n : circuit.nodes()) {
        if (!ids.insert(n.id).second) add("duplicate id", n.id, "node id appears more than once");
    }

    for (const auto& n : circuit.nodes()) {
        if (n.layer < 1 || n.layer > r) {
            add("bad layer", n.id, "layer " + std::to_string(n.layer) + " outside [1, " + std::to_string(r) + "]");
            continue;
        }
        // Gate arity.
        switch (n.gate) {
            case GateKind::Not:
                if (n.children.size() != 1)
                    add("not fan-in", n.id, "NOT gate with " + std::to_string(n.children.size()) + " children");
                break;
            case GateKind::And:
            case GateKind::Or:
                if (n.children.empty())
                    add("empty gate", n.id, std::string(to_string(n.gate)) + " gate with no children");
                break;
            case GateKind::Input:
                if (!n.children.empty())
                    add("input with children", n.id, "INPUT gate must have no children");
                break;
        }
        if (n.layer == r && n.gate != GateKind::Input)
            add("non-input at deepest layer", n.id, "deepest-layer node must be an INPUT gate");
        if (n.layer < r && n.gate == GateKind::Input)
            add("input above deepest layer", n.id, "INPUT gate not at the deepest layer");
        // Everything from the selection layer down must be an AND-closure so
        // deeper cost-bearing nodes are functions of the selected ways.
        if (n.layer >= sel && n.layer < r && n.gate != GateKind::And)
            add("non-AND below selection layer", n.id,
                std::string(to_string(n.gate)) + " gate at layer " + std::to_string(n.layer));

        for (const auto& ch : n.children) {
            if (!circuit.has_node(ch)) {
                add("unknown child", n.id, "child " + ch + " is not a node");
                continue;
            }
            int cl = circuit.node(ch).layer;
            if (cl <= n.layer)
                add("cycle", n.id, "edge to " + ch + " does not go deeper (layer " + std::to_string(cl) + ")");
            else if (cl != n.layer + 1)
                add("cross-layer edge", n.id,
                    "child " + ch + " is at layer " + std::to_string(cl) + ", expected " + std::to_string(n.layer + 1));
        }

        for (const auto& [channel, cost] : n.costs) {
            const CostChannel* c = circuit.find_channel(channel);
            if (c == nullptr) {
                add("unknown channel", n.id, "cost for undeclared channel " + channel);
                continue;
            }
            if (cost < 0) add("negative cost", n.id, channel + " cost " + std::to_string(cost));
            if (c->anchor_layer != n.layer)
                add("cost on non-anchor layer", n.id,
                    channel + " cost on layer " + std::to_string(n.layer) + ", channel anchored at " +
                        std::to_string(c->anchor_layer));
            if (c->aggregation == Aggregation::Max)
                add("cost entry on wait channel", n.id,
                    "wait times go in wait_minutes, not the costs map");
        }

        if (n.wait_minutes) {
            if (*n.wait_minutes < 0) add("negative cost", n.id, "wait_minutes " + std::to_string(*n.wait_minutes));
            if (wait == nullptr)
                add("wait without wait channel", n.id, "wait_minutes set but no MAX channel declared");
            else if (n.layer != wait->anchor_layer)
                add("wait on non-anchor layer", n.id,
                    "wait_minutes on layer " + std::to_string(n.layer) + ", wait channel anchored at " +
                        std::to_string(wait->anchor_layer));
        }
    }
    return report;
}

namespace {

bool gate_value(const Node& n, const std::map<std::string, bool>& values) {
    switch (n.gate) {
        case GateKind::And: {
            for (const auto& ch : n.children)
                if (!values.at(ch)) return false;
            return true;
        }
        case GateKind::Or: {
            for (const auto& ch : n.children)
                if (values.at(ch)) return true;
            return false;
        }
        case GateKind::Not:
            return !values.at(n.children.front());
        case GateKind::Input:
            break;
    }
    throw error("gate_value called on INPUT node " + n.id);
}

}  // namespace

std::map<std::string, bool> evaluate_at_layer(const CostCircuit& circuit, int layer,
                                              const std::map<std::string, bool>& assignment) {
    if (layer < 1 || layer > circuit.layer_count())
        throw error("evaluate_at_layer: layer " + std::to_string(layer) + " out of range");
    std::map<std::string, bool> values;
    for (int l = layer; l >= 1; --l) {
        for (const auto& id : circuit.layer_node_ids(l)) {
            const Node& n = circuit.node(id);
            if (l == layer) {
                auto it = assignment.find(id);
                if (it == assignment.end())
                    throw error("missing assignment for node " + id);
                values[id] = it->second;
            } else {
                values[id] = gate_value(n, values);
            }
        }
    }
    return values;
}

std::map<std::string, bool> evaluate(const CostCircuit& circuit,
                                     const std::map<std::string, bool>& assignment) {
    return evaluate_at_layer(circuit, circuit.layer_count(), assignment);
}

CostCircuit filter_by_wait(const CostCircuit& circuit, double wait_cap) {
    if (wait_cap < 0) throw error("filter_by_wait: negative wait cap");
    const CostChannel* wait = circuit.wait_channel();
    if (wait == nullptr) throw error("filter_by_wait: circuit declares no wait (MAX) channel");
    const int anchor = wait->anchor_layer;
    const int r = circuit.layer_count();

    std::set<std::string> kept;
    // Anchor layer: keep nodes within the cap (inclusive; missing wait = 0).
    for (const auto& id : circuit.layer_node_ids(anchor)) {
        double w = circuit.node(id).wait_minutes.value_or(0.0);
        if (w <= wait_cap) kept.insert(id);
    }
    // Deeper layers: only what the kept anchor nodes require.
    std::set<std::string> required;
    for (const auto& id : kept)
        for (const auto& dep : circuit.required_closure(id)) required.insert(dep);
    for (int l = anchor + 1; l <= r; ++l)
        for (const auto& id : circuit.layer_node_ids(l))
            if (required.count(id)) kept.insert(id);
    // Shallower layers, bottom-up: a gate survives if it is still derivable.
    for (int l = anchor - 1; l >= 1; --l) {
        for (const auto& id : circuit.layer_node_ids(l)) {
            const Node& n = circuit.node(id);
            std::size_t alive = 0;
            for (const auto& ch : n.children)
                if (kept.count(ch)) ++alive;
            bool derivable = false;
            switch (n.gate) {
                case GateKind::Or: derivable = alive > 0; break;
                case GateKind::And:
                case GateKind::Not: derivable = alive == n.children.size(); break;
                case GateKind::Input: derivable = false; break;
            }
            if (derivable) kept.insert(id);
        }
    }

    std::vector<Node> nodes;
    for (const auto& n : circuit.nodes()) {
        if (!kept.count(n.id)) continue;
        Node copy = n;
        if (copy.gate == GateKind::Or) {
            std::vector<std::string> alive;
            for (const auto& ch : copy.children)
                if (kept.count(ch)) alive.push_back(ch);
            copy.children = std::move(alive);
        }
        nodes.push_back(std::move(copy));
    }
    return CostCircuit(circuit.layer_names(), circuit.selection_layer(), circuit.channels(),
                       std::move(nodes));
}

}  // namespace costwise
