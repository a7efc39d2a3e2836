#include "costwise/circuit_io.hpp"

#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

namespace costwise {

namespace {

using nlohmann::json;

GateKind parse_gate(const std::string& s) {
    if (s == "and") return GateKind::And;
    if (s == "or") return GateKind::Or;
    if (s == "not") return GateKind::Not;
    if (s == "input") return GateKind::Input;
    throw error("unknown gate kind: " + s);
}

Aggregation parse_aggregation(const std::string& s) {
    if (s == "sum") return Aggregation::Sum;
    if (s == "max") return Aggregation::Max;
    throw error("unknown aggregation: " + s);
}

json require(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key))
        throw error(std::string("circuit schema: missing '") + key + "' in " + where);
    return obj.at(key);
}

// Rewrites layer-skipping edges through chains of single-child OR nodes so
// that every edge spans exactly one layer.
void insert_pass_throughs(std::vector<Node>& nodes) {
    std::map<std::string, int> layer_of;
    for (const auto& n : nodes) layer_of[n.id] = n.layer;

    std::map<std::pair<std::string, int>, std::string> made;  // (child, layer) -> id
    std::vector<Node> added;
    auto pass_through_at = [&](const std::string& child, int layer) {
        auto key = std::make_pair(child, layer);
        auto it = made.find(key);
        if (it != made.end()) return it->second;
        std::string id = child + "__thru" + std::to_string(layer);
        if (layer_of.count(id))
            throw error("pass-through id collides with existing node: " + id);
        made.emplace(key, id);
        added.push_back(Node{id, layer, GateKind::Or, {}, {}, std::nullopt});
        return id;
    };

    for (auto& n : nodes) {
        for (auto& child : n.children) {
            auto it = layer_of.find(child);
            if (it == layer_of.end()) continue;  // validate() reports it
            int child_layer = it->second;
            if (child_layer <= n.layer + 1) continue;
            // Bridge n.layer+1 .. child_layer-1 with pass-throughs.
            std::string below = child;
            for (int l = child_layer - 1; l > n.layer; --l) below = pass_through_at(child, l);
            child = below;
        }
    }
    // Wire the chains (each pass-through points one layer deeper).
    for (auto& p : added) {
        const std::string base = p.id.substr(0, p.id.rfind("__thru"));
        int base_layer = layer_of.at(base);
        p.children.push_back(p.layer + 1 == base_layer
                                 ? base
                                 : made.at(std::make_pair(base, p.layer + 1)));
    }
    nodes.insert(nodes.end(), added.begin(), added.end());
}

}  // namespace

CostCircuit parse_circuit(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw error(std::string("circuit file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw error("circuit schema: top level must be an object");
    int version = require(doc, "version", "circuit").get<int>();
    if (version != 1) throw error("unsupported circuit schema version " + std::to_string(version));

    std::vector<std::string> layers = require(doc, "layers", "circuit").get<std::vector<std::string>>();
    int selection_layer = require(doc, "selection_layer", "circuit").get<int>();

    std::vector<CostChannel> channels;
    for (const auto& c : require(doc, "channels", "circuit")) {
        CostChannel ch;
        ch.name = require(c, "name", "channel").get<std::string>();
        ch.anchor_layer = require(c, "anchor_layer", "channel " + ch.name).get<int>();
        ch.aggregation = parse_aggregation(require(c, "aggregation", "channel").get<std::string>());
        ch.unit = c.value("unit", std::string{});
        channels.push_back(std::move(ch));
    }

    std::vector<Node> nodes;
    for (const auto& jn : require(doc, "nodes", "circuit")) {
        Node n;
        n.id = require(jn, "id", "node").get<std::string>();
        n.layer = require(jn, "layer", "node " + n.id).get<int>();
        n.gate = parse_gate(require(jn, "gate", "node " + n.id).get<std::string>());
        if (jn.contains("children")) n.children = jn.at("children").get<std::vector<std::string>>();
        if (jn.contains("costs")) {
            for (const auto& [name, v] : jn.at("costs").items()) n.costs[name] = v.get<double>();
        }
        if (jn.contains("wait_minutes") && !jn.at("wait_minutes").is_null())
            n.wait_minutes = jn.at("wait_minutes").get<double>();
        nodes.push_back(std::move(n));
    }

    insert_pass_throughs(nodes);
    return CostCircuit(std::move(layers), selection_layer, std::move(channels), std::move(nodes));
}

CostCircuit load_circuit(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open circuit file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_circuit(text);
}

std::string circuit_to_json(const CostCircuit& circuit) {
    json doc;
    doc["version"] = 1;
    doc["layers"] = circuit.layer_names();
    doc["selection_layer"] = circuit.selection_layer();
    json jchannels = json::array();
    for (const auto& c : circuit.channels()) {
        jchannels.push_back({{"name", c.name},
                             {"anchor_layer", c.anchor_layer},
                             {"aggregation", to_string(c.aggregation)},
                             {"unit", c.unit}});
    }
    doc["channels"] = jchannels;
    json jnodes = json::array();
    for (const auto& n : circuit.nodes()) {
        json jn = {{"id", n.id}, {"layer", n.layer}, {"gate", to_string(n.gate)}};
        if (!n.children.empty()) jn["children"] = n.children;
        if (!n.costs.empty()) jn["costs"] = n.costs;
        if (n.wait_minutes) jn["wait_minutes"] = *n.wait_minutes;
        jnodes.push_back(std::move(jn));
    }
    doc["nodes"] = jnodes;
    return doc.dump(2) + "\n";
}

void save_circuit(const std::string& path, const CostCircuit& circuit) {
    std::ofstream out(path);
    if (!out) throw error("cannot write circuit file: " + path);
    out << circuit_to_json(circuit);
}

}  // namespace costwise
