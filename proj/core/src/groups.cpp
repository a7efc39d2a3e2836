#include "costwise/groups.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

namespace costwise {

ExtendedIndex ExtendedIndex::from(const ThreeLayerForm& form) {
    ExtendedIndex idx;
    for (const auto& w : form.ways) {
        if (!idx.feature_range.count(w.feature_id))
            idx.feature_range[w.feature_id] = {idx.entries.size(), idx.entries.size()};
        idx.feature_range[w.feature_id].second = idx.entries.size() + 1;
        idx.entries.emplace_back(w.feature_id, w.way_index);
    }
    return idx;
}

std::size_t ExtendedIndex::at(const std::string& feature, int way_index) const {
    auto it = feature_range.find(feature);
    if (it == feature_range.end()) throw error("extended index: unknown feature " + feature);
    std::size_t pos = it->second.first + static_cast<std::size_t>(way_index - 1);
    if (way_index < 1 || pos >= it->second.second)
        throw error("extended index: feature " + feature + " has no way " +
                    std::to_string(way_index));
    return pos;
}

std::vector<std::size_t> ExtendedModel::support() const {
    std::vector<std::size_t> s;
    for (std::size_t j = 0; j < beta.size(); ++j)
        if (std::abs(beta[j]) > support_eps) s.push_back(j);
    return s;
}

GroupSpec build_groups(const ThreeLayerForm& form, const CostCircuit& circuit,
                       const std::string& channel, double lambda) {
    const CostChannel* c = circuit.find_channel(channel);
    if (c == nullptr) throw error("build_groups: undeclared channel " + channel);
    if (c->aggregation == Aggregation::Max)
        throw error("wait channels are handled by filtering, not penalties (channel " + channel +
                    ")");
    if (lambda < 0) throw error("build_groups: negative lambda");

    // Way index -> extended coordinate, in form order.
    GroupSpec spec{channel, lambda, {}};
    for (const auto& node_id : circuit.layer_node_ids(c->anchor_layer)) {
        const Node& n = circuit.node(node_id);
        if (!n.cost_bearing(channel)) continue;
        Group g{node_id, n.costs.at(channel), {}};
        for (std::size_t j = 0; j < form.ways.size(); ++j) {
            const auto& usage = form.ways[j].channel_usage.at(channel);
            if (std::binary_search(usage.begin(), usage.end(), node_id)) g.indices.push_back(j);
        }
        if (!g.indices.empty()) spec.groups.push_back(std::move(g));
    }
    return spec;
}

double exact_penalty(const ExtendedModel& model, const std::vector<GroupSpec>& specs) {
    double total = 0.0;
    for (const auto& spec : specs) {
        for (const auto& g : spec.groups) {
            bool active = false;
            for (std::size_t j : g.indices) {
                if (std::abs(model.beta.at(j)) > model.support_eps) {
                    active = true;
                    break;
                }
            }
            if (active) total += spec.lambda * g.cost;
        }
    }
    return total;
}

double relaxed_penalty(const ExtendedModel& model, const std::vector<GroupSpec>& specs) {
    double total = 0.0;
    for (const auto& spec : specs) {
        for (const auto& g : spec.groups) {
            double m = 0.0;
            for (std::size_t j : g.indices) m = std::max(m, std::abs(model.beta.at(j)));
            total += spec.lambda * g.cost * m;
        }
    }
    return total;
}

FeatureSelection collapse(const ExtendedModel& model, const ThreeLayerForm& form) {
    if (model.beta.size() != form.ways.size())
        throw error("collapse: model has " + std::to_string(model.beta.size()) +
                    " coordinates, form has " + std::to_string(form.ways.size()) + " ways");
    FeatureSelection sel;
    std::set<std::string> features;
    std::set<std::string> tests;
    std::map<std::string, std::set<std::string>> per_channel;
    for (std::size_t j : model.support()) {
        const Way& w = form.ways[j];
        features.insert(w.feature_id);
        sel.ways.emplace_back(w.feature_id, w.way_index);
        tests.insert(w.selection_nodes.begin(), w.selection_nodes.end());
        for (const auto& [channel, nodes] : w.channel_usage)
            per_channel[channel].insert(nodes.begin(), nodes.end());
    }
    sel.features.assign(features.begin(), features.end());
    sel.tests.assign(tests.begin(), tests.end());
    for (const auto& [channel, nodes] : per_channel)
        sel.channel_nodes[channel].assign(nodes.begin(), nodes.end());
    return sel;
}

std::map<std::string, double> cost_report(const FeatureSelection& selection,
                                          const CostCircuit& circuit) {
    std::set<std::string> used;
    for (const auto& t : selection.tests)
        for (const auto& dep : circuit.required_closure(t)) used.insert(dep);

    std::map<std::string, double> report;
    for (const auto& c : circuit.channels()) {
        double value = 0.0;
        for (const auto& id : used) {
            const Node& n = circuit.node(id);
            if (n.layer != c.anchor_layer) continue;
            if (c.aggregation == Aggregation::Sum) {
                auto it = n.costs.find(c.name);
                if (it != n.costs.end()) value += it->second;
            } else if (n.wait_minutes) {
                value = std::max(value, *n.wait_minutes);
            }
        }
        report[c.name] = value;
    }
    return report;
}

namespace {

// Per-channel cost sums of one way, SUM channels in declaration order.
std::vector<double> way_cost_vector(const Way& way, const CostCircuit& circuit) {
    std::vector<double> v;
    for (const auto& c : circuit.channels()) {
        if (c.aggregation != Aggregation::Sum) continue;
        double sum = 0.0;
        auto it = way.channel_usage.find(c.name);
        if (it != way.channel_usage.end())
            for (const auto& id : it->second) sum += circuit.node(id).costs.at(c.name);
        v.push_back(sum);
    }
    return v;
}

}  // namespace

FeatureSelection cheapest_selection(const std::vector<std::string>& features,
                                    const ThreeLayerForm& form, const CostCircuit& circuit) {
    FeatureSelection sel;
    std::set<std::string> sorted_features(features.begin(), features.end());
    std::set<std::string> tests;
    std::map<std::string, std::set<std::string>> per_channel;
    for (const auto& f : sorted_features) {
        auto ways = form.ways_of(f);
        if (ways.empty()) throw error("cheapest_selection: no ways for feature " + f);
        const Way* best = ways.front();
        std::vector<double> best_cost = way_cost_vector(*best, circuit);
        for (std::size_t i = 1; i < ways.size(); ++i) {
            std::vector<double> cost = way_cost_vector(*ways[i], circuit);
            if (cost < best_cost) {
                best = ways[i];
                best_cost = std::move(cost);
            }
        }
        sel.features.push_back(f);
        sel.ways.emplace_back(f, best->way_index);
        tests.insert(best->selection_nodes.begin(), best->selection_nodes.end());
        for (const auto& [channel, nodes] : best->channel_usage)
            per_channel[channel].insert(nodes.begin(), nodes.end());
    }
    sel.tests.assign(tests.begin(), tests.end());
    for (const auto& [channel, nodes] : per_channel)
        sel.channel_nodes[channel].assign(nodes.begin(), nodes.end());
    return sel;
}

std::vector<double> scaled_l1_weights(const ThreeLayerForm& form, const CostCircuit& circuit,
                                      const std::string& channel) {
    const CostChannel* c = circuit.find_channel(channel);
    if (c == nullptr) throw error("scaled_l1_weights: undeclared channel " + channel);
    if (c->aggregation != Aggregation::Sum)
        throw error("scaled_l1_weights: channel " + channel + " is not additive");
    std::vector<double> weights;
    for (const auto& f : form.features) {
        double cheapest = std::numeric_limits<double>::infinity();
        for (const Way* w : form.ways_of(f)) {
            double sum = 0.0;
            for (const auto& id : w->channel_usage.at(channel))
                sum += circuit.node(id).costs.at(channel);
            cheapest = std::min(cheapest, sum);
        }
        weights.push_back(std::max(1.0, cheapest));
    }
    return weights;
}

std::string groups_to_json(const std::vector<GroupSpec>& specs) {
    nlohmann::json doc;
    nlohmann::json jspecs = nlohmann::json::array();
    for (const auto& spec : specs) {
        nlohmann::json jgroups = nlohmann::json::array();
        for (const auto& g : spec.groups)
            jgroups.push_back({{"node", g.node_id}, {"cost", g.cost}, {"indices", g.indices}});
        jspecs.push_back({{"channel", spec.channel}, {"lambda", spec.lambda}, {"groups", jgroups}});
    }
    doc["specs"] = jspecs;
    return doc.dump(2) + "\n";
}

}  // namespace costwise
