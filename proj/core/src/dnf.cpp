#include "costwise/dnf.hpp"

#include <algorithm>
#include <memory>
#include <set>

#include <json.hpp>

namespace costwise {

namespace {

// ---------------------------------------------------------------------------
// Canonical minterm / DNF helpers
// ---------------------------------------------------------------------------

// Conjunction of two minterms; false (empty optional semantics via ok flag)
// when they contain a literal with both polarities.
bool merge_minterms(const Minterm& a, const Minterm& b, Minterm& out) {
    out.clear();
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->id < ib->id) {
            out.push_back(*ia++);
        } else if (ib->id < ia->id) {
            out.push_back(*ib++);
        } else {
            if (ia->positive != ib->positive) return false;  // x AND NOT x
            out.push_back(*ia++);
            ++ib;
        }
    }
    out.insert(out.end(), ia, a.end());
    out.insert(out.end(), ib, b.end());
    return true;
}

bool subsumes(const Minterm& small, const Minterm& big) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

// Sort, dedupe, and drop every minterm that is a superset of another
// (absorption), leaving minimal implicants only.
void canonicalize(std::vector<Minterm>& dnf) {
    std::sort(dnf.begin(), dnf.end());
    dnf.erase(std::unique(dnf.begin(), dnf.end()), dnf.end());
    std::vector<Minterm> kept;
    std::vector<bool> dead(dnf.size(), false);
    for (std::size_t i = 0; i < dnf.size(); ++i) {
        if (dead[i]) continue;
        for (std::size_t j = 0; j < dnf.size(); ++j) {
            if (i == j || dead[j]) continue;
            if (dnf[j].size() < dnf[i].size() && subsumes(dnf[j], dnf[i])) {
                dead[i] = true;
                break;
            }
            if (dnf[j].size() == dnf[i].size() && j < i && dnf[j] == dnf[i]) {
                dead[i] = true;
                break;
            }
        }
    }
    for (std::size_t i = 0; i < dnf.size(); ++i)
        if (!dead[i]) kept.push_back(std::move(dnf[i]));
    dnf = std::move(kept);
}

[[noreturn]] void blow_up(std::size_t need, std::size_t cap) {
    throw error("reduction blow-up: " + std::to_string(need) +
                " minterms exceed the configured cap of " + std::to_string(cap));
}

// ---------------------------------------------------------------------------
// Per-node DNF with memoization over (node, polarity)
// ---------------------------------------------------------------------------

struct DnfBuilder {
    const CostCircuit& circuit;
    std::size_t cap;
    std::map<std::pair<std::string, bool>, std::vector<Minterm>> memo;

    const std::vector<Minterm>& dnf_of(const std::string& id, bool negated) {
        auto key = std::make_pair(id, negated);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;

        const Node& n = circuit.node(id);
        std::vector<Minterm> result;
        if (n.layer == circuit.selection_layer()) {
            result.push_back({Lit{id, !negated}});
        } else if (n.layer > circuit.selection_layer()) {
            throw error("dnf: node " + id + " lies below the selection layer");
        } else {
            switch (n.gate) {
                case GateKind::Not:
                    result = dnf_of(n.children.front(), !negated);
                    break;
                case GateKind::And:
                case GateKind::Or: {
                    bool conjunctive = (n.gate == GateKind::And) != negated;  // De Morgan
                    if (conjunctive) {
                        result.push_back({});  // neutral element: true
                        for (const auto& ch : n.children) {
                            const auto& child = dnf_of(ch, negated);
                            if (result.size() * child.size() > cap)
                                blow_up(result.size() * child.size(), cap);
                            std::vector<Minterm> next;
                            Minterm merged;
                            for (const auto& a : result)
                                for (const auto& b : child)
                                    if (merge_minterms(a, b, merged)) next.push_back(merged);
                            canonicalize(next);
                            result = std::move(next);
                        }
                    } else {
                        for (const auto& ch : n.children) {
                            const auto& child = dnf_of(ch, negated);
                            result.insert(result.end(), child.begin(), child.end());
                            if (result.size() > cap) blow_up(result.size(), cap);
                        }
                        canonicalize(result);
                    }
                    break;
                }
                case GateKind::Input:
                    throw error("dnf: INPUT node " + id + " above the selection layer");
            }
        }
        return memo.emplace(key, std::move(result)).first->second;
    }
};

// ---------------------------------------------------------------------------
// NNF expression trees (used by to_nnf)
// ---------------------------------------------------------------------------

struct Expr {
    enum Kind { Literal, And, Or } kind = Literal;
    Lit lit;
    std::vector<Expr> children;
};

std::string expr_key(const Expr& e) {
    switch (e.kind) {
        case Expr::Literal:
            return (e.lit.positive ? "+" : "-") + e.lit.id;
        case Expr::And:
        case Expr::Or: {
            std::string s = e.kind == Expr::And ? "(&" : "(|";
            for (const auto& c : e.children) s += " " + expr_key(c);
            return s + ")";
        }
    }
    return "?";
}

Expr nnf_expr(const CostCircuit& circuit, const std::string& id, bool negated) {
    const Node& n = circuit.node(id);
    if (n.layer == circuit.selection_layer()) return Expr{Expr::Literal, Lit{id, !negated}, {}};
    switch (n.gate) {
        case GateKind::Not:
            return nnf_expr(circuit, n.children.front(), !negated);
        case GateKind::And:
        case GateKind::Or: {
            Expr e;
            e.kind = ((n.gate == GateKind::And) != negated) ? Expr::And : Expr::Or;
            for (const auto& ch : n.children) {
                Expr c = nnf_expr(circuit, ch, negated);
                if (c.kind == e.kind) {
                    for (auto& g : c.children) e.children.push_back(std::move(g));
                } else {
                    e.children.push_back(std::move(c));
                }
            }
            std::sort(e.children.begin(), e.children.end(),
                      [](const Expr& a, const Expr& b) { return expr_key(a) < expr_key(b); });
            e.children.erase(std::unique(e.children.begin(), e.children.end(),
                                         [](const Expr& a, const Expr& b) {
                                             return expr_key(a) == expr_key(b);
                                         }),
                             e.children.end());
            if (e.children.size() == 1) return std::move(e.children.front());
            return e;
        }
        case GateKind::Input:
            throw error("nnf: INPUT node " + id + " above the selection layer");
    }
    throw error("nnf: unreachable");
}

// Minimum number of layers the expression needs strictly below its own node
// (a negative literal needs one layer for its NOT gate).
int min_depth_below(const Expr& e) {
    switch (e.kind) {
        case Expr::Literal:
            return e.lit.positive ? 0 : 1;
        case Expr::And:
        case Expr::Or: {
            int d = 0;
            for (const auto& c : e.children) d = std::max(d, min_depth_below(c));
            return 1 + d;
        }
    }
    return 0;
}

struct NnfEmitter {
    const CostCircuit& circuit;
    int new_sel;
    std::map<std::string, Node> emitted;                     // id -> node
    std::map<std::pair<std::string, int>, std::string> memo;  // (expr key, layer) -> id
    int counter = 0;

    // Emits the expression rooted at `layer`, returns its node id.
    std::string place(const Expr& e, int layer) {
        auto key = std::make_pair(expr_key(e), layer);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        std::string id;
        if (e.kind == Expr::Literal) {
            if (e.lit.positive) {
                id = layer == new_sel ? e.lit.id : pass_through(e.lit.id, layer, new_sel);
            } else {
                std::string not_id = "not__" + e.lit.id;
                if (!emitted.count(not_id))
                    emitted.emplace(not_id,
                                    Node{not_id, new_sel - 1, GateKind::Not, {e.lit.id}, {}, {}});
                id = layer == new_sel - 1 ? not_id : pass_through(not_id, layer, new_sel - 1);
            }
        } else {
            id = "nnf" + std::to_string(layer) + "_" + std::to_string(counter++);
            Node node{id, layer, e.kind == Expr::And ? GateKind::And : GateKind::Or, {}, {}, {}};
            for (const auto& c : e.children) node.children.push_back(place(c, layer + 1));
            std::sort(node.children.begin(), node.children.end());
            node.children.erase(std::unique(node.children.begin(), node.children.end()),
                                node.children.end());
            emitted.emplace(id, std::move(node));
        }
        memo.emplace(key, id);
        return id;
    }

    // Chain of single-child OR nodes exposing `base` (living at base_layer) at
    // the shallower `layer`.
    std::string pass_through(const std::string& base, int layer, int base_layer) {
        std::string below = base;
        for (int l = base_layer - 1; l >= layer; --l) {
            std::string id = base + "__thru" + std::to_string(l);
            if (!emitted.count(id))
                emitted.emplace(id, Node{id, l, GateKind::Or, {below}, {}, {}});
            below = id;
        }
        return below;
    }
};

}  // namespace

CostCircuit to_nnf(const CostCircuit& circuit) {
    const int old_sel = circuit.selection_layer();
    if (old_sel <= 1) return circuit;

    std::map<std::string, Expr> feature_exprs;
    int max_depth = 1;
    for (const auto& f : circuit.feature_ids()) {
        Expr e = nnf_expr(circuit, f, false);
        // Literal bodies get wrapped under the feature gate, costing a layer.
        int depth = e.kind == Expr::Literal ? 1 + min_depth_below(e) : min_depth_below(e);
        max_depth = std::max(max_depth, std::max(1, depth));
        feature_exprs.emplace(f, std::move(e));
    }
    const int new_sel = 1 + max_depth;

    NnfEmitter emitter{circuit, new_sel};
    for (const auto& [f, e] : feature_exprs) {
        Node feature{f, 1, GateKind::Or, {}, circuit.node(f).costs, circuit.node(f).wait_minutes};
        if (e.kind == Expr::Literal) {
            feature.children.push_back(emitter.place(e, 2));
        } else {
            feature.gate = e.kind == Expr::And ? GateKind::And : GateKind::Or;
            for (const auto& c : e.children) feature.children.push_back(emitter.place(c, 2));
            std::sort(feature.children.begin(), feature.children.end());
            feature.children.erase(std::unique(feature.children.begin(), feature.children.end()),
                                   feature.children.end());
        }
        emitter.emitted.emplace(f, std::move(feature));
    }

    // The selection layer and everything below it move by delta.
    const int delta = new_sel - old_sel;
    std::vector<Node> nodes;
    for (auto& [id, n] : emitter.emitted) nodes.push_back(n);
    for (const auto& n : circuit.nodes()) {
        if (n.layer < old_sel) continue;
        Node copy = n;
        copy.layer += delta;
        nodes.push_back(std::move(copy));
    }

    std::vector<std::string> layer_names;
    layer_names.push_back(circuit.layer_names().empty() ? "features" : circuit.layer_names().front());
    for (int l = 2; l < new_sel; ++l) layer_names.push_back("internal-" + std::to_string(l));
    for (int l = old_sel; l <= circuit.layer_count(); ++l)
        layer_names.push_back(circuit.layer_names()[static_cast<std::size_t>(l) - 1]);

    std::vector<CostChannel> channels = circuit.channels();
    for (auto& c : channels) c.anchor_layer += delta;

    return CostCircuit(std::move(layer_names), new_sel, std::move(channels), std::move(nodes));
}

std::vector<Minterm> feature_dnf_literals(const CostCircuit& circuit, const std::string& feature_id,
                                          const ReduceOptions& opts) {
    const Node& f = circuit.node(feature_id);
    if (f.layer != 1) throw error("feature_dnf: " + feature_id + " is not a layer-1 node");
    DnfBuilder builder{circuit, opts.max_minterms, {}};
    return builder.dnf_of(feature_id, false);
}

std::vector<std::vector<std::string>> feature_dnf(const CostCircuit& circuit,
                                                  const std::string& feature_id,
                                                  const ReduceOptions& opts) {
    auto dnf = feature_dnf_literals(circuit, feature_id, opts);
    std::vector<std::vector<std::string>> ways;
    for (const auto& m : dnf) {
        std::vector<std::string> way;
        for (const auto& lit : m) {
            if (!lit.positive)
                throw error("negative cost literal unsupported: NOT " + lit.id + " in the DNF of " +
                            feature_id);
            way.push_back(lit.id);
        }
        ways.push_back(std::move(way));
    }
    return ways;  // canonical order inherited from the minterm order
}

bool dnf_value(const std::vector<Minterm>& dnf, const std::map<std::string, bool>& assignment) {
    for (const auto& m : dnf) {
        bool all = true;
        for (const auto& lit : m) {
            if (assignment.at(lit.id) != lit.positive) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

std::vector<const Way*> ThreeLayerForm::ways_of(const std::string& feature) const {
    std::vector<const Way*> out;
    for (const auto& w : ways)
        if (w.feature_id == feature) out.push_back(&w);
    return out;
}

const Way& ThreeLayerForm::way(const std::string& feature, int way_index) const {
    for (const auto& w : ways)
        if (w.feature_id == feature && w.way_index == way_index) return w;
    throw error("no way " + std::to_string(way_index) + " for feature " + feature);
}

ThreeLayerForm reduce(const CostCircuit& circuit, const ReduceOptions& opts) {
    ThreeLayerForm form;
    DnfBuilder builder{circuit, opts.max_minterms, {}};

    std::vector<const CostChannel*> sum_channels;
    for (const auto& c : circuit.channels())
        if (c.aggregation == Aggregation::Sum) sum_channels.push_back(&c);

    std::size_t total = 0;
    for (const auto& f : circuit.feature_ids()) {
        const auto& dnf = builder.dnf_of(f, false);
        if (dnf.empty()) {
            form.dropped_features.push_back(f);
            continue;
        }
        total += dnf.size();
        if (total > opts.max_minterms) blow_up(total, opts.max_minterms);

        form.features.push_back(f);
        form.way_counts[f] = static_cast<int>(dnf.size());
        int p = 0;
        for (const auto& m : dnf) {
            Way way;
            way.feature_id = f;
            way.way_index = ++p;
            for (const auto& lit : m) {
                if (!lit.positive)
                    throw error("negative cost literal unsupported: NOT " + lit.id +
                                " in the DNF of " + f);
                way.selection_nodes.push_back(lit.id);
            }
            // Anchor node used iff some selection node in the way requires it.
            std::set<std::string> closure;
            for (const auto& s : way.selection_nodes)
                for (const auto& dep : circuit.required_closure(s)) closure.insert(dep);
            for (const CostChannel* c : sum_channels) {
                std::vector<std::string> usage;
                for (const auto& id : closure) {
                    const Node& n = circuit.node(id);
                    if (n.layer == c->anchor_layer && n.cost_bearing(c->name)) usage.push_back(id);
                }
                way.channel_usage[c->name] = std::move(usage);
            }
            form.ways.push_back(std::move(way));
        }
    }
    form.extended_size = form.ways.size();
    return form;
}

std::string form_to_json(const ThreeLayerForm& form) {
    nlohmann::json doc;
    doc["extended_size"] = form.extended_size;
    doc["dropped_features"] = form.dropped_features;
    doc["way_counts"] = form.way_counts;
    nlohmann::json jways = nlohmann::json::array();
    for (const auto& w : form.ways) {
        jways.push_back({{"feature", w.feature_id},
                         {"way", w.way_index},
                         {"selection_nodes", w.selection_nodes},
                         {"channel_usage", w.channel_usage}});
    }
    doc["ways"] = jways;
    return doc.dump(2) + "\n";
}

}  // namespace costwise
