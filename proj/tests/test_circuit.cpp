#include <doctest.h>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "costwise/circuit.hpp"
#include "costwise/circuit_io.hpp"
#include "costwise/dnf.hpp"
#include "costwise/rng.hpp"
#include "oracles.hpp"

using namespace costwise;

namespace {

std::string graph_path(const std::string& name) {
    return std::string(COSTWISE_GRAPH_DIR) + "/" + name;
}

CostCircuit tiny() { return load_circuit(graph_path("tiny.json")); }

bool has_violation(const ValidationReport& report, const std::string& kind) {
    return std::any_of(report.violations.begin(), report.violations.end(),
                       [&](const Violation& v) { return v.kind == kind; });
}

std::vector<CostChannel> tiny_channels() {
    return {{"financial", 3, Aggregation::Sum, "dollars"},
            {"caregiver_time", 4, Aggregation::Sum, "minutes"},
            {"wait", 3, Aggregation::Max, "minutes"}};
}

Node make_node(std::string id, int layer, GateKind gate, std::vector<std::string> children) {
    Node n;
    n.id = std::move(id);
    n.layer = layer;
    n.gate = gate;
    n.children = std::move(children);
    return n;
}

}  // namespace

TEST_CASE("tiny fixture loads and validates") {
    CostCircuit c = tiny();
    CHECK(validate(c).ok());
    CHECK(c.layer_count() == 4);
    CHECK(c.selection_layer() == 3);
    CHECK(c.nodes().size() == 7);
    CHECK(c.feature_ids() == std::vector<std::string>{"f1", "f2"});
    CHECK(c.layer_node_ids(3) == std::vector<std::string>{"bmp", "cmp"});
    CHECK(c.wait_channel() != nullptr);
    CHECK(c.wait_channel()->name == "wait");
    CHECK(c.node("bmp").costs.at("financial") == 10.0);
    CHECK(c.node("cmp").wait_minutes == 50.0);
    CHECK_THROWS_AS((void)c.node("nope"), error);
}

TEST_CASE("required closure walks child edges transitively") {
    CostCircuit c = tiny();
    auto closure = c.required_closure("bmp");
    CHECK(closure == std::vector<std::string>{"a_blood", "bmp"});
    auto all = c.required_closure("f2");
    CHECK(std::find(all.begin(), all.end(), "a_blood") != all.end());
    CHECK(std::find(all.begin(), all.end(), "cmp") != all.end());
}

TEST_CASE("evaluate computes gates bottom-up") {
    CostCircuit c = tiny();
    auto on = evaluate(c, {{"a_blood", true}});
    CHECK(on.at("bmp"));
    CHECK(on.at("f1"));
    CHECK(on.at("f2"));
    auto off = evaluate(c, {{"a_blood", false}});
    CHECK_FALSE(off.at("bmp"));
    CHECK_FALSE(off.at("f1"));
    CHECK_FALSE(off.at("f2"));
    CHECK_THROWS_AS(evaluate(c, {}), error);
}

TEST_CASE("evaluate_at_layer treats the given layer as inputs") {
    CostCircuit c = tiny();
    auto v = evaluate_at_layer(c, 3, {{"bmp", true}, {"cmp", false}});
    CHECK(v.at("cr"));
    CHECK(v.at("glu"));
    CHECK(v.at("f1"));
    CHECK(v.at("f2"));
    auto none = evaluate_at_layer(c, 3, {{"bmp", false}, {"cmp", false}});
    CHECK_FALSE(none.at("f1"));
    CHECK_FALSE(none.at("f2"));
}

TEST_CASE("validate flags structural defects") {
    auto layers = std::vector<std::string>{"features", "measurements", "tests", "activities"};

    SUBCASE("duplicate id") {
        CostCircuit c(layers, 3, tiny_channels(),
                      {make_node("a", 4, GateKind::Input, {}),
                       make_node("a", 4, GateKind::Input, {})});
        CHECK(has_violation(validate(c), "duplicate id"));
    }
    SUBCASE("unknown child") {
        CostCircuit c(layers, 3, tiny_channels(),
                      {make_node("t", 3, GateKind::And, {"ghost"})});
        CHECK(has_violation(validate(c), "unknown child"));
    }
    SUBCASE("cross-layer edge") {
        CostCircuit c(layers, 3, tiny_channels(),
                      {make_node("f", 1, GateKind::Or, {"t"}),
                       make_node("t", 3, GateKind::And, {"a"}),
                       make_node("a", 4, GateKind::Input, {})});
        CHECK(has_violation(validate(c), "cross-layer edge"));
    }
    SUBCASE("edge that does not go deeper is a cycle") {
        CostCircuit c(layers, 3, tiny_channels(),
                      {make_node("m1", 2, GateKind::Or, {"m2"}),
                       make_node("m2", 2, GateKind::Or, {"m1"})});
        CHECK(has_violation(validate(c), "cycle"));
    }
    SUBCASE("gate arity") {
        CostCircuit c(layers, 3, tiny_channels(),
                      {make_node("f", 1, GateKind::Not, {"m", "m"}),
                       make_node("m", 2, GateKind::Or, {}),
                       make_node("a", 4, GateKind::Input, {"m"})});
        auto report = validate(c);
        CHECK(has_violation(report, "not fan-in"));
        CHECK(has_violation(report, "empty gate"));
        CHECK(has_violation(report, "input with children"));
    }
    SUBCASE("input placement") {
        CostCircuit c(layers, 3, tiny_channels(),
                      {make_node("m", 2, GateKind::Input, {}),
                       make_node("a", 4, GateKind::And, {})});
        auto report = validate(c);
        CHECK(has_violation(report, "input above deepest layer"));
        CHECK(has_violation(report, "non-input at deepest layer"));
    }
    SUBCASE("non-AND at or below the selection layer") {
        CostCircuit c(layers, 3, tiny_channels(),
                      {make_node("t", 3, GateKind::Or, {"a"}),
                       make_node("a", 4, GateKind::Input, {})});
        CHECK(has_violation(validate(c), "non-AND below selection layer"));
    }
    SUBCASE("negative cost") {
        Node t = make_node("t", 3, GateKind::And, {"a"});
        t.costs["financial"] = -1.0;
        CostCircuit c(layers, 3, tiny_channels(), {t, make_node("a", 4, GateKind::Input, {})});
        CHECK(has_violation(validate(c), "negative cost"));
    }
    SUBCASE("cost on non-anchor layer") {
        Node a = make_node("a", 4, GateKind::Input, {});
        a.costs["financial"] = 3.0;  // financial is anchored at layer 3
        CostCircuit c(layers, 3, tiny_channels(), {a});
        CHECK(has_violation(validate(c), "cost on non-anchor layer"));
    }
    SUBCASE("wait minutes on the wrong layer") {
        Node a = make_node("a", 4, GateKind::Input, {});
        a.wait_minutes = 10.0;  // wait channel anchored at layer 3
        CostCircuit c(layers, 3, tiny_channels(), {a});
        CHECK(has_violation(validate(c), "wait on non-anchor layer"));
    }
    SUBCASE("channel anchored above the selection layer") {
        CostCircuit c(layers, 3, {{"financial", 2, Aggregation::Sum, "dollars"}},
                      {make_node("a", 4, GateKind::Input, {})});
        CHECK(has_violation(validate(c), "anchor above selection layer"));
    }
    SUBCASE("more than one MAX channel") {
        CostCircuit c(layers, 3,
                      {{"wait", 3, Aggregation::Max, "minutes"},
                       {"wait2", 3, Aggregation::Max, "minutes"}},
                      {make_node("a", 4, GateKind::Input, {})});
        CHECK(has_violation(validate(c), "multiple wait channels"));
    }
}

TEST_CASE("random circuits from the test generator always validate") {
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
        auto c = oracles::random_circuit(rng);
        auto report = validate(c);
        CAPTURE(report.summary());
        REQUIRE(report.ok());
    }
}

TEST_CASE("filter_by_wait drops slow tests and everything stranded") {
    CostCircuit c = tiny();

    SUBCASE("cap 50 keeps everything") {
        CostCircuit f = filter_by_wait(c, 50.0);
        CHECK(f.nodes().size() == 7);
        CHECK(validate(f).ok());
    }
    SUBCASE("cap 30 removes cmp but keeps both features via bmp") {
        CostCircuit f = filter_by_wait(c, 30.0);
        CHECK(validate(f).ok());
        CHECK_FALSE(f.has_node("cmp"));
        CHECK(f.has_node("bmp"));
        CHECK(f.has_node("f1"));
        CHECK(f.has_node("f2"));
        auto form = reduce(f);
        CHECK(form.way_counts.at("f1") == 1);
        CHECK(form.way_counts.at("f2") == 1);
        CHECK(form.way(("f1"), 1).selection_nodes == std::vector<std::string>{"bmp"});
    }
    SUBCASE("cap 0 strands the whole graph") {
        CostCircuit f = filter_by_wait(c, 0.0);
        CHECK_FALSE(f.has_node("bmp"));
        CHECK_FALSE(f.has_node("cmp"));
        CHECK_FALSE(f.has_node("f1"));
        CHECK_FALSE(f.has_node("f2"));
    }
    SUBCASE("missing wait_minutes counts as zero") {
        auto nodes = c.nodes();
        for (auto& n : nodes)
            if (n.id == "bmp") n.wait_minutes.reset();
        CostCircuit patched(c.layer_names(), c.selection_layer(), c.channels(), nodes);
        CostCircuit f = filter_by_wait(patched, 0.0);
        CHECK(f.has_node("bmp"));
        CHECK(f.has_node("f1"));
    }
}

TEST_CASE("filtered circuits stay valid and lose only slow ways") {
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        auto c = oracles::random_circuit(rng);
        // Random circuits carry no wait channel; attach one with waits equal
        // to each selection node's financial cost so the cap is meaningful.
        auto channels = c.channels();
        channels.push_back({"wait", c.selection_layer(), Aggregation::Max, "minutes"});
        auto nodes = c.nodes();
        for (auto& n : nodes)
            if (n.layer == c.selection_layer()) n.wait_minutes = n.costs.at("financial");
        CostCircuit waited(c.layer_names(), c.selection_layer(), channels, nodes);
        REQUIRE(validate(waited).ok());

        CostCircuit f = filter_by_wait(waited, 15.0);
        auto report = validate(f);
        CAPTURE(report.summary());
        CHECK(report.ok());
        for (const auto& n : f.nodes())
            if (n.layer == f.selection_layer()) CHECK(*n.wait_minutes <= 15.0);
    }
}

TEST_CASE("circuit JSON round-trips") {
    CostCircuit c = tiny();
    std::string text = circuit_to_json(c);
    CostCircuit back = parse_circuit(text);
    CHECK(circuit_to_json(back) == text);
    CHECK(back.nodes().size() == c.nodes().size());
    CHECK(back.selection_layer() == c.selection_layer());
}

TEST_CASE("malformed circuit JSON raises") {
    CHECK_THROWS_AS(parse_circuit("{"), error);
    CHECK_THROWS_AS(parse_circuit(R"({"version":1})"), error);
    CHECK_THROWS_AS(parse_circuit(
                        R"({"version":1,"layers":["a"],"selection_layer":1,"channels":[],
                           "nodes":[{"id":"x","layer":1,"gate":"nand","children":[]}]})"),
                    error);
}
