#pragma once

#include <string>

#include "costwise/circuit.hpp"

namespace costwise {

/// Parse a circuit from its JSON text form. The schema (documented in the
/// repo README) is:
///
///   {
///     "version": 1,
///     "layers": ["features", "measurements", "tests", "activities"],
///     "selection_layer": 3,
///     "channels": [
///       {"name": "financial", "anchor_layer": 3, "aggregation": "sum", "unit": "dollars"}
///     ],
///     "nodes": [
///       {"id": "f1", "layer": 1, "gate": "or", "children": ["cr"],
///        "costs": {"financial": 10}, "wait_minutes": 30}
///     ]
///   }
///
/// Edges that skip layers are legal in the file; the loader inserts named
/// pass-through OR nodes ("<child>__thru<layer>") so that the in-memory
/// circuit always has adjacent-layer edges.
CostCircuit parse_circuit(const std::string& json_text);

CostCircuit load_circuit(const std::string& path);

/// Deterministic pretty-printed JSON (object keys sorted), suitable for
/// byte-identical regression fixtures.
std::string circuit_to_json(const CostCircuit& circuit);

void save_circuit(const std::string& path, const CostCircuit& circuit);

}  // namespace costwise
