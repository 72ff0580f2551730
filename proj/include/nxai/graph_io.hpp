#pragma once

#include "nxai/graph.hpp"

#include <filesystem>

namespace nxai {

/// Reads a graph stored in the interchange directory layout:
///
///   meta.json     {"name", "num_nodes", "num_features", "num_classes", "has_self_loops"}
///   features.csv  one row per node, num_features comma-separated floats
///   edges.csv     rows "source,target"
///   labels.csv    rows "node,class"
///   masks.csv     rows "node,train|val|test"
///
/// Ids are 0-based decimal integers. Throws GraphError with a code naming
/// the failure (missing file, dimension mismatch, out-of-range id, ...).
Graph load_graph(const std::filesystem::path& dir);

/// Writes the canonical form of `g`: shortest round-trip float formatting,
/// LF line endings, labels and masks in node order, edges in stored order.
void save_graph(const Graph& g, const std::filesystem::path& dir);

std::string_view to_string(Split split) noexcept;

} // namespace nxai
