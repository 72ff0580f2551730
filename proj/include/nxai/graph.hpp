#pragma once

#include "nxai/autodiff.hpp"
#include "nxai/error.hpp"
#include "nxai/matrix.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nxai {

using NodeId = std::size_t;

/// Directed edge; messages flow from source to target.
struct Edge {
    NodeId source = 0;
    NodeId target = 0;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class Split : std::uint8_t { None, Train, Val, Test };

enum class GraphErrorCode {
    MissingFile,
    DimensionMismatch,
    OutOfRange,
    Parse,
    NonFinite,
    DuplicateEdge,
    MissingSelfLoop,
};

class GraphError : public Error {
public:
    GraphError(GraphErrorCode code, const std::string& what) : Error(what), code_(code) {}
    GraphErrorCode code() const noexcept { return code_; }

private:
    GraphErrorCode code_;
};

/// Node-classification graph. Immutable after construction; copies share the
/// feature table.
class Graph {
public:
    Graph(std::string name, DenseMatrix features, std::vector<Edge> edges, std::vector<std::size_t> labels,
          std::vector<Split> splits, std::size_t num_classes, bool has_self_loops);

    const std::string& name() const noexcept { return name_; }
    std::size_t num_nodes() const noexcept { return features_->rows(); }
    std::size_t num_features() const noexcept { return features_->cols(); }
    std::size_t num_classes() const noexcept { return num_classes_; }
    bool has_self_loops() const noexcept { return has_self_loops_; }

    const DenseMatrix& features() const noexcept { return *features_; }
    std::shared_ptr<const DenseMatrix> shared_features() const noexcept { return features_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<std::size_t>& labels() const noexcept { return labels_; }
    const std::vector<Split>& splits() const noexcept { return splits_; }

    /// Sources of edges pointing at v, ascending.
    std::span<const NodeId> in_neighbors(NodeId v) const;
    /// Targets of edges leaving v, ascending.
    std::span<const NodeId> out_neighbors(NodeId v) const;
    std::size_t in_degree(NodeId v) const { return in_neighbors(v).size(); }

    bool has_edge(NodeId source, NodeId target) const;
    std::vector<NodeId> nodes_in(Split split) const;

    /// Same graph with a different edge list (features, labels and splits shared).
    Graph with_edges(std::vector<Edge> edges, bool has_self_loops) const;

private:
    Graph() = default;
    void validate_and_index();

    std::string name_;
    std::shared_ptr<const DenseMatrix> features_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> labels_;
    std::vector<Split> splits_;
    std::size_t num_classes_ = 0;
    bool has_self_loops_ = false;

    // CSR adjacency in both directions.
    std::vector<std::size_t> in_offsets_;
    std::vector<NodeId> in_sources_;
    std::vector<std::size_t> out_offsets_;
    std::vector<NodeId> out_targets_;
};

/// Adds (enabled) or strips (disabled) the (v, v) edge of every node. All
/// other edges keep their relative order; added loops are appended in node order.
Graph set_self_loops(const Graph& g, bool enabled);

/// The L-hop computational subgraph of a node: every node with a directed
/// walk of length <= L into the center, together with all edges among them.
/// Nodes are stored in ascending original-id order and addressed by local index.
struct Subgraph {
    NodeId center = 0;
    std::size_t center_local = 0;
    std::size_t hops = 0;
    bool has_self_loops = false;
    /// Original ids of every node, ascending (includes the center).
    std::vector<NodeId> nodes;
    /// Original ids of the receptive field minus the center, ascending.
    std::vector<NodeId> neighbor_ids;
    /// Induced edges in local ids, sorted.
    std::vector<Edge> edges;
    /// Shortest hop count from each local node to the center.
    std::vector<std::size_t> distance;
    /// Number of in-edges each local node receives from outside the node set.
    /// Constant under neighbor deletion, so degree-normalized layers see the
    /// same degrees they would on the whole graph with the victims removed.
    std::vector<double> external_in_degree;
    std::shared_ptr<const DenseMatrix> features;

    std::size_t local_index(NodeId original) const;
    bool contains(NodeId original) const;
    /// Whether local edge e can carry information to the center within `hops` layers.
    bool on_path(const Edge& local_edge) const { return distance[local_edge.target] + 1 <= hops; }
};

Subgraph khop_subgraph(const Graph& g, NodeId center, std::size_t hops);

/// Removes the victims (original ids) and every incident edge. The center is
/// never removed; nodes cut off from the center stay until deleted themselves.
Subgraph delete_neighbors(const Subgraph& sg, std::span<const NodeId> victims);

/// Dense inputs for a forward pass: gathered features plus message edges.
struct ComputeGraph {
    DenseMatrix features;
    std::shared_ptr<const EdgeIndex> edges;
    std::vector<double> external_in_degree;
};

ComputeGraph compute_graph(const Graph& g);
ComputeGraph compute_graph(const Subgraph& sg);

} // namespace nxai
