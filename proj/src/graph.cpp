#include "nxai/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace nxai {

Graph::Graph(std::string name, DenseMatrix features, std::vector<Edge> edges, std::vector<std::size_t> labels,
             std::vector<Split> splits, std::size_t num_classes, bool has_self_loops)
    : name_(std::move(name)),
      features_(std::make_shared<const DenseMatrix>(std::move(features))),
      edges_(std::move(edges)),
      labels_(std::move(labels)),
      splits_(std::move(splits)),
      num_classes_(num_classes),
      has_self_loops_(has_self_loops) {
    validate_and_index();
}

void Graph::validate_and_index() {
    const std::size_t n = features_->rows();
    if (!features_->all_finite()) {
        throw GraphError(GraphErrorCode::NonFinite, "feature matrix contains non-finite values");
    }
    if (labels_.size() != n) {
        throw GraphError(GraphErrorCode::DimensionMismatch,
                         "expected " + std::to_string(n) + " labels, got " + std::to_string(labels_.size()));
    }
    if (splits_.size() != n) {
        throw GraphError(GraphErrorCode::DimensionMismatch,
                         "expected " + std::to_string(n) + " split flags, got " + std::to_string(splits_.size()));
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (labels_[v] >= num_classes_) {
            throw GraphError(GraphErrorCode::OutOfRange, "label " + std::to_string(labels_[v]) + " of node " +
                                                             std::to_string(v) + " exceeds class count " +
                                                             std::to_string(num_classes_));
        }
    }
    for (const auto& e : edges_) {
        if (e.source >= n || e.target >= n) {
            throw GraphError(GraphErrorCode::OutOfRange, "edge (" + std::to_string(e.source) + "," +
                                                             std::to_string(e.target) + ") references a node outside [0," +
                                                             std::to_string(n) + ")");
        }
    }

    std::vector<Edge> sorted = edges_;
    std::sort(sorted.begin(), sorted.end());
    if (auto dup = std::adjacent_find(sorted.begin(), sorted.end()); dup != sorted.end()) {
        throw GraphError(GraphErrorCode::DuplicateEdge,
                         "duplicate edge (" + std::to_string(dup->source) + "," + std::to_string(dup->target) + ")");
    }

    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    for (const auto& e : sorted) {
        ++out_offsets_[e.source + 1];
        ++in_offsets_[e.target + 1];
    }
    for (std::size_t v = 0; v < n; ++v) {
        out_offsets_[v + 1] += out_offsets_[v];
        in_offsets_[v + 1] += in_offsets_[v];
    }
    out_targets_.resize(sorted.size());
    in_sources_.resize(sorted.size());
    std::vector<std::size_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
    std::vector<std::size_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
    // `sorted` is ordered by (source, target), so out lists come out ascending;
    // in lists are filled in ascending source order for the same reason.
    for (const auto& e : sorted) {
        out_targets_[out_fill[e.source]++] = e.target;
        in_sources_[in_fill[e.target]++] = e.source;
    }

    if (has_self_loops_) {
        for (std::size_t v = 0; v < n; ++v) {
            if (!has_edge(v, v)) {
                throw GraphError(GraphErrorCode::MissingSelfLoop,
                                 "graph is flagged with self-loops but node " + std::to_string(v) + " has none");
            }
        }
    }
}

std::span<const NodeId> Graph::in_neighbors(NodeId v) const {
    if (v >= num_nodes()) {
        throw GraphError(GraphErrorCode::OutOfRange, "node " + std::to_string(v) + " out of range");
    }
    return {in_sources_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
}

std::span<const NodeId> Graph::out_neighbors(NodeId v) const {
    if (v >= num_nodes()) {
        throw GraphError(GraphErrorCode::OutOfRange, "node " + std::to_string(v) + " out of range");
    }
    return {out_targets_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
}

bool Graph::has_edge(NodeId source, NodeId target) const {
    const auto out = out_neighbors(source);
    return std::binary_search(out.begin(), out.end(), target);
}

std::vector<NodeId> Graph::nodes_in(Split split) const {
    std::vector<NodeId> out;
    for (std::size_t v = 0; v < splits_.size(); ++v) {
        if (splits_[v] == split) {
            out.push_back(v);
        }
    }
    return out;
}

Graph Graph::with_edges(std::vector<Edge> edges, bool has_self_loops) const {
    Graph g;
    g.name_ = name_;
    g.features_ = features_;
    g.edges_ = std::move(edges);
    g.labels_ = labels_;
    g.splits_ = splits_;
    g.num_classes_ = num_classes_;
    g.has_self_loops_ = has_self_loops;
    g.validate_and_index();
    return g;
}

Graph set_self_loops(const Graph& g, bool enabled) {
    std::vector<Edge> edges;
    edges.reserve(g.edges().size() + (enabled ? g.num_nodes() : 0));
    for (const auto& e : g.edges()) {
        if (enabled || e.source != e.target) {
            edges.push_back(e);
        }
    }
    if (enabled) {
        for (NodeId v = 0; v < g.num_nodes(); ++v) {
            if (!g.has_edge(v, v)) {
                edges.push_back({v, v});
            }
        }
    }
    return g.with_edges(std::move(edges), enabled);
}

std::size_t Subgraph::local_index(NodeId original) const {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), original);
    if (it == nodes.end() || *it != original) {
        throw GraphError(GraphErrorCode::OutOfRange,
                         "node " + std::to_string(original) + " is not part of the subgraph of " + std::to_string(center));
    }
    return static_cast<std::size_t>(it - nodes.begin());
}

bool Subgraph::contains(NodeId original) const { return std::binary_search(nodes.begin(), nodes.end(), original); }

Subgraph khop_subgraph(const Graph& g, NodeId center, std::size_t hops) {
    if (center >= g.num_nodes()) {
        throw GraphError(GraphErrorCode::OutOfRange, "center " + std::to_string(center) + " out of range");
    }
    if (hops == 0) {
        throw ConfigError("khop_subgraph: hop count must be at least 1");
    }
    constexpr std::size_t unreached = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> dist(g.num_nodes(), unreached);
    std::vector<NodeId> visited;
    std::deque<NodeId> queue{center};
    dist[center] = 0;
    visited.push_back(center);
    while (!queue.empty()) {
        const NodeId v = queue.front();
        queue.pop_front();
        if (dist[v] == hops) {
            continue;
        }
        for (NodeId u : g.in_neighbors(v)) {
            if (dist[u] == unreached) {
                dist[u] = dist[v] + 1;
                visited.push_back(u);
                queue.push_back(u);
            }
        }
    }
    std::sort(visited.begin(), visited.end());

    Subgraph sg;
    sg.center = center;
    sg.hops = hops;
    sg.has_self_loops = g.has_self_loops();
    sg.features = g.shared_features();
    sg.nodes = visited;
    sg.center_local = sg.local_index(center);
    sg.distance.reserve(visited.size());
    sg.external_in_degree.reserve(visited.size());
    for (std::size_t local = 0; local < visited.size(); ++local) {
        const NodeId v = visited[local];
        sg.distance.push_back(dist[v]);
        if (v != center) {
            sg.neighbor_ids.push_back(v);
        }
        std::size_t external = 0;
        for (NodeId u : g.in_neighbors(v)) {
            if (dist[u] == unreached) {
                ++external;
            } else {
                sg.edges.push_back({sg.local_index(u), local});
            }
        }
        sg.external_in_degree.push_back(static_cast<double>(external));
    }
    std::sort(sg.edges.begin(), sg.edges.end());
    return sg;
}

Subgraph delete_neighbors(const Subgraph& sg, std::span<const NodeId> victims) {
    std::vector<bool> removed(sg.nodes.size(), false);
    for (NodeId v : victims) {
        if (v == sg.center || !std::binary_search(sg.neighbor_ids.begin(), sg.neighbor_ids.end(), v)) {
            throw GraphError(GraphErrorCode::OutOfRange,
                             "node " + std::to_string(v) + " is not a neighbor in the subgraph of " +
                                 std::to_string(sg.center));
        }
        removed[sg.local_index(v)] = true;
    }
    constexpr std::size_t gone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> remap(sg.nodes.size(), gone);

    Subgraph out;
    out.center = sg.center;
    out.hops = sg.hops;
    out.has_self_loops = sg.has_self_loops;
    out.features = sg.features;
    for (std::size_t local = 0; local < sg.nodes.size(); ++local) {
        if (removed[local]) {
            continue;
        }
        remap[local] = out.nodes.size();
        out.nodes.push_back(sg.nodes[local]);
        out.distance.push_back(sg.distance[local]);
        out.external_in_degree.push_back(sg.external_in_degree[local]);
        if (sg.nodes[local] != sg.center) {
            out.neighbor_ids.push_back(sg.nodes[local]);
        }
    }
    out.center_local = remap[sg.center_local];
    for (const auto& e : sg.edges) {
        if (remap[e.source] != gone && remap[e.target] != gone) {
            out.edges.push_back({remap[e.source], remap[e.target]});
        }
    }
    return out;
}

ComputeGraph compute_graph(const Graph& g) {
    auto edges = std::make_shared<EdgeIndex>();
    edges->num_nodes = g.num_nodes();
    edges->src.reserve(g.edges().size());
    edges->dst.reserve(g.edges().size());
    for (const auto& e : g.edges()) {
        edges->src.push_back(e.source);
        edges->dst.push_back(e.target);
    }
    return ComputeGraph{g.features(), std::move(edges), std::vector<double>(g.num_nodes(), 0.0)};
}

ComputeGraph compute_graph(const Subgraph& sg) {
    auto edges = std::make_shared<EdgeIndex>();
    edges->num_nodes = sg.nodes.size();
    edges->src.reserve(sg.edges.size());
    edges->dst.reserve(sg.edges.size());
    for (const auto& e : sg.edges) {
        edges->src.push_back(e.source);
        edges->dst.push_back(e.target);
    }
    return ComputeGraph{gather_rows(*sg.features, sg.nodes), std::move(edges), sg.external_in_degree};
}

} // namespace nxai
