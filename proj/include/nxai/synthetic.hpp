#pragma once

#include "nxai/graph.hpp"

#include <cstdint>

namespace nxai {

/// A small undirected graph without self-loops built around a classified node
/// and a pendant neighbor whose only edge pair connects it to that node.
struct Gadget {
    Graph graph;
    NodeId classified = 0;
    NodeId pendant = 0;
};

/// Node 0 is classified; node 1 hangs off node 0 only. Nodes 2 and 3 are
/// further neighbors of node 0 with their own second-hop neighbors 4 and 5.
/// Every node has a distinct feature pattern.
Gadget make_gadget();

/// Uniform random directed or undirected graph with Gaussian features,
/// random labels and a random train/val/test split.
struct RandomGraphConfig {
    std::size_t num_nodes = 10;
    std::size_t num_features = 4;
    std::size_t num_classes = 3;
    double edge_probability = 0.3;
    bool undirected = true;
    bool self_loops = false;
    std::uint64_t seed = 0;
};
Graph make_random_graph(const RandomGraphConfig& config);

/// Homophilous community graph with planted pendant motifs.
///
/// Base nodes form a sparse random graph where most edges join nodes of the
/// same class. Each base node additionally carries `pendants_per_node` leaf
/// nodes of its class attached by a single undirected edge. Every node's
/// features are its class prototype scaled by `signal` plus Gaussian noise.
struct PlantedMotifConfig {
    std::size_t num_classes = 3;
    std::size_t base_nodes_per_class = 40;
    std::size_t num_features = 12;
    std::size_t base_degree = 2;
    double homophily = 0.85;
    std::size_t pendants_per_node = 2;
    double signal = 1.0;
    double noise = 0.6;
    double train_fraction = 0.3;
    double val_fraction = 0.2;
    bool self_loops = false;
    std::uint64_t seed = 0;
};
Graph make_planted_motif_graph(const PlantedMotifConfig& config);

/// Star-shaped label carriers: every center node has noise features and is
/// attached to one carrier neighbor whose features encode the center's class
/// and to `decoys` neighbors with pure noise. Only centers are labelled into
/// splits. Node layout per center c (0-based block b): center = b*(decoys+2),
/// carrier = center + 1, decoys follow.
struct CarrierStarConfig {
    std::size_t num_centers = 60;
    std::size_t num_classes = 3;
    std::size_t num_features = 6;
    std::size_t decoys = 3;
    double signal = 2.0;
    double noise = 0.3;
    bool self_loops = true;
    std::uint64_t seed = 0;
};
Graph make_carrier_star_graph(const CarrierStarConfig& config);
inline NodeId carrier_of(NodeId center) { return center + 1; }
inline bool is_center(const CarrierStarConfig& c, NodeId v) { return v % (c.decoys + 2) == 0; }

/// Ten nodes in two classes with linearly separable features, two
/// within-class chains and self-loops; half of each class is used for training.
Graph make_separable_graph();

} // namespace nxai
