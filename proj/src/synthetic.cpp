#include "nxai/synthetic.hpp"

#include "nxai/rng.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

namespace nxai {

namespace {

void add_undirected(std::set<Edge>& edges, NodeId a, NodeId b) {
    edges.insert({a, b});
    edges.insert({b, a});
}

std::vector<Edge> finish_edges(const std::set<Edge>& edges, std::size_t n, bool self_loops) {
    std::vector<Edge> out;
    for (const auto& e : edges) {
        if (e.source != e.target) {
            out.push_back(e);
        }
    }
    if (self_loops) {
        for (NodeId v = 0; v < n; ++v) {
            out.push_back({v, v});
        }
        std::sort(out.begin(), out.end());
    }
    return out;
}

std::vector<Split> random_splits(std::size_t n, double train, double val, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Split> splits(n, Split::Test);
    const auto n_train = static_cast<std::size_t>(train * static_cast<double>(n));
    const auto n_val = static_cast<std::size_t>(val * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n_train) {
            splits[order[i]] = Split::Train;
        } else if (i < n_train + n_val) {
            splits[order[i]] = Split::Val;
        }
    }
    return splits;
}

} // namespace

Gadget make_gadget() {
    //   5 - 3 - 0 - 2 - 4
    //           |
    //           1
    const DenseMatrix features = DenseMatrix::from_rows({
        {1.0, 0.0, 0.5, 0.0},
        {0.0, 1.0, 0.0, 0.8},
        {0.6, 0.0, 1.0, 0.0},
        {0.0, 0.4, 0.0, 1.0},
        {1.0, 1.0, 0.0, 0.0},
        {0.0, 0.0, 1.0, 1.0},
    });
    std::set<Edge> edges;
    add_undirected(edges, 0, 1);
    add_undirected(edges, 0, 2);
    add_undirected(edges, 0, 3);
    add_undirected(edges, 2, 4);
    add_undirected(edges, 3, 5);
    std::vector<Split> splits(6, Split::Train);
    splits[0] = Split::Test;
    Graph g("gadget", features, finish_edges(edges, 6, false), {0, 1, 0, 1, 0, 1}, splits, 2, false);
    return Gadget{std::move(g), 0, 1};
}

Graph make_random_graph(const RandomGraphConfig& c) {
    Rng rng = make_rng(c.seed, "random-graph");
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::bernoulli_distribution coin(c.edge_probability);
    std::uniform_int_distribution<std::size_t> cls(0, c.num_classes - 1);

    DenseMatrix features(c.num_nodes, c.num_features);
    for (double& v : features.data()) {
        v = gauss(rng);
    }
    std::set<Edge> edges;
    for (NodeId a = 0; a < c.num_nodes; ++a) {
        for (NodeId b = c.undirected ? a + 1 : 0; b < c.num_nodes; ++b) {
            if (a == b || !coin(rng)) {
                continue;
            }
            if (c.undirected) {
                add_undirected(edges, a, b);
            } else {
                edges.insert({a, b});
            }
        }
    }
    std::vector<std::size_t> labels(c.num_nodes);
    for (auto& l : labels) {
        l = cls(rng);
    }
    auto splits = random_splits(c.num_nodes, 0.4, 0.2, rng);
    return Graph("random", std::move(features), finish_edges(edges, c.num_nodes, c.self_loops), std::move(labels),
                 std::move(splits), c.num_classes, c.self_loops);
}

Graph make_planted_motif_graph(const PlantedMotifConfig& c) {
    Rng rng = make_rng(c.seed, "planted-motif");
    std::normal_distribution<double> gauss(0.0, c.noise);
    const std::size_t n_base = c.num_classes * c.base_nodes_per_class;
    const std::size_t n = n_base * (1 + c.pendants_per_node);

    std::vector<std::size_t> labels(n);
    for (NodeId v = 0; v < n_base; ++v) {
        labels[v] = v % c.num_classes;
    }
    // Pendants of base node b occupy ids n_base + b*P ... n_base + b*P + P - 1.
    for (NodeId b = 0; b < n_base; ++b) {
        for (std::size_t p = 0; p < c.pendants_per_node; ++p) {
            labels[n_base + b * c.pendants_per_node + p] = labels[b];
        }
    }

    const std::size_t block = std::max<std::size_t>(1, c.num_features / c.num_classes);
    DenseMatrix features(n, c.num_features);
    for (NodeId v = 0; v < n; ++v) {
        for (std::size_t j = 0; j < c.num_features; ++j) {
            const bool in_block = j / block == labels[v];
            features(v, j) = (in_block ? c.signal : 0.0) + gauss(rng);
        }
    }

    std::set<Edge> edges;
    std::bernoulli_distribution same_class(c.homophily);
    std::uniform_int_distribution<std::size_t> any_base(0, n_base - 1);
    std::uniform_int_distribution<std::size_t> within(0, c.base_nodes_per_class - 1);
    for (NodeId a = 0; a < n_base; ++a) {
        for (std::size_t k = 0; k < c.base_degree; ++k) {
            NodeId b = 0;
            if (same_class(rng)) {
                b = within(rng) * c.num_classes + labels[a];
            } else {
                b = any_base(rng);
            }
            if (b != a) {
                add_undirected(edges, a, b);
            }
        }
    }
    for (NodeId b = 0; b < n_base; ++b) {
        for (std::size_t p = 0; p < c.pendants_per_node; ++p) {
            add_undirected(edges, b, n_base + b * c.pendants_per_node + p);
        }
    }
    auto splits = random_splits(n, c.train_fraction, c.val_fraction, rng);
    return Graph("planted-motif", std::move(features), finish_edges(edges, n, c.self_loops), std::move(labels),
                 std::move(splits), c.num_classes, c.self_loops);
}

Graph make_carrier_star_graph(const CarrierStarConfig& c) {
    Rng rng = make_rng(c.seed, "carrier-star");
    std::normal_distribution<double> gauss(0.0, c.noise);
    std::uniform_int_distribution<std::size_t> cls(0, c.num_classes - 1);
    const std::size_t stride = c.decoys + 2;
    const std::size_t n = c.num_centers * stride;

    DenseMatrix features(n, c.num_features);
    for (double& v : features.data()) {
        v = gauss(rng);
    }
    std::vector<std::size_t> labels(n, 0);
    std::vector<Split> splits(n, Split::None);
    std::set<Edge> edges;
    const std::size_t block = std::max<std::size_t>(1, c.num_features / c.num_classes);
    for (std::size_t b = 0; b < c.num_centers; ++b) {
        const NodeId center = b * stride;
        const std::size_t label = cls(rng);
        for (std::size_t k = 0; k < stride; ++k) {
            labels[center + k] = label;
        }
        for (std::size_t j = label * block; j < (label + 1) * block && j < c.num_features; ++j) {
            features(center + 1, j) += c.signal;
        }
        for (std::size_t k = 1; k < stride; ++k) {
            add_undirected(edges, center, center + k);
        }
    }
    std::vector<std::size_t> order(c.num_centers);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(c.num_centers);
        splits[order[i] * stride] = u < 0.5 ? Split::Train : (u < 0.6 ? Split::Val : Split::Test);
    }
    return Graph("carrier-star", std::move(features), finish_edges(edges, n, c.self_loops), std::move(labels),
                 std::move(splits), c.num_classes, c.self_loops);
}

Graph make_separable_graph() {
    DenseMatrix features(10, 2);
    std::vector<std::size_t> labels(10);
    std::vector<Split> splits(10);
    std::set<Edge> edges;
    for (NodeId v = 0; v < 10; ++v) {
        const std::size_t cls = v < 5 ? 0 : 1;
        labels[v] = cls;
        const double jitter = 0.1 * static_cast<double>(v % 5);
        features(v, cls) = 1.0 + jitter;
        features(v, 1 - cls) = 0.1 * jitter;
        splits[v] = (v % 5) < 2 ? Split::Train : ((v % 5) == 2 ? Split::Val : Split::Test);
        if (v % 5 != 4) {
            add_undirected(edges, v, v + 1);
        }
    }
    return Graph("separable", std::move(features), finish_edges(edges, 10, true), std::move(labels),
                 std::move(splits), 2, true);
}

} // namespace nxai
