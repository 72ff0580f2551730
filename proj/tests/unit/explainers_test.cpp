#include "nxai/explainers.hpp"
#include "nxai/rng.hpp"
#include "nxai/synthetic.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace nxai;

namespace {

Graph with_features(const Graph& g, DenseMatrix x) {
    return Graph(g.name(), std::move(x), g.edges(), g.labels(), g.splits(), g.num_classes(), g.has_self_loops());
}

Graph small_random_graph(std::uint64_t seed, bool loops, std::size_t n = 9) {
    RandomGraphConfig c;
    c.num_nodes = n;
    c.num_features = 4;
    c.num_classes = 3;
    c.edge_probability = 0.3;
    c.undirected = seed % 2 == 0;
    c.self_loops = loops;
    c.seed = seed;
    return make_random_graph(c);
}

// Every weight positive and large first-layer biases keep each ReLU input and
// each upstream gradient positive for nonnegative features.
TrainedModel positive_gcn(std::size_t in, std::size_t classes, bool loops, std::uint64_t seed) {
    TrainedModel m = oracle::random_model(Architecture::GCN, in, classes, loops, seed, 5);
    for (auto& p : m.mutable_parameters()) {
        for (double& v : p.value.data()) {
            v = std::abs(v) + 0.05;
        }
    }
    m.parameter("conv1.bias").fill(3.0);
    return m;
}

DenseMatrix nonnegative(const Graph& g) {
    DenseMatrix x = g.features();
    for (double& v : x.data()) {
        v = std::abs(v);
    }
    return x;
}

void expect_normalized(const Explanation& e) {
    double top = 0.0;
    bool any = false;
    for (const auto& [node, score] : e.importance) {
        EXPECT_GE(score, 0.0);
        EXPECT_LE(score, 1.0);
        top = std::max(top, score);
        any = any || std::abs(e.raw.at(node)) > 1e-12;
    }
    if (any) {
        EXPECT_EQ(top, 1.0);
    } else {
        EXPECT_EQ(top, 0.0);
    }
    EXPECT_FALSE(e.importance.contains(e.target));
}

} // namespace

TEST(Saliency, ZeroWeightsGiveZeroScores) {
    const Graph g = small_random_graph(1, true);
    TrainedModel m = oracle::random_model(Architecture::GCN, 4, 3, true, 1);
    for (auto& p : m.mutable_parameters()) {
        p.value.fill(0.0);
    }
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        const Explanation e = saliency(m, g, v);
        EXPECT_EQ(e.importance.size(), oracle::bfs_receptive_field(g, v, 2).size());
        for (const auto& [node, score] : e.importance) {
            EXPECT_EQ(score, 0.0);
            EXPECT_EQ(e.raw.at(node), 0.0);
        }
        EXPECT_TRUE(nonzero_neighbors(e).empty());
    }
}

TEST(Saliency, MatchesFiniteDifferenceOnLinearGcn) {
    const Graph base("line", DenseMatrix::from_rows({{0.5, 1.0, 0.2}, {0.1, 0.7, 0.9}, {1.2, 0.3, 0.4}}),
                     {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {0, 0}, {1, 1}, {2, 2}}, {0, 1, 0},
                     {Split::Train, Split::Test, Split::Train}, 2, true);
    const TrainedModel m = positive_gcn(3, 2, true, 4);
    for (NodeId k = 0; k < 3; ++k) {
        const Explanation e = saliency(m, base, k);
        DenseMatrix x = base.features();
        const DenseMatrix grad = oracle::central_differences(
            [&] { return oracle::whole_graph_prediction(m, with_features(base, x), k).logits[e.predicted_class]; }, x,
            1e-6);
        for (const auto& [node, raw] : e.raw) {
            double mean = 0.0;
            for (std::size_t f = 0; f < 3; ++f) {
                mean += std::abs(grad(node, f)) / 3.0;
            }
            EXPECT_NEAR(raw, mean, 1e-7) << k << " " << node;
        }
        expect_normalized(e);
    }
}

TEST(Saliency, GadgetPendantHasZeroScore) {
    const Gadget gadget = make_gadget();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const TrainedModel m = oracle::random_model(Architecture::GCN, gadget.graph.num_features(), 2, false, seed);
        SmoothGradConfig sg = SmoothGradConfig::defaults(gadget.graph, seed);
        sg.n = 5;
        for (const Explanation& e :
             {saliency(m, gadget.graph, gadget.classified), deconvnet_explain(m, gadget.graph, gadget.classified),
              guided_explain(m, gadget.graph, gadget.classified), smoothgrad(m, gadget.graph, gadget.classified, sg)}) {
            ASSERT_TRUE(e.raw.contains(gadget.pendant));
            EXPECT_EQ(e.raw.at(gadget.pendant), 0.0) << to_string(e.method);
            const auto order = nonzero_neighbors(e);
            EXPECT_EQ(std::find(order.begin(), order.end(), gadget.pendant), order.end());
        }
    }
}

TEST(GradientModes, AgreeBitwiseWhenEveryReluPasses) {
    const Graph g = small_random_graph(2, true);
    const Graph positive = with_features(g, nonnegative(g));
    const TrainedModel m = positive_gcn(4, 3, true, 2);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        const Explanation s = saliency(m, positive, v);
        EXPECT_EQ(deconvnet_explain(m, positive, v).raw, s.raw);
        EXPECT_EQ(guided_explain(m, positive, v).raw, s.raw);
    }
}

TEST(GradientModes, GuidedScoresVanishWhereSaliencyOrDeconvnetDo) {
    const Graph g = small_random_graph(6, false);
    const TrainedModel m = oracle::random_model(Architecture::GCN, 4, 3, false, 6);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        const Explanation s = saliency(m, g, v);
        const Explanation d = deconvnet_explain(m, g, v);
        const Explanation gd = guided_explain(m, g, v);
        for (const auto& [node, raw] : gd.raw) {
            if (s.raw.at(node) == 0.0 || d.raw.at(node) == 0.0) {
                EXPECT_EQ(raw, 0.0);
            }
        }
    }
}

TEST(SmoothGrad, ZeroSigmaEqualsSaliency) {
    const Graph g = small_random_graph(3, false);
    const TrainedModel m = oracle::random_model(Architecture::GATv2, 4, 3, false, 3, 4, 2);
    for (std::size_t n : {1, 7}) {
        SmoothGradConfig c;
        c.n = n;
        c.sigma = 0.0;
        for (NodeId v = 0; v < g.num_nodes(); ++v) {
            const Explanation a = smoothgrad(m, g, v, c);
            const Explanation b = saliency(m, g, v);
            EXPECT_EQ(a.raw, b.raw);
            EXPECT_EQ(a.importance, b.importance);
        }
    }
}

TEST(SmoothGrad, SingleSampleIsSaliencyAtTheNoisyPoint) {
    const Graph g = small_random_graph(4, true);
    const TrainedModel m = oracle::random_model(Architecture::GCN, 4, 3, true, 4);
    SmoothGradConfig c;
    c.n = 1;
    c.sigma = 0.05;
    c.seed = 17;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        const Subgraph sg = khop_subgraph(g, v, 2);
        Rng rng = make_rng(c.seed, "smoothgrad/" + std::to_string(v));
        std::normal_distribution<double> noise(0.0, c.sigma);
        DenseMatrix x = g.features();
        for (NodeId u : sg.nodes) {
            for (std::size_t f = 0; f < x.cols(); ++f) {
                x(u, f) += noise(rng);
            }
        }
        const Explanation noisy = saliency(m, with_features(g, x), v);
        const Explanation e = smoothgrad(m, g, v, c);
        ASSERT_EQ(noisy.predicted_class, e.predicted_class);
        for (const auto& [node, raw] : e.raw) {
            EXPECT_NEAR(raw, noisy.raw.at(node), 1e-12);
        }
    }
}

TEST(SmoothGrad, LinearRegimeConvergesToSaliency) {
    const Graph g = small_random_graph(5, true);
    const Graph positive = with_features(g, nonnegative(g));
    const TrainedModel m = positive_gcn(4, 3, true, 5);
    SmoothGradConfig c = SmoothGradConfig::defaults(positive, 2);
    c.n = 200;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        const Explanation a = smoothgrad(m, positive, v, c);
        const Explanation b = saliency(m, positive, v);
        for (const auto& [node, raw] : b.raw) {
            EXPECT_NEAR(a.raw.at(node), raw, 1e-9 * std::max(1.0, raw));
        }
    }
}

TEST(SmoothGrad, DeterministicAndValidated) {
    const Graph g = small_random_graph(7, true);
    const TrainedModel m = oracle::random_model(Architecture::GCN, 4, 3, true, 7);
    const SmoothGradConfig c = SmoothGradConfig::defaults(g, 3);
    EXPECT_EQ(c.n, 50u);
    EXPECT_GT(c.sigma, 0.0);
    EXPECT_EQ(smoothgrad(m, g, 2, c).raw, smoothgrad(m, g, 2, c).raw);
    SmoothGradConfig bad = c;
    bad.n = 0;
    EXPECT_THROW(smoothgrad(m, g, 2, bad), ConfigError);
    bad = c;
    bad.sigma = -1.0;
    EXPECT_THROW(smoothgrad(m, g, 2, bad), ConfigError);
}

TEST(NonzeroNeighbors, OrderAndTies) {
    Explanation e;
    e.target = 9;
    e.raw = {{1, 0.5}, {2, 0.5}, {3, 0.1}, {4, 0.0}};
    e.importance = {{1, 1.0}, {2, 1.0}, {3, 0.2}, {4, 0.0}};
    EXPECT_EQ(nonzero_neighbors(e), (std::vector<NodeId>{1, 2, 3}));
    EXPECT_EQ(nonzero_neighbors(e, Direction::Ascending), (std::vector<NodeId>{3, 1, 2}));
    e.raw = {{1, 0.0}, {2, 1e-13}};
    EXPECT_TRUE(nonzero_neighbors(e).empty());
}

TEST(Normalize, ByMaxAndMinMax) {
    EXPECT_EQ(normalize_by_max({{1, 2.0}, {2, 1.0}, {3, 0.0}}), (std::map<NodeId, double>{{1, 1.0}, {2, 0.5}, {3, 0.0}}));
    EXPECT_EQ(normalize_by_max({{1, 0.0}, {2, 0.0}}), (std::map<NodeId, double>{{1, 0.0}, {2, 0.0}}));
    const std::map<NodeId, double> star{{1, 0.9}, {2, 0.2}};
    EXPECT_EQ(normalize_min_max(star, {1, 2}), (std::map<NodeId, double>{{1, 1.0}, {2, 0.0}}));
    EXPECT_EQ(normalize_min_max({{1, -0.3}}, {1}), (std::map<NodeId, double>{{1, 1.0}}));
    EXPECT_EQ(normalize_min_max({{1, -0.3}, {2, 0.0}}, {1}), (std::map<NodeId, double>{{1, 1.0}, {2, 0.0}}));
}

TEST(Explanations, AreNormalizedForEveryMethod) {
    for (bool loops : {false, true}) {
        const Graph g = small_random_graph(8, loops);
        const TrainedModel m = oracle::random_model(Architecture::GCN, 4, 3, loops, 8);
        PGExplainerConfig pc;
        pc.epochs = 3;
        const PGExplainerModel pgm = pgexplainer_train(m, g, g.nodes_in(Split::Train), pc);
        ExplainerSettings settings;
        settings.smoothgrad = SmoothGradConfig::defaults(g);
        settings.smoothgrad.n = 4;
        settings.gnnexplainer.epochs = 10;
        settings.pgexplainer = &pgm;
        for (Method method : all_methods()) {
            for (NodeId v = 0; v < g.num_nodes(); ++v) {
                const Explanation e = explain(method, m, g, v, settings);
                EXPECT_EQ(e.method, method);
                std::vector<NodeId> keys;
                for (const auto& [node, score] : e.importance) {
                    keys.push_back(node);
                }
                EXPECT_EQ(keys, oracle::bfs_receptive_field(g, v, 2));
                expect_normalized(e);
            }
        }
    }
}

TEST(Explanations, ParallelMatchesSerial) {
    const Graph g = small_random_graph(9, true, 14);
    const TrainedModel m = oracle::random_model(Architecture::GATv2, 4, 3, true, 9, 4, 2);
    ExplainerSettings settings;
    settings.smoothgrad = SmoothGradConfig::defaults(g);
    settings.smoothgrad.n = 3;
    settings.gnnexplainer.epochs = 5;
    std::vector<NodeId> nodes(g.num_nodes());
    std::iota(nodes.begin(), nodes.end(), 0);
    for (Method method : {Method::SmoothGrad, Method::GNNExplainer}) {
        const auto serial = explain_all(method, m, g, nodes, settings, 1);
        const auto parallel = explain_all(method, m, g, nodes, settings, 3);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            EXPECT_EQ(serial[i].target, nodes[i]);
            EXPECT_EQ(serial[i].raw, parallel[i].raw);
        }
    }
}

TEST(GnnExplainer, LossNeverIncreases) {
    const Graph g = small_random_graph(10, false);
    const TrainedModel m = oracle::random_model(Architecture::GCN, 4, 3, false, 10);
    MaskTrainConfig c;
    c.learning_rate = 0.5;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        MaskTrace trace;
        gnnexplainer(m, g, v, c, &trace);
        ASSERT_FALSE(trace.losses.empty());
        for (std::size_t i = 1; i < trace.losses.size(); ++i) {
            EXPECT_LE(trace.losses[i], trace.losses[i - 1]);
        }
        EXPECT_LE(trace.losses.back(), trace.losses.front());
    }
}

TEST(GnnExplainer, ZeroEpochsKeepsInitialMask) {
    const Graph g = small_random_graph(11, true);
    const TrainedModel m = oracle::random_model(Architecture::GCN, 4, 3, true, 11);
    MaskTrainConfig c;
    c.epochs = 0;
    c.seed = 5;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        MaskTrace trace;
        const Explanation e = gnnexplainer(m, g, v, c, &trace);
        EXPECT_EQ(trace.losses.size(), 1u);
        const Subgraph sg = khop_subgraph(g, v, 2);
        Rng rng = make_rng(c.seed, "masks/" + std::to_string(v));
        std::normal_distribution<double> init(0.0, c.init_std);
        std::map<NodeId, double> draws;
        for (NodeId u : sg.nodes) {
            draws[u] = init(rng);
        }
        std::vector<NodeId> active;
        for (const auto& [node, raw] : e.raw) {
            if (raw != 0.0) {
                EXPECT_EQ(raw, draws.at(node));
                active.push_back(node);
            }
        }
        EXPECT_EQ(e.importance, normalize_min_max(e.raw, active));
    }
}

TEST(GnnExplainer, SingleNeighborScoresOne) {
    const Graph g("pair", DenseMatrix::from_rows({{0.0, 0.1}, {2.0, -1.0}}), {{1, 0}, {0, 0}, {1, 1}}, {0, 1},
                  {Split::Train, Split::Train}, 2, true);
    const TrainedModel m = oracle::random_model(Architecture::GCN, 2, 2, true, 3);
    const Explanation e = gnnexplainer(m, g, 0, MaskTrainConfig{});
    ASSERT_EQ(e.importance.size(), 1u);
    EXPECT_EQ(e.importance.at(1), 1.0);
}

TEST(GnnExplainer, RanksTheSignalCarrierFirst) {
    const CarrierStarConfig c;
    const Graph g = make_carrier_star_graph(c);
    ModelConfig mc = ModelConfig::defaults(Architecture::GCN);
    mc.self_loops = c.self_loops;
    const TrainedModel m = train(g, mc);
    std::size_t checked = 0;
    std::size_t first = 0;
    for (NodeId center : g.nodes_in(Split::Test)) {
        const Prediction before = oracle::whole_graph_prediction(m, g, center);
        // Single-deletion oracle: the neighbor whose removal moves the predicted probability most.
        NodeId strongest = center;
        double largest = -1.0;
        for (NodeId u : oracle::bfs_receptive_field(g, center, 2)) {
            const Prediction after = oracle::whole_graph_prediction(m, oracle::remove_nodes(g, {u}), center);
            const double shift = std::abs(after.probabilities[before.predicted_class] -
                                          before.probabilities[before.predicted_class]);
            if (shift > largest) {
                largest = shift;
                strongest = u;
            }
        }
        ASSERT_EQ(strongest, carrier_of(center));
        const Explanation e = gnnexplainer(m, g, center, MaskTrainConfig{});
        EXPECT_GT(e.raw.at(carrier_of(center)), 0.0) << center;
        first += nonzero_neighbors(e).front() == carrier_of(center) ? 1 : 0;
        ++checked;
    }
    ASSERT_GT(checked, 0u);
    EXPECT_GE(static_cast<double>(first), 0.9 * static_cast<double>(checked));
}

TEST(PgExplainer, ZeroOutputLayerGivesEqualImportances) {
    const Graph g = small_random_graph(12, true);
    const TrainedModel m = oracle::random_model(Architecture::GCN, 4, 3, true, 12);
    PGExplainerConfig c;
    c.epochs = 0;
    c.zero_init_output = true;
    const PGExplainerModel pgm = pgexplainer_train(m, g, g.nodes_in(Split::Train), c);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        const Explanation e = pgexplainer_explain(pgm, m, g, v);
        for (const auto& [node, score] : e.importance) {
            EXPECT_EQ(score, e.importance.begin()->second);
            EXPECT_EQ(e.raw.at(node), e.raw.begin()->second);
        }
    }
}

TEST(PgExplainer, RawScoreIsMaxOverOutgoingEdges) {
    for (bool loops : {false, true}) {
        const Graph g = small_random_graph(13, loops, 12);
        const TrainedModel m = oracle::random_model(Architecture::GCN, 4, 3, loops, 13);
        PGExplainerConfig c;
        c.epochs = 4;
        c.hidden_dim = 8;
        const PGExplainerModel pgm = pgexplainer_train(m, g, g.nodes_in(Split::Train), c);
        const DenseMatrix z = m.logits(compute_graph(g));
        const DenseMatrix& w0 = pgm.parameters()[0].value;
        const DenseMatrix& b0 = pgm.parameters()[1].value;
        const DenseMatrix& w2 = pgm.parameters()[2].value;
        const double b2 = pgm.parameters()[3].value(0, 0);
        const std::size_t d = z.cols();
        auto mlp = [&](NodeId i, NodeId j, NodeId k) {
            std::vector<double> input;
            for (NodeId id : {i, j, k}) {
                input.insert(input.end(), z.row(id).begin(), z.row(id).end());
            }
            double out = b2;
            for (std::size_t u = 0; u < w0.cols(); ++u) {
                double a = b0(0, u);
                for (std::size_t f = 0; f < 3 * d; ++f) {
                    a += input[f] * w0(f, u);
                }
                out += std::max(0.0, a) * w2(u, 0);
            }
            return out;
        };
        for (NodeId k = 0; k < g.num_nodes(); ++k) {
            const auto field = oracle::bfs_receptive_field(g, k, 2);
            const auto first_ring = oracle::bfs_receptive_field(g, k, 1);
            auto within_one = [&](NodeId j) {
                return j == k || std::find(first_ring.begin(), first_ring.end(), j) != first_ring.end();
            };
            const Explanation e = pgexplainer_explain(pgm, m, g, k);
            for (NodeId i : field) {
                double best = -INFINITY;
                for (NodeId j : g.out_neighbors(i)) {
                    if (within_one(j)) {
                        best = std::max(best, mlp(i, j, k));
                    }
                }
                EXPECT_NEAR(e.raw.at(i), best, 1e-12) << k << " " << i;
            }
        }
    }
}

TEST(PgExplainer, SingleNeighborScoresOne) {
    const Graph g("pair", DenseMatrix::from_rows({{0.0, 0.1}, {2.0, -1.0}}), {{1, 0}, {0, 1}, {0, 0}, {1, 1}},
                  {0, 1}, {Split::Train, Split::Train}, 2, true);
    const TrainedModel m = oracle::random_model(Architecture::GCN, 2, 2, true, 3);
    PGExplainerConfig c;
    c.epochs = 2;
    const PGExplainerModel pgm = pgexplainer_train(m, g, {0, 1}, c);
    EXPECT_EQ(pgexplainer_explain(pgm, m, g, 0).importance.at(1), 1.0);
}

TEST(PgExplainer, RejectsEmbeddingMismatch) {
    const Graph g = small_random_graph(14, true);
    const TrainedModel m = oracle::random_model(Architecture::GCN, 4, 3, true, 14);
    const PGExplainerModel pgm = PGExplainerModel::initialize(PGExplainerConfig{}, 5);
    EXPECT_THROW(pgexplainer_explain(pgm, m, g, 0), ShapeError);
    EXPECT_THROW(pgexplainer_train(m, g, {}, PGExplainerConfig{}), ConfigError);
}

TEST(PgExplainer, PlantedCarrierEdgeGetsTheLargestWeight) {
    const CarrierStarConfig c;
    const Graph g = make_carrier_star_graph(c);
    ModelConfig mc = ModelConfig::defaults(Architecture::GCN);
    mc.self_loops = c.self_loops;
    const TrainedModel m = train(g, mc);
    const PGExplainerModel pgm = pgexplainer_train(m, g, g.nodes_in(Split::Train), PGExplainerConfig{});
    const DenseMatrix z = node_embeddings(m, g);
    for (NodeId k : g.nodes_in(Split::Test)) {
        const double planted = pgm.edge_logit(z, carrier_of(k), k, k);
        for (NodeId i : g.in_neighbors(k)) {
            if (i != k && i != carrier_of(k)) {
                EXPECT_GT(planted, pgm.edge_logit(z, i, k, k)) << k << " " << i;
            }
        }
        const Explanation e = pgexplainer_explain(pgm, m, g, k, z);
        EXPECT_EQ(nonzero_neighbors(e).front(), carrier_of(k));
    }
}
