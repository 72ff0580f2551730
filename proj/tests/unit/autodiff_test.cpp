#include "nxai/autodiff.hpp"
#include "nxai/error.hpp"
#include "nxai/graph.hpp"
#include "nxai/model.hpp"
#include "nxai/synthetic.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace nxai;

namespace {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                          double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    DenseMatrix m(rows, cols);
    for (double& v : m.data()) {
        v = u(rng);
    }
    return m;
}

using Builder = std::function<Var(Tape&, Var)>;

// Reduces the op output to a scalar with a fixed random projection so every
// output entry contributes.
double max_relative_error(const Builder& build, DenseMatrix x, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    DenseMatrix projection;
    auto scalar = [&](Tape& tape, Var xv) {
        const Var out = build(tape, xv);
        if (projection.empty()) {
            projection = random_matrix(tape.value(out).rows(), tape.value(out).cols(), rng);
        }
        return tape.sum(tape.mul(out, tape.constant(projection)));
    };
    Tape tape;
    const Var xv = tape.leaf(x);
    const Var y = scalar(tape, xv);
    const DenseMatrix analytic = backward(tape, y)[xv];
    const DenseMatrix numeric = oracle::central_differences(
        [&] {
            Tape t;
            return t.value(scalar(t, t.leaf(x)))(0, 0);
        },
        x, 1e-5);
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic.data()[i];
        const double n = numeric.data()[i];
        worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-4}));
    }
    return worst;
}

std::shared_ptr<const EdgeIndex> small_edges() {
    auto e = std::make_shared<EdgeIndex>();
    e->num_nodes = 4;
    e->src = {0, 1, 2, 3, 1, 2};
    e->dst = {1, 1, 1, 0, 3, 3};
    return e;
}

} // namespace

TEST(ReluBackward, ExamplesFromRuleDefinition) {
    EXPECT_EQ(relu_backward(BackpropMode::Standard, -1.0, 2.0), 0.0);
    EXPECT_EQ(relu_backward(BackpropMode::Deconvnet, -1.0, 2.0), 2.0);
    EXPECT_EQ(relu_backward(BackpropMode::Guided, 3.0, -2.0), 0.0);
}

TEST(ReluBackward, SignGrid) {
    for (double x : {-2.0, -0.0, 0.0, 1.5}) {
        for (double g : {-3.0, 0.0, 0.5}) {
            EXPECT_EQ(relu_backward(BackpropMode::Standard, x, g), x > 0 ? g : 0.0);
            EXPECT_EQ(relu_backward(BackpropMode::Deconvnet, x, g), g > 0 ? g : 0.0);
            EXPECT_EQ(relu_backward(BackpropMode::Guided, x, g), (x > 0 && g > 0) ? g : 0.0);
        }
    }
}

TEST(Backward, LinearMapGradientIsWeightVector) {
    Tape tape;
    const Var x = tape.leaf(DenseMatrix::from_rows({{0.3}, {-7.0}, {2.5}}));
    const Var w = tape.constant(DenseMatrix::from_rows({{1.0, -2.0, 3.0}}));
    const Var y = tape.matmul(w, x);
    const DenseMatrix g = backward(tape, y)[x];
    EXPECT_EQ(g, DenseMatrix::from_rows({{1.0}, {-2.0}, {3.0}}));
}

TEST(Backward, DoubleReluDeconvnetPassesPositiveUpstream) {
    Tape tape;
    const Var x = tape.leaf(DenseMatrix::from_rows({{-1.0}}));
    const Var y = tape.relu(tape.relu(x));
    EXPECT_EQ(backward(tape, y, BackpropMode::Deconvnet)[x](0, 0), 1.0);
    EXPECT_EQ(backward(tape, y, BackpropMode::Standard)[x](0, 0), 0.0);
}

TEST(Backward, RejectsNonScalarOutput) {
    Tape tape;
    const Var x = tape.leaf(DenseMatrix(2, 2, 1.0));
    EXPECT_THROW(backward(tape, x), ShapeError);
}

TEST(Backward, UnreachedLeavesGetZeroGradient) {
    Tape tape;
    const Var x = tape.leaf(DenseMatrix(2, 3, 1.0));
    const Var unused = tape.leaf(DenseMatrix(1, 2, 5.0));
    const Var y = tape.sum(x);
    const Gradients g = backward(tape, y);
    EXPECT_EQ(g[unused], DenseMatrix(1, 2, 0.0));
}

TEST(Backward, PrimitivesMatchFiniteDifferences) {
    std::mt19937_64 rng(7);
    const auto edges = small_edges();
    const DenseMatrix coef = random_matrix(edges->num_edges(), 2, rng);
    const DenseMatrix w = random_matrix(3, 4, rng);
    const DenseMatrix row = random_matrix(1, 4, rng);
    const DenseMatrix scale = random_matrix(4, 1, rng);
    const DenseMatrix left = random_matrix(2, 4, rng);
    const DenseMatrix col = random_matrix(3, 1, rng);
    const DenseMatrix rows4 = random_matrix(4, 2, rng);
    const DenseMatrix values = random_matrix(4, 4, rng);
    const DenseMatrix att = random_matrix(3, 2, rng);
    auto sources = std::make_shared<const std::vector<std::size_t>>(edges->src);
    auto rows = std::make_shared<const std::vector<std::size_t>>(std::vector<std::size_t>{2, 0, 2, 3});

    const std::vector<std::pair<const char*, Builder>> cases = {
        {"matmul", [&](Tape& t, Var x) { return t.matmul(x, t.constant(w)); }},
        {"matmul-right", [&](Tape& t, Var x) { return t.matmul(t.constant(left), t.matmul(x, t.constant(w))); }},
        {"add_row", [&](Tape& t, Var x) { return t.add_row(t.matmul(x, t.constant(w)), t.constant(row)); }},
        {"leaky_relu", [&](Tape& t, Var x) { return t.leaky_relu(x, 0.2); }},
        {"sigmoid", [&](Tape& t, Var x) { return t.sigmoid(x); }},
        {"log", [&](Tape& t, Var x) { return t.log(t.affine(t.sigmoid(x), 1.0, 0.1)); }},
        {"mul", [&](Tape& t, Var x) { return t.mul(x, t.sigmoid(x)); }},
        {"mul_col", [&](Tape& t, Var x) { return t.mul_col(t.matmul(x, t.constant(w)), t.constant(scale)); }},
        {"mul_col-scale", [&](Tape& t, Var x) {
             return t.mul_col(t.constant(rows4), t.matmul(x, t.constant(col)));
         }},
        {"mul_row", [&](Tape& t, Var x) { return t.mul_row(t.matmul(x, t.constant(w)), t.constant(row)); }},
        {"gather_rows", [&](Tape& t, Var x) { return t.gather_rows(x, rows); }},
        {"edge_aggregate", [&](Tape& t, Var x) {
             return t.edge_aggregate(t.constant(coef), t.matmul(x, t.constant(w)), edges);
         }},
        {"edge_aggregate-coef", [&](Tape& t, Var x) {
             const Var c = t.block_sum_cols(t.gather_rows(t.matmul(x, t.constant(w)), sources), 2);
             return t.edge_aggregate(c, t.constant(values), edges);
         }},
        {"segment_softmax", [&](Tape& t, Var x) {
             const Var s = t.gather_rows(t.matmul(x, t.constant(att)), sources);
             return t.segment_softmax(s, edges);
         }},
        {"block_sum_cols", [&](Tape& t, Var x) { return t.block_sum_cols(t.matmul(x, t.constant(w)), 2); }},
        {"head_mean", [&](Tape& t, Var x) { return t.head_mean(t.matmul(x, t.constant(w)), 2); }},
        {"softmax_rows", [&](Tape& t, Var x) { return t.softmax_rows(x); }},
        {"log_softmax_rows", [&](Tape& t, Var x) { return t.log_softmax_rows(x); }},
        {"pick", [&](Tape& t, Var x) { return t.pick(t.softmax_rows(x), 1, 2); }},
        {"mean", [&](Tape& t, Var x) { return t.mean(t.mul(x, x)); }},
        {"nll_loss", [&](Tape& t, Var x) { return t.nll_loss(t.log_softmax_rows(x), {0, 3, 1}, {2, 0, 1}); }},
    };
    for (const auto& [name, build] : cases) {
        const DenseMatrix x = random_matrix(4, 3, rng);
        EXPECT_LT(max_relative_error(build, x, 11), 1e-6) << name;
    }
}

TEST(Backward, RandomGcnOnFiveNodesMatchesFiniteDifferences) {
    RandomGraphConfig rc;
    rc.num_nodes = 5;
    rc.num_features = 3;
    rc.num_classes = 2;
    rc.edge_probability = 0.5;
    rc.self_loops = true;
    rc.seed = 3;
    const Graph g = make_random_graph(rc);
    const TrainedModel model = oracle::random_model(Architecture::GCN, 3, 2, true, 4);
    const ComputeGraph cg = compute_graph(g);

    auto scalar = [&](Tape& t, Var x) { return t.sum(t.mul(model.record(t, x, cg).logits,
                                                           t.constant(DenseMatrix(5, 2, 0.7)))); };
    Tape tape;
    const Var x = tape.leaf(cg.features);
    const DenseMatrix analytic = backward(tape, scalar(tape, x))[x];
    DenseMatrix features = cg.features;
    const DenseMatrix numeric = oracle::central_differences(
        [&] {
            Tape t;
            return t.value(scalar(t, t.leaf(features)))(0, 0);
        },
        features, 1e-5);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic.data()[i];
        const double n = numeric.data()[i];
        EXPECT_LT(std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-4}), 1e-4);
    }
}

TEST(Backward, ModesAgreeBitwiseWithoutRelu) {
    std::mt19937_64 rng(5);
    const auto edges = small_edges();
    Tape tape;
    const Var x = tape.leaf(random_matrix(4, 3, rng));
    const Var h = tape.leaky_relu(tape.matmul(x, tape.constant(random_matrix(3, 4, rng))), 0.2);
    const Var a = tape.edge_aggregate(tape.constant(random_matrix(6, 1, rng)), h, edges);
    const Var y = tape.pick(tape.log_softmax_rows(a), 1, 2);
    const DenseMatrix standard = backward(tape, y, BackpropMode::Standard)[x];
    EXPECT_EQ(backward(tape, y, BackpropMode::Deconvnet)[x], standard);
    EXPECT_EQ(backward(tape, y, BackpropMode::Guided)[x], standard);
}

TEST(Backward, GuidedNonzeroOnlyWhereStandardAndDeconvnetAre) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        Tape tape;
        const Var x = tape.leaf(random_matrix(5, 3, rng));
        const Var pre = tape.matmul(x, tape.constant(random_matrix(3, 6, rng)));
        const Var post = tape.relu(pre);
        const Var y = tape.sum(tape.mul(post, tape.constant(random_matrix(5, 6, rng))));
        const DenseMatrix s = backward(tape, y, BackpropMode::Standard)[pre];
        const DenseMatrix d = backward(tape, y, BackpropMode::Deconvnet)[pre];
        const DenseMatrix g = backward(tape, y, BackpropMode::Guided)[pre];
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.data()[i] != 0.0) {
                EXPECT_NE(s.data()[i], 0.0);
                EXPECT_NE(d.data()[i], 0.0);
            }
        }
    }
}

TEST(Backward, Deterministic) {
    const Graph g = make_gadget().graph;
    const TrainedModel model = oracle::random_model(Architecture::GATv2, g.num_features(), 2, false, 2, 4, 2);
    const ComputeGraph cg = compute_graph(g);
    Tape tape;
    const Var x = tape.leaf(cg.features);
    const Var y = tape.pick(model.record(tape, x, cg).logits, 0, 1);
    for (BackpropMode mode : {BackpropMode::Standard, BackpropMode::Deconvnet, BackpropMode::Guided}) {
        EXPECT_EQ(backward(tape, y, mode)[x], backward(tape, y, mode)[x]);
    }
}
