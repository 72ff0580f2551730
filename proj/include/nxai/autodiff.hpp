#pragma once

#include "nxai/matrix.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace nxai {

/// Backward rule applied at ReLU nodes. Every other primitive always uses its
/// true derivative.
enum class BackpropMode { Standard, Deconvnet, Guided };

std::string_view to_string(BackpropMode mode) noexcept;

/// Gradient passed through a ReLU whose forward input was `x`, given the
/// upstream gradient `g`.
///   Standard:  g * [x > 0]
///   Deconvnet: g * [g > 0]
///   Guided:    g * [x > 0] * [g > 0]
constexpr double relu_backward(BackpropMode mode, double x, double g) noexcept {
    switch (mode) {
    case BackpropMode::Standard:
        return x > 0.0 ? g : 0.0;
    case BackpropMode::Deconvnet:
        return g > 0.0 ? g : 0.0;
    case BackpropMode::Guided:
        return (x > 0.0 && g > 0.0) ? g : 0.0;
    }
    return 0.0;
}

/// Directed message edges in local ids; messages flow src -> dst.
struct EdgeIndex {
    std::size_t num_nodes = 0;
    std::vector<std::size_t> src;
    std::vector<std::size_t> dst;

    std::size_t num_edges() const noexcept { return src.size(); }
};

/// Handle to a node on a Tape.
struct Var {
    std::size_t id = 0;
};

enum class OpKind {
    Leaf,
    MatMul,
    Add,
    AddRow,
    Relu,
    LeakyRelu,
    Sigmoid,
    Log,
    Mul,
    MulCol,
    MulRow,
    Affine,
    GatherRows,
    EdgeAggregate,
    SegmentSoftmax,
    BlockSumCols,
    HeadMean,
    SoftmaxRows,
    LogSoftmaxRows,
    Pick,
    Sum,
    Mean,
    NllLoss,
};

/// Gradients of a scalar output with respect to every node on a tape.
class Gradients {
public:
    explicit Gradients(std::vector<DenseMatrix> grads) : grads_(std::move(grads)) {}

    const DenseMatrix& operator[](Var v) const { return grads_.at(v.id); }

private:
    std::vector<DenseMatrix> grads_;
};

class Tape;

/// Reverse-mode pass from `output`, which must be 1 x 1. Nodes not upstream
/// of `output` receive zero gradients.
Gradients backward(const Tape& tape, Var output, BackpropMode mode = BackpropMode::Standard);

/// Append-only record of a forward computation. Each call evaluates the
/// primitive eagerly and stores its value so the tape can be replayed in
/// reverse by `backward`. Nodes are topologically ordered by construction.
class Tape {
public:
    Var leaf(DenseMatrix value);
    /// Leaf excluded from differentiation; backward skips work that only feeds it.
    Var constant(DenseMatrix value);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    /// a + broadcast of the 1 x cols row `bias` over every row.
    Var add_row(Var a, Var bias);
    Var relu(Var a);
    Var leaky_relu(Var a, double negative_slope);
    Var sigmoid(Var a);
    Var log(Var a);
    Var mul(Var a, Var b);
    /// Scales row r of `a` by s(r, 0); `s` is rows x 1.
    Var mul_col(Var a, Var s);
    /// Multiplies every row of `a` elementwise by the 1 x cols row `r`.
    Var mul_row(Var a, Var r);
    /// scale * a + shift, elementwise.
    Var affine(Var a, double scale, double shift);
    Var gather_rows(Var a, std::shared_ptr<const std::vector<std::size_t>> rows);

    /// out[dst_e, h*C + c] += coef[e, h] * x[src_e, h*C + c] with H = coef.cols().
    Var edge_aggregate(Var coef, Var x, std::shared_ptr<const EdgeIndex> edges);
    /// Softmax of each column over the edges sharing a destination node.
    Var segment_softmax(Var scores, std::shared_ptr<const EdgeIndex> edges);
    /// Sums each of `blocks` contiguous column groups: rows x (B*C) -> rows x B.
    Var block_sum_cols(Var a, std::size_t blocks);
    /// Averages the `heads` contiguous column groups: rows x (H*C) -> rows x C.
    Var head_mean(Var a, std::size_t heads);

    Var softmax_rows(Var a);
    Var log_softmax_rows(Var a);
    /// 1 x 1 scalar a(row, col).
    Var pick(Var a, std::size_t row, std::size_t col);
    Var sum(Var a);
    Var mean(Var a);
    /// Mean over i of -logp(rows[i], targets[i]).
    Var nll_loss(Var logp, std::vector<std::size_t> rows, std::vector<std::size_t> targets);

    const DenseMatrix& value(Var v) const { return nodes_.at(v.id).value; }
    std::size_t size() const noexcept { return nodes_.size(); }
    OpKind kind(Var v) const { return nodes_.at(v.id).kind; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    std::span<const std::size_t> inputs(Var v) const {
        const auto& n = nodes_.at(v.id);
        return {n.inputs.data(), n.num_inputs};
    }

private:
    friend Gradients backward(const Tape& tape, Var output, BackpropMode mode);

    struct Node {
        OpKind kind = OpKind::Leaf;
        std::array<std::size_t, 2> inputs{};
        std::size_t num_inputs = 0;
        bool requires_grad = true;
        DenseMatrix value;
        double scale = 0.0;
        std::size_t count = 0;
        std::size_t row = 0;
        std::size_t col = 0;
        std::shared_ptr<const EdgeIndex> edges;
        std::shared_ptr<const std::vector<std::size_t>> index;
        std::vector<std::size_t> rows;
        std::vector<std::size_t> targets;
    };

    Var push(Node node);
    const Node& node(Var v) const;

    std::vector<Node> nodes_;
};

} // namespace nxai
