#include "nxai/autodiff.hpp"

#include "nxai/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nxai {

std::string_view to_string(BackpropMode mode) noexcept {
    switch (mode) {
    case BackpropMode::Standard:
        return "standard";
    case BackpropMode::Deconvnet:
        return "deconvnet";
    case BackpropMode::Guided:
        return "guided";
    }
    return "unknown";
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw ShapeError(what);
    }
}

template <typename F>
DenseMatrix map(const DenseMatrix& a, F f) {
    DenseMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = f(a.data()[i]);
    }
    return out;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

Var Tape::push(Node node) {
    if (node.kind != OpKind::Leaf) {
        node.requires_grad = false;
        for (std::size_t i = 0; i < node.num_inputs; ++i) {
            node.requires_grad = node.requires_grad || nodes_[node.inputs[i]].requires_grad;
        }
    }
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
    if (v.id >= nodes_.size()) {
        throw ShapeError("variable does not belong to this tape");
    }
    return nodes_[v.id];
}

Var Tape::leaf(DenseMatrix value) {
    Node n;
    n.kind = OpKind::Leaf;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::constant(DenseMatrix value) {
    Node n;
    n.kind = OpKind::Leaf;
    n.requires_grad = false;
    n.value = std::move(value);
    return push(std::move(n));
}

#define NXAI_NODE(kind_, a_, b_, nin_, value_) \
    Node n;                                    \
    n.kind = (kind_);                          \
    n.inputs = {(a_).id, (b_).id};             \
    n.num_inputs = (nin_);                     \
    n.value = (value_)

Var Tape::matmul(Var a, Var b) {
    NXAI_NODE(OpKind::MatMul, a, b, 2, nxai::matmul(node(a).value, node(b).value));
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    const auto& av = node(a).value;
    const auto& bv = node(b).value;
    require(av.same_shape(bv), "add: shape mismatch");
    DenseMatrix out = av;
    out += bv;
    NXAI_NODE(OpKind::Add, a, b, 2, std::move(out));
    return push(std::move(n));
}

Var Tape::add_row(Var a, Var bias) {
    const auto& av = node(a).value;
    const auto& bv = node(bias).value;
    require(bv.rows() == 1 && bv.cols() == av.cols(), "add_row: bias must be 1 x cols");
    DenseMatrix out = av;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            r[j] += bv(0, j);
        }
    }
    NXAI_NODE(OpKind::AddRow, a, bias, 2, std::move(out));
    return push(std::move(n));
}

Var Tape::relu(Var a) {
    NXAI_NODE(OpKind::Relu, a, a, 1, map(node(a).value, [](double x) { return x > 0.0 ? x : 0.0; }));
    return push(std::move(n));
}

Var Tape::leaky_relu(Var a, double negative_slope) {
    NXAI_NODE(OpKind::LeakyRelu, a, a, 1,
              map(node(a).value, [s = negative_slope](double x) { return x > 0.0 ? x : s * x; }));
    n.scale = negative_slope;
    return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
    NXAI_NODE(OpKind::Sigmoid, a, a, 1, map(node(a).value, stable_sigmoid));
    return push(std::move(n));
}

Var Tape::log(Var a) {
    NXAI_NODE(OpKind::Log, a, a, 1, map(node(a).value, [](double x) { return std::log(x); }));
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    const auto& av = node(a).value;
    const auto& bv = node(b).value;
    require(av.same_shape(bv), "mul: shape mismatch");
    DenseMatrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data()[i] = av.data()[i] * bv.data()[i];
    }
    NXAI_NODE(OpKind::Mul, a, b, 2, std::move(out));
    return push(std::move(n));
}

Var Tape::mul_col(Var a, Var s) {
    const auto& av = node(a).value;
    const auto& sv = node(s).value;
    require(sv.cols() == 1 && sv.rows() == av.rows(), "mul_col: scale must be rows x 1");
    DenseMatrix out = av;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (double& x : out.row(i)) {
            x *= sv(i, 0);
        }
    }
    NXAI_NODE(OpKind::MulCol, a, s, 2, std::move(out));
    return push(std::move(n));
}

Var Tape::mul_row(Var a, Var r) {
    const auto& av = node(a).value;
    const auto& rv = node(r).value;
    require(rv.rows() == 1 && rv.cols() == av.cols(), "mul_row: factor must be 1 x cols");
    DenseMatrix out = av;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto row = out.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] *= rv(0, j);
        }
    }
    NXAI_NODE(OpKind::MulRow, a, r, 2, std::move(out));
    return push(std::move(n));
}

Var Tape::affine(Var a, double scale, double shift) {
    NXAI_NODE(OpKind::Affine, a, a, 1,
              map(node(a).value, [scale, shift](double x) { return scale * x + shift; }));
    n.scale = scale;
    return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::shared_ptr<const std::vector<std::size_t>> rows) {
    require(rows != nullptr, "gather_rows: null index");
    NXAI_NODE(OpKind::GatherRows, a, a, 1, nxai::gather_rows(node(a).value, *rows));
    n.index = std::move(rows);
    return push(std::move(n));
}

Var Tape::edge_aggregate(Var coef, Var x, std::shared_ptr<const EdgeIndex> edges) {
    require(edges != nullptr, "edge_aggregate: null edges");
    const auto& cv = node(coef).value;
    const auto& xv = node(x).value;
    const std::size_t heads = cv.cols();
    require(cv.rows() == edges->num_edges(), "edge_aggregate: coef rows != edges");
    require(heads > 0 && xv.cols() % heads == 0, "edge_aggregate: columns not divisible by heads");
    require(xv.rows() == edges->num_nodes, "edge_aggregate: x rows != nodes");
    const std::size_t width = xv.cols() / heads;
    DenseMatrix out(edges->num_nodes, xv.cols());
    for (std::size_t e = 0; e < edges->num_edges(); ++e) {
        const auto src = xv.row(edges->src[e]);
        auto dst = out.row(edges->dst[e]);
        for (std::size_t h = 0; h < heads; ++h) {
            const double c = cv(e, h);
            for (std::size_t k = h * width; k < (h + 1) * width; ++k) {
                dst[k] += c * src[k];
            }
        }
    }
    NXAI_NODE(OpKind::EdgeAggregate, coef, x, 2, std::move(out));
    n.edges = std::move(edges);
    return push(std::move(n));
}

Var Tape::segment_softmax(Var scores, std::shared_ptr<const EdgeIndex> edges) {
    require(edges != nullptr, "segment_softmax: null edges");
    const auto& sv = node(scores).value;
    require(sv.rows() == edges->num_edges(), "segment_softmax: score rows != edges");
    const std::size_t heads = sv.cols();
    DenseMatrix max(edges->num_nodes, heads, -std::numeric_limits<double>::infinity());
    for (std::size_t e = 0; e < sv.rows(); ++e) {
        for (std::size_t h = 0; h < heads; ++h) {
            max(edges->dst[e], h) = std::max(max(edges->dst[e], h), sv(e, h));
        }
    }
    DenseMatrix out(sv.rows(), heads);
    DenseMatrix denom(edges->num_nodes, heads);
    for (std::size_t e = 0; e < sv.rows(); ++e) {
        for (std::size_t h = 0; h < heads; ++h) {
            const double v = std::exp(sv(e, h) - max(edges->dst[e], h));
            out(e, h) = v;
            denom(edges->dst[e], h) += v;
        }
    }
    for (std::size_t e = 0; e < sv.rows(); ++e) {
        for (std::size_t h = 0; h < heads; ++h) {
            out(e, h) /= denom(edges->dst[e], h);
        }
    }
    NXAI_NODE(OpKind::SegmentSoftmax, scores, scores, 1, std::move(out));
    n.edges = std::move(edges);
    return push(std::move(n));
}

Var Tape::block_sum_cols(Var a, std::size_t blocks) {
    const auto& av = node(a).value;
    require(blocks > 0 && av.cols() % blocks == 0, "block_sum_cols: columns not divisible");
    const std::size_t width = av.cols() / blocks;
    DenseMatrix out(av.rows(), blocks);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t b = 0; b < blocks; ++b) {
            double acc = 0.0;
            for (std::size_t k = b * width; k < (b + 1) * width; ++k) {
                acc += av(i, k);
            }
            out(i, b) = acc;
        }
    }
    NXAI_NODE(OpKind::BlockSumCols, a, a, 1, std::move(out));
    n.count = blocks;
    return push(std::move(n));
}

Var Tape::head_mean(Var a, std::size_t heads) {
    const auto& av = node(a).value;
    require(heads > 0 && av.cols() % heads == 0, "head_mean: columns not divisible");
    const std::size_t width = av.cols() / heads;
    DenseMatrix out(av.rows(), width);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t c = 0; c < width; ++c) {
                out(i, c) += av(i, h * width + c);
            }
        }
        for (double& v : out.row(i)) {
            v /= static_cast<double>(heads);
        }
    }
    NXAI_NODE(OpKind::HeadMean, a, a, 1, std::move(out));
    n.count = heads;
    return push(std::move(n));
}

Var Tape::softmax_rows(Var a) {
    const auto& av = node(a).value;
    DenseMatrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        const auto r = av.row(i);
        const double m = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            out(i, j) = std::exp(r[j] - m);
            z += out(i, j);
        }
        for (double& v : out.row(i)) {
            v /= z;
        }
    }
    NXAI_NODE(OpKind::SoftmaxRows, a, a, 1, std::move(out));
    return push(std::move(n));
}

Var Tape::log_softmax_rows(Var a) {
    const auto& av = node(a).value;
    DenseMatrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        const auto r = av.row(i);
        const double m = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        for (double v : r) {
            z += std::exp(v - m);
        }
        const double lse = m + std::log(z);
        for (std::size_t j = 0; j < r.size(); ++j) {
            out(i, j) = r[j] - lse;
        }
    }
    NXAI_NODE(OpKind::LogSoftmaxRows, a, a, 1, std::move(out));
    return push(std::move(n));
}

Var Tape::pick(Var a, std::size_t row, std::size_t col) {
    const auto& av = node(a).value;
    require(row < av.rows() && col < av.cols(), "pick: index out of range");
    NXAI_NODE(OpKind::Pick, a, a, 1, DenseMatrix(1, 1, av(row, col)));
    n.row = row;
    n.col = col;
    return push(std::move(n));
}

Var Tape::sum(Var a) {
    double acc = 0.0;
    for (double v : node(a).value.data()) {
        acc += v;
    }
    NXAI_NODE(OpKind::Sum, a, a, 1, DenseMatrix(1, 1, acc));
    return push(std::move(n));
}

Var Tape::mean(Var a) {
    const auto& av = node(a).value;
    require(av.size() > 0, "mean: empty operand");
    double acc = 0.0;
    for (double v : av.data()) {
        acc += v;
    }
    NXAI_NODE(OpKind::Mean, a, a, 1, DenseMatrix(1, 1, acc / static_cast<double>(av.size())));
    return push(std::move(n));
}

Var Tape::nll_loss(Var logp, std::vector<std::size_t> rows, std::vector<std::size_t> targets) {
    const auto& lv = node(logp).value;
    require(rows.size() == targets.size() && !rows.empty(), "nll_loss: bad index lists");
    double acc = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] < lv.rows() && targets[i] < lv.cols(), "nll_loss: index out of range");
        acc -= lv(rows[i], targets[i]);
    }
    NXAI_NODE(OpKind::NllLoss, logp, logp, 1, DenseMatrix(1, 1, acc / static_cast<double>(rows.size())));
    n.rows = std::move(rows);
    n.targets = std::move(targets);
    return push(std::move(n));
}

#undef NXAI_NODE

Gradients backward(const Tape& tape, Var output, BackpropMode mode) {
    const auto& out_node = tape.node(output);
    if (out_node.value.rows() != 1 || out_node.value.cols() != 1) {
        throw ShapeError("backward: output must be a 1 x 1 scalar, got " +
                         std::to_string(out_node.value.rows()) + "x" +
                         std::to_string(out_node.value.cols()));
    }
    const auto& nodes = tape.nodes_;
    std::vector<DenseMatrix> grads(output.id + 1);
    std::vector<bool> reached(output.id + 1, false);
    grads[output.id] = DenseMatrix(1, 1, 1.0);
    reached[output.id] = true;

    DenseMatrix scratch;
    auto accumulate = [&](std::size_t id) -> DenseMatrix& {
        if (!nodes[id].requires_grad) {
            scratch = DenseMatrix(nodes[id].value.rows(), nodes[id].value.cols());
            return scratch;
        }
        if (!reached[id]) {
            grads[id] = DenseMatrix(nodes[id].value.rows(), nodes[id].value.cols());
            reached[id] = true;
        }
        return grads[id];
    };

    for (std::size_t id = output.id + 1; id-- > 0;) {
        if (!reached[id]) {
            continue;
        }
        const auto& n = nodes[id];
        if (n.kind == OpKind::Leaf || !n.requires_grad) {
            continue;
        }
        const DenseMatrix& g = grads[id];
        const std::size_t ia = n.inputs[0];
        const std::size_t ib = n.inputs[1];
        const DenseMatrix& a = nodes[ia].value;

        switch (n.kind) {
        case OpKind::Leaf:
            break;
        case OpKind::MatMul: {
            const DenseMatrix& b = nodes[ib].value;
            if (nodes[ia].requires_grad) {
                accumulate(ia) += matmul_nt(g, b);
            }
            if (nodes[ib].requires_grad) {
                accumulate(ib) += matmul_tn(a, g);
            }
            break;
        }
        case OpKind::Add:
            accumulate(ia) += g;
            accumulate(ib) += g;
            break;
        case OpKind::AddRow: {
            accumulate(ia) += g;
            DenseMatrix& gb = accumulate(ib);
            for (std::size_t i = 0; i < g.rows(); ++i) {
                for (std::size_t j = 0; j < g.cols(); ++j) {
                    gb(0, j) += g(i, j);
                }
            }
            break;
        }
        case OpKind::Relu: {
            DenseMatrix& ga = accumulate(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.data()[i] += relu_backward(mode, a.data()[i], g.data()[i]);
            }
            break;
        }
        case OpKind::LeakyRelu: {
            DenseMatrix& ga = accumulate(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.data()[i] += a.data()[i] > 0.0 ? g.data()[i] : n.scale * g.data()[i];
            }
            break;
        }
        case OpKind::Sigmoid: {
            DenseMatrix& ga = accumulate(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double s = n.value.data()[i];
                ga.data()[i] += g.data()[i] * s * (1.0 - s);
            }
            break;
        }
        case OpKind::Log: {
            DenseMatrix& ga = accumulate(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.data()[i] += g.data()[i] / a.data()[i];
            }
            break;
        }
        case OpKind::Mul: {
            const DenseMatrix& b = nodes[ib].value;
            {
                DenseMatrix& ga = accumulate(ia);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga.data()[i] += g.data()[i] * b.data()[i];
                }
            }
            DenseMatrix& gb = accumulate(ib);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb.data()[i] += g.data()[i] * a.data()[i];
            }
            break;
        }
        case OpKind::MulCol: {
            const DenseMatrix& s = nodes[ib].value;
            {
                DenseMatrix& ga = accumulate(ia);
                for (std::size_t i = 0; i < g.rows(); ++i) {
                    for (std::size_t j = 0; j < g.cols(); ++j) {
                        ga(i, j) += g(i, j) * s(i, 0);
                    }
                }
            }
            DenseMatrix& gs = accumulate(ib);
            for (std::size_t i = 0; i < g.rows(); ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < g.cols(); ++j) {
                    acc += g(i, j) * a(i, j);
                }
                gs(i, 0) += acc;
            }
            break;
        }
        case OpKind::MulRow: {
            const DenseMatrix& r = nodes[ib].value;
            {
                DenseMatrix& ga = accumulate(ia);
                for (std::size_t i = 0; i < g.rows(); ++i) {
                    for (std::size_t j = 0; j < g.cols(); ++j) {
                        ga(i, j) += g(i, j) * r(0, j);
                    }
                }
            }
            DenseMatrix& gr = accumulate(ib);
            for (std::size_t i = 0; i < g.rows(); ++i) {
                for (std::size_t j = 0; j < g.cols(); ++j) {
                    gr(0, j) += g(i, j) * a(i, j);
                }
            }
            break;
        }
        case OpKind::Affine: {
            DenseMatrix& ga = accumulate(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.data()[i] += n.scale * g.data()[i];
            }
            break;
        }
        case OpKind::GatherRows: {
            DenseMatrix& ga = accumulate(ia);
            const auto& idx = *n.index;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                auto dst = ga.row(idx[i]);
                const auto src = g.row(i);
                for (std::size_t j = 0; j < src.size(); ++j) {
                    dst[j] += src[j];
                }
            }
            break;
        }
        case OpKind::EdgeAggregate: {
            const DenseMatrix& x = nodes[ib].value;
            const auto& edges = *n.edges;
            const std::size_t heads = a.cols();
            const std::size_t width = x.cols() / heads;
            {
                DenseMatrix& gc = accumulate(ia);
                for (std::size_t e = 0; e < edges.num_edges(); ++e) {
                    const auto xs = x.row(edges.src[e]);
                    const auto gd = g.row(edges.dst[e]);
                    for (std::size_t h = 0; h < heads; ++h) {
                        double acc = 0.0;
                        for (std::size_t k = h * width; k < (h + 1) * width; ++k) {
                            acc += gd[k] * xs[k];
                        }
                        gc(e, h) += acc;
                    }
                }
            }
            DenseMatrix& gx = accumulate(ib);
            for (std::size_t e = 0; e < edges.num_edges(); ++e) {
                auto gs = gx.row(edges.src[e]);
                const auto gd = g.row(edges.dst[e]);
                for (std::size_t h = 0; h < heads; ++h) {
                    const double c = a(e, h);
                    for (std::size_t k = h * width; k < (h + 1) * width; ++k) {
                        gs[k] += c * gd[k];
                    }
                }
            }
            break;
        }
        case OpKind::SegmentSoftmax: {
            const auto& edges = *n.edges;
            const DenseMatrix& y = n.value;
            DenseMatrix dot(edges.num_nodes, y.cols());
            for (std::size_t e = 0; e < y.rows(); ++e) {
                for (std::size_t h = 0; h < y.cols(); ++h) {
                    dot(edges.dst[e], h) += y(e, h) * g(e, h);
                }
            }
            DenseMatrix& ga = accumulate(ia);
            for (std::size_t e = 0; e < y.rows(); ++e) {
                for (std::size_t h = 0; h < y.cols(); ++h) {
                    ga(e, h) += y(e, h) * (g(e, h) - dot(edges.dst[e], h));
                }
            }
            break;
        }
        case OpKind::BlockSumCols: {
            DenseMatrix& ga = accumulate(ia);
            const std::size_t width = a.cols() / n.count;
            for (std::size_t i = 0; i < a.rows(); ++i) {
                for (std::size_t k = 0; k < a.cols(); ++k) {
                    ga(i, k) += g(i, k / width);
                }
            }
            break;
        }
        case OpKind::HeadMean: {
            DenseMatrix& ga = accumulate(ia);
            const std::size_t width = a.cols() / n.count;
            const double inv = 1.0 / static_cast<double>(n.count);
            for (std::size_t i = 0; i < a.rows(); ++i) {
                for (std::size_t k = 0; k < a.cols(); ++k) {
                    ga(i, k) += g(i, k % width) * inv;
                }
            }
            break;
        }
        case OpKind::SoftmaxRows: {
            // Exact Jacobian-vector product: dx = y * (g - <y, g>).
            const DenseMatrix& y = n.value;
            DenseMatrix& ga = accumulate(ia);
            for (std::size_t i = 0; i < y.rows(); ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < y.cols(); ++j) {
                    dot += y(i, j) * g(i, j);
                }
                for (std::size_t j = 0; j < y.cols(); ++j) {
                    ga(i, j) += y(i, j) * (g(i, j) - dot);
                }
            }
            break;
        }
        case OpKind::LogSoftmaxRows: {
            const DenseMatrix& y = n.value;
            DenseMatrix& ga = accumulate(ia);
            for (std::size_t i = 0; i < y.rows(); ++i) {
                double total = 0.0;
                for (std::size_t j = 0; j < y.cols(); ++j) {
                    total += g(i, j);
                }
                for (std::size_t j = 0; j < y.cols(); ++j) {
                    ga(i, j) += g(i, j) - std::exp(y(i, j)) * total;
                }
            }
            break;
        }
        case OpKind::Pick:
            accumulate(ia)(n.row, n.col) += g(0, 0);
            break;
        case OpKind::Sum: {
            DenseMatrix& ga = accumulate(ia);
            for (double& v : ga.data()) {
                v += g(0, 0);
            }
            break;
        }
        case OpKind::Mean: {
            DenseMatrix& ga = accumulate(ia);
            const double s = g(0, 0) / static_cast<double>(a.size());
            for (double& v : ga.data()) {
                v += s;
            }
            break;
        }
        case OpKind::NllLoss: {
            DenseMatrix& ga = accumulate(ia);
            const double s = g(0, 0) / static_cast<double>(n.rows.size());
            for (std::size_t i = 0; i < n.rows.size(); ++i) {
                ga(n.rows[i], n.targets[i]) -= s;
            }
            break;
        }
        }
    }

    for (std::size_t id = 0; id <= output.id; ++id) {
        if (!reached[id]) {
            grads[id] = DenseMatrix(nodes[id].value.rows(), nodes[id].value.cols());
        }
    }
    grads.resize(tape.size());
    for (std::size_t id = output.id + 1; id < tape.size(); ++id) {
        grads[id] = DenseMatrix(nodes[id].value.rows(), nodes[id].value.cols());
    }
    return Gradients(std::move(grads));
}

} // namespace nxai
