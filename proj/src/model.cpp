#include "nxai/model.hpp"

#include "nxai/optim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace nxai {

std::string_view to_string(Architecture arch) noexcept {
    return arch == Architecture::GCN ? "gcn" : "gatv2";
}

Architecture parse_architecture(std::string_view name) {
    if (name == "gcn") {
        return Architecture::GCN;
    }
    if (name == "gat" || name == "gatv2") {
        return Architecture::GATv2;
    }
    throw ConfigError("unknown architecture '" + std::string(name) + "' (expected gcn or gat)");
}

ModelConfig ModelConfig::defaults(Architecture arch) {
    ModelConfig c;
    c.arch = arch;
    c.hidden_dim = arch == Architecture::GCN ? 16 : 8;
    return c;
}

void ModelConfig::validate() const {
    if (hidden_dim < 1) {
        throw ConfigError("hidden_dim must be at least 1");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ConfigError("dropout_rate must lie in [0, 1)");
    }
    if (arch == Architecture::GATv2 && (heads < 1 || output_heads < 1)) {
        throw ConfigError("attention head counts must be at least 1");
    }
    if (!(learning_rate > 0.0) || !(weight_decay >= 0.0)) {
        throw ConfigError("learning_rate must be positive and weight_decay non-negative");
    }
}

TrainedModel::TrainedModel(ModelConfig config, std::size_t in_features, std::size_t num_classes,
                           std::vector<Parameter> parameters, std::vector<EpochLog> log)
    : config_(config),
      in_features_(in_features),
      num_classes_(num_classes),
      parameters_(std::move(parameters)),
      log_(std::move(log)) {
    config_.validate();
    const auto shapes = parameter_shapes(config_, in_features_, num_classes_);
    if (shapes.size() != parameters_.size()) {
        throw ShapeError("expected " + std::to_string(shapes.size()) + " parameter tensors, got " +
                         std::to_string(parameters_.size()));
    }
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto& [name, shape] = shapes[i];
        const auto& p = parameters_[i];
        if (p.name != name || p.value.rows() != shape.first || p.value.cols() != shape.second) {
            throw ShapeError("parameter " + p.name + " (" + std::to_string(p.value.rows()) + "x" +
                             std::to_string(p.value.cols()) + ") does not match expected " + name + " (" +
                             std::to_string(shape.first) + "x" + std::to_string(shape.second) + ")");
        }
        if (!p.value.all_finite()) {
            throw NumericalError("parameter " + p.name + " contains non-finite values");
        }
    }
}

std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>>
TrainedModel::parameter_shapes(const ModelConfig& c, std::size_t in, std::size_t classes) {
    if (c.arch == Architecture::GCN) {
        return {{"conv1.weight", {in, c.hidden_dim}},
                {"conv1.bias", {1, c.hidden_dim}},
                {"conv2.weight", {c.hidden_dim, classes}},
                {"conv2.bias", {1, classes}}};
    }
    const std::size_t h1 = c.heads * c.hidden_dim;
    const std::size_t h2 = c.output_heads * classes;
    return {{"conv1.lin_l", {in, h1}},  {"conv1.lin_r", {in, h1}},  {"conv1.att", {1, h1}},
            {"conv1.bias", {1, h1}},    {"conv2.lin_l", {h1, h2}},  {"conv2.lin_r", {h1, h2}},
            {"conv2.att", {1, h2}},     {"conv2.bias", {1, classes}}};
}

TrainedModel TrainedModel::initialize(const ModelConfig& config, std::size_t in_features, std::size_t num_classes) {
    config.validate();
    Rng rng = make_rng(config.seed, "init");
    std::vector<Parameter> params;
    for (const auto& [name, shape] : parameter_shapes(config, in_features, num_classes)) {
        DenseMatrix m(shape.first, shape.second);
        if (!name.ends_with("bias")) {
            // Attention vectors are 1 x (heads*width); treat each head's slice as width x 1.
            const bool att = name.ends_with("att");
            const std::size_t heads = name.starts_with("conv1") ? config.heads : config.output_heads;
            const double fan_in = att ? static_cast<double>(shape.second / heads) : static_cast<double>(shape.first);
            const double fan_out = att ? 1.0 : static_cast<double>(shape.second);
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (double& v : m.data()) {
                v = dist(rng);
            }
        }
        params.push_back({name, std::move(m)});
    }
    return TrainedModel(config, in_features, num_classes, std::move(params));
}

const DenseMatrix& TrainedModel::parameter(std::string_view name) const {
    for (const auto& p : parameters_) {
        if (p.name == name) {
            return p.value;
        }
    }
    throw ConfigError("no parameter named " + std::string(name));
}

DenseMatrix& TrainedModel::parameter(std::string_view name) {
    return const_cast<DenseMatrix&>(std::as_const(*this).parameter(name));
}

namespace {

Var dropout(Tape& tape, Var x, const ForwardOptions& options, double rate) {
    if (!options.training || rate == 0.0) {
        return x;
    }
    if (options.dropout_rng == nullptr) {
        throw ConfigError("training-mode forward requires a dropout generator");
    }
    const DenseMatrix& v = tape.value(x);
    DenseMatrix mask(v.rows(), v.cols());
    std::bernoulli_distribution keep(1.0 - rate);
    const double scale = 1.0 / (1.0 - rate);
    for (double& m : mask.data()) {
        m = keep(*options.dropout_rng) ? scale : 0.0;
    }
    return tape.mul(x, tape.constant(std::move(mask)));
}

/// Symmetric degree normalization 1/sqrt(deg(src) deg(dst)), with in-degrees
/// counted over the message edges plus edges arriving from outside the graph.
DenseMatrix gcn_coefficients(const ComputeGraph& graph) {
    const auto& edges = *graph.edges;
    std::vector<double> degree = graph.external_in_degree;
    for (std::size_t e = 0; e < edges.num_edges(); ++e) {
        degree[edges.dst[e]] += 1.0;
    }
    std::vector<double> inv_sqrt(degree.size(), 0.0);
    for (std::size_t v = 0; v < degree.size(); ++v) {
        inv_sqrt[v] = degree[v] > 0.0 ? 1.0 / std::sqrt(degree[v]) : 0.0;
    }
    DenseMatrix coef(edges.num_edges(), 1);
    for (std::size_t e = 0; e < edges.num_edges(); ++e) {
        coef(e, 0) = inv_sqrt[edges.src[e]] * inv_sqrt[edges.dst[e]];
    }
    return coef;
}

Var gcn_layer(Tape& tape, Var h, Var weight, Var bias, Var coef, const ComputeGraph& graph) {
    const Var transformed = tape.matmul(h, weight);
    return tape.add_row(tape.edge_aggregate(coef, transformed, graph.edges), bias);
}

struct GatWeights {
    Var lin_l;
    Var lin_r;
    Var att;
    Var bias;
};

Var gatv2_layer(Tape& tape, Var h, const GatWeights& w, std::size_t heads, bool concat, double slope,
                const ComputeGraph& graph, const std::optional<Var>& edge_mask,
                const std::shared_ptr<const std::vector<std::size_t>>& src,
                const std::shared_ptr<const std::vector<std::size_t>>& dst) {
    const Var xl = tape.matmul(h, w.lin_l);
    const Var xr = tape.matmul(h, w.lin_r);
    const Var pair = tape.add(tape.gather_rows(xl, src), tape.gather_rows(xr, dst));
    const Var scores = tape.block_sum_cols(tape.mul_row(tape.leaky_relu(pair, slope), w.att), heads);
    Var alpha = tape.segment_softmax(scores, graph.edges);
    if (edge_mask) {
        alpha = tape.mul_col(alpha, *edge_mask);
    }
    Var out = tape.edge_aggregate(alpha, xl, graph.edges);
    if (!concat) {
        out = tape.head_mean(out, heads);
    }
    return tape.add_row(out, w.bias);
}

} // namespace

RecordedForward TrainedModel::record(Tape& tape, Var features, const ComputeGraph& graph,
                                     const ForwardOptions& options) const {
    if (tape.value(features).cols() != in_features_) {
        throw ShapeError("feature width " + std::to_string(tape.value(features).cols()) +
                         " does not match model input width " + std::to_string(in_features_));
    }
    if (tape.value(features).rows() != graph.edges->num_nodes) {
        throw ShapeError("feature rows do not match graph node count");
    }
    RecordedForward rec;
    for (const auto& p : parameters_) {
        rec.parameters.push_back(tape.leaf(p.value));
    }
    const auto& P = rec.parameters;
    const double rate = config_.dropout_rate;

    Var h = dropout(tape, features, options, rate);
    if (config_.arch == Architecture::GCN) {
        Var coef = tape.constant(gcn_coefficients(graph));
        if (options.edge_mask) {
            coef = tape.mul(coef, *options.edge_mask);
        }
        h = tape.relu(gcn_layer(tape, h, P[0], P[1], coef, graph));
        h = dropout(tape, h, options, rate);
        rec.logits = gcn_layer(tape, h, P[2], P[3], coef, graph);
        return rec;
    }

    auto src = std::make_shared<const std::vector<std::size_t>>(graph.edges->src);
    auto dst = std::make_shared<const std::vector<std::size_t>>(graph.edges->dst);
    h = tape.relu(gatv2_layer(tape, h, {P[0], P[1], P[2], P[3]}, config_.heads, true, config_.attention_slope, graph,
                              options.edge_mask, src, dst));
    h = dropout(tape, h, options, rate);
    rec.logits = gatv2_layer(tape, h, {P[4], P[5], P[6], P[7]}, config_.output_heads, false,
                             config_.attention_slope, graph, options.edge_mask, src, dst);
    return rec;
}

DenseMatrix TrainedModel::logits(const ComputeGraph& graph) const {
    Tape tape;
    const Var x = tape.constant(graph.features);
    return tape.value(record(tape, x, graph).logits);
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

Prediction make_prediction(NodeId node, std::span<const double> logits) {
    Prediction p;
    p.node = node;
    p.logits.assign(logits.begin(), logits.end());
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    p.probabilities.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p.probabilities[i] = std::exp(logits[i] - m);
        z += p.probabilities[i];
    }
    for (double& v : p.probabilities) {
        v /= z;
    }
    p.predicted_class = argmax(logits);
    return p;
}

Prediction forward(const TrainedModel& model, const Subgraph& sg) {
    const ComputeGraph cg = compute_graph(sg);
    Tape tape;
    const Var x = tape.constant(cg.features);
    const auto rec = model.record(tape, x, cg);
    return make_prediction(sg.center, tape.value(rec.logits).row(sg.center_local));
}

RecordedSubgraph forward_recorded(const TrainedModel& model, const Subgraph& sg) {
    ComputeGraph cg = compute_graph(sg);
    RecordedSubgraph out;
    out.features = out.tape.leaf(std::move(cg.features));
    out.logits = model.record(out.tape, out.features, cg).logits;
    out.center_local = sg.center_local;
    out.prediction = make_prediction(sg.center, out.tape.value(out.logits).row(sg.center_local));
    return out;
}

std::vector<Prediction> predict_all(const TrainedModel& model, const Graph& g, std::span<const NodeId> nodes) {
    std::vector<Prediction> out;
    if (nodes.empty()) {
        return out;
    }
    const DenseMatrix logits = model.logits(compute_graph(g));
    out.reserve(nodes.size());
    for (NodeId v : nodes) {
        if (v >= g.num_nodes()) {
            throw GraphError(GraphErrorCode::OutOfRange, "node " + std::to_string(v) + " out of range");
        }
        out.push_back(make_prediction(v, logits.row(v)));
    }
    return out;
}

namespace {

double split_accuracy(const DenseMatrix& logits, const Graph& g, Split split) {
    std::size_t total = 0;
    std::size_t correct = 0;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        if (g.splits()[v] != split) {
            continue;
        }
        ++total;
        correct += argmax(logits.row(v)) == g.labels()[v] ? 1 : 0;
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

} // namespace

double accuracy(const TrainedModel& model, const Graph& g, Split split) {
    return split_accuracy(model.logits(compute_graph(g)), g, split);
}

TrainedModel train(const Graph& g, const ModelConfig& config) {
    config.validate();
    if (g.has_self_loops() != config.self_loops) {
        throw ConfigError(std::string("model configured ") + (config.self_loops ? "with" : "without") +
                          " self-loops but the graph " + (g.has_self_loops() ? "has" : "lacks") + " them");
    }
    std::vector<std::size_t> rows;
    std::vector<std::size_t> targets;
    for (NodeId v : g.nodes_in(Split::Train)) {
        rows.push_back(v);
        targets.push_back(g.labels()[v]);
    }
    if (rows.empty()) {
        throw ConfigError("graph has no training nodes");
    }

    TrainedModel model = TrainedModel::initialize(config, g.num_features(), g.num_classes());
    const ComputeGraph cg = compute_graph(g);
    Rng dropout_rng = make_rng(config.seed, "dropout");
    Adam adam(config.learning_rate, config.weight_decay);
    std::vector<EpochLog> log;
    log.reserve(config.epochs);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        Tape tape;
        const Var x = tape.constant(cg.features);
        ForwardOptions opts;
        opts.training = true;
        opts.dropout_rng = &dropout_rng;
        const auto rec = model.record(tape, x, cg, opts);
        const Var loss = tape.nll_loss(tape.log_softmax_rows(rec.logits), rows, targets);
        const double loss_value = tape.value(loss)(0, 0);
        if (!std::isfinite(loss_value)) {
            throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
        }
        const Gradients grads = backward(tape, loss);

        std::vector<DenseMatrix*> params;
        std::vector<const DenseMatrix*> param_grads;
        for (std::size_t i = 0; i < rec.parameters.size(); ++i) {
            params.push_back(&model.mutable_parameters()[i].value);
            param_grads.push_back(&grads[rec.parameters[i]]);
        }
        adam.step(params, param_grads);

        const DenseMatrix eval = model.logits(cg);
        if (!eval.all_finite()) {
            throw NumericalError("training diverged: non-finite logits at epoch " + std::to_string(epoch));
        }
        log.push_back({epoch, loss_value, split_accuracy(eval, g, Split::Train), split_accuracy(eval, g, Split::Val),
                       split_accuracy(eval, g, Split::Test)});
    }
    model.set_log(std::move(log));
    return model;
}

} // namespace nxai
