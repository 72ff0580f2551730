#include "nxai/explainers.hpp"

#include "nxai/optim.hpp"
#include "nxai/parallel.hpp"
#include "nxai/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace nxai {

namespace {

constexpr std::size_t kHops = 2;
constexpr double kNonzero = 1e-12;
constexpr double kEntropyEps = 1e-15;
constexpr double kConcreteBias = 0.01;

constexpr std::array<Method, 6> kMethods = {Method::Saliency, Method::SmoothGrad,   Method::Deconvnet,
                                            Method::Guided,   Method::GNNExplainer, Method::PGExplainer};

Explanation make_explanation(Method method, const Subgraph& sg, std::size_t cls) {
    Explanation e;
    e.target = sg.center;
    e.method = method;
    e.predicted_class = cls;
    for (NodeId v : sg.neighbor_ids) {
        e.raw[v] = 0.0;
    }
    return e;
}

std::string per_target_stream(std::string_view prefix, NodeId target) {
    return std::string(prefix) + "/" + std::to_string(target);
}

/// d logit_c / d X for every subgraph node, evaluated at `features`.
DenseMatrix feature_gradient(const TrainedModel& model, const ComputeGraph& cg, const DenseMatrix& features,
                             std::size_t center_local, std::size_t cls, BackpropMode mode) {
    Tape tape;
    const Var x = tape.leaf(features);
    const Var logits = model.record(tape, x, cg).logits;
    const Var y = tape.pick(logits, center_local, cls);
    return backward(tape, y, mode)[x];
}

std::map<NodeId, double> reduce_rows(const Subgraph& sg, const DenseMatrix& grad) {
    std::map<NodeId, double> raw;
    for (std::size_t local = 0; local < sg.nodes.size(); ++local) {
        if (local == sg.center_local) {
            continue;
        }
        double total = 0.0;
        for (double v : grad.row(local)) {
            total += std::abs(v);
        }
        raw[sg.nodes[local]] = grad.cols() == 0 ? 0.0 : total / static_cast<double>(grad.cols());
    }
    return raw;
}

Explanation gradient_explanation(Method method, BackpropMode mode, const TrainedModel& model, const Graph& g,
                                 NodeId target) {
    const Subgraph sg = khop_subgraph(g, target, kHops);
    const std::size_t cls = forward(model, sg).predicted_class;
    Explanation e = make_explanation(method, sg, cls);
    e.raw = gradient_scores(model, sg, cls, mode);
    e.importance = normalize_by_max(e.raw);
    return e;
}

Var binary_entropy_mean(Tape& tape, Var s) {
    const Var one_minus = tape.affine(s, -1.0, 1.0);
    const Var a = tape.mul(s, tape.log(tape.affine(s, 1.0, kEntropyEps)));
    const Var b = tape.mul(one_minus, tape.log(tape.affine(s, -1.0, 1.0 + kEntropyEps)));
    return tape.affine(tape.mean(tape.add(a, b)), -1.0, 0.0);
}

} // namespace

std::string_view to_string(Method method) noexcept {
    switch (method) {
    case Method::Saliency:
        return "saliency";
    case Method::SmoothGrad:
        return "smoothgrad";
    case Method::Deconvnet:
        return "deconvnet";
    case Method::Guided:
        return "guided";
    case Method::GNNExplainer:
        return "gnnexplainer";
    case Method::PGExplainer:
        return "pgexplainer";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (Method m : kMethods) {
        if (name == to_string(m)) {
            return m;
        }
    }
    if (name == "saliency-map" || name == "saliency_map") {
        return Method::Saliency;
    }
    if (name == "guided-backprop" || name == "guided_backprop" || name == "guidedbackprop") {
        return Method::Guided;
    }
    throw ConfigError("unknown explainer '" + std::string(name) +
                      "' (expected saliency, smoothgrad, deconvnet, guided, gnnexplainer, pgexplainer)");
}

const std::array<Method, 6>& all_methods() noexcept { return kMethods; }

bool uses_gradients(Method method) noexcept { return method != Method::PGExplainer; }

std::string_view to_string(Direction direction) noexcept {
    return direction == Direction::Descending ? "desc" : "asc";
}

std::vector<NodeId> nonzero_neighbors(const Explanation& e, Direction direction) {
    std::vector<NodeId> out;
    for (const auto& [node, raw] : e.raw) {
        if (std::abs(raw) > kNonzero) {
            out.push_back(node);
        }
    }
    auto score = [&](NodeId v) {
        const auto it = e.importance.find(v);
        return it == e.importance.end() ? 0.0 : it->second;
    };
    std::stable_sort(out.begin(), out.end(), [&](NodeId a, NodeId b) {
        return direction == Direction::Descending ? score(a) > score(b) : score(a) < score(b);
    });
    return out;
}

std::map<NodeId, double> normalize_by_max(const std::map<NodeId, double>& raw) {
    double top = 0.0;
    for (const auto& [node, v] : raw) {
        top = std::max(top, v);
    }
    std::map<NodeId, double> out;
    for (const auto& [node, v] : raw) {
        out[node] = top > 0.0 ? v / top : 0.0;
    }
    return out;
}

std::map<NodeId, double> normalize_min_max(const std::map<NodeId, double>& raw, const std::vector<NodeId>& active) {
    std::map<NodeId, double> out;
    for (const auto& [node, v] : raw) {
        out[node] = 0.0;
    }
    if (active.empty()) {
        return out;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (NodeId v : active) {
        lo = std::min(lo, raw.at(v));
        hi = std::max(hi, raw.at(v));
    }
    for (NodeId v : active) {
        const double r = raw.at(v);
        if (hi > lo) {
            out[v] = (r - lo) / (hi - lo);
        } else {
            // Degenerate spread: every active neighbor is equally the most important.
            out[v] = std::abs(r) > kNonzero ? 1.0 : 0.0;
        }
    }
    return out;
}

std::map<NodeId, double> gradient_scores(const TrainedModel& model, const Subgraph& sg, std::size_t cls,
                                         BackpropMode mode) {
    const ComputeGraph cg = compute_graph(sg);
    return reduce_rows(sg, feature_gradient(model, cg, cg.features, sg.center_local, cls, mode));
}

Explanation saliency(const TrainedModel& model, const Graph& g, NodeId target) {
    return gradient_explanation(Method::Saliency, BackpropMode::Standard, model, g, target);
}

Explanation deconvnet_explain(const TrainedModel& model, const Graph& g, NodeId target) {
    return gradient_explanation(Method::Deconvnet, BackpropMode::Deconvnet, model, g, target);
}

Explanation guided_explain(const TrainedModel& model, const Graph& g, NodeId target) {
    return gradient_explanation(Method::Guided, BackpropMode::Guided, model, g, target);
}

SmoothGradConfig SmoothGradConfig::defaults(const Graph& g, std::uint64_t seed) {
    SmoothGradConfig c;
    c.seed = seed;
    const auto& data = g.features().data();
    if (!data.empty()) {
        const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
        c.sigma = 0.15 * (*hi - *lo);
    }
    return c;
}

void SmoothGradConfig::validate() const {
    if (n < 1) {
        throw ConfigError("smoothgrad needs at least one sample");
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("smoothgrad sigma must be a finite non-negative number");
    }
}

Explanation smoothgrad(const TrainedModel& model, const Graph& g, NodeId target, const SmoothGradConfig& cfg) {
    cfg.validate();
    const Subgraph sg = khop_subgraph(g, target, kHops);
    const ComputeGraph cg = compute_graph(sg);
    const std::size_t cls = forward(model, sg).predicted_class;
    Explanation e = make_explanation(Method::SmoothGrad, sg, cls);

    if (cfg.sigma == 0.0) {
        // Every sample sits on the clean input.
        e.raw = reduce_rows(sg, feature_gradient(model, cg, cg.features, sg.center_local, cls, BackpropMode::Standard));
        e.importance = normalize_by_max(e.raw);
        return e;
    }

    Rng rng = make_rng(cfg.seed, per_target_stream("smoothgrad", target));
    std::normal_distribution<double> noise(0.0, cfg.sigma);
    DenseMatrix total(cg.features.rows(), cg.features.cols());
    DenseMatrix noisy = cg.features;
    for (std::size_t s = 0; s < cfg.n; ++s) {
        for (std::size_t i = 0; i < noisy.size(); ++i) {
            noisy.data()[i] = cg.features.data()[i] + noise(rng);
        }
        total += feature_gradient(model, cg, noisy, sg.center_local, cls, BackpropMode::Standard);
    }
    for (double& v : total.data()) {
        v /= static_cast<double>(cfg.n);
    }
    e.raw = reduce_rows(sg, total);
    e.importance = normalize_by_max(e.raw);
    return e;
}

void MaskTrainConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw ConfigError("mask learning_rate must be positive");
    }
    if (!(init_std >= 0.0)) {
        throw ConfigError("mask init_std must be non-negative");
    }
}

Explanation gnnexplainer(const TrainedModel& model, const Graph& g, NodeId target, const MaskTrainConfig& cfg,
                         MaskTrace* trace) {
    cfg.validate();
    const Subgraph sg = khop_subgraph(g, target, kHops);
    const ComputeGraph cg = compute_graph(sg);
    const std::size_t n = sg.nodes.size();
    const std::size_t cls = forward(model, sg).predicted_class;
    Explanation e = make_explanation(Method::GNNExplainer, sg, cls);

    Rng rng = make_rng(cfg.seed, per_target_stream("masks", target));
    std::normal_distribution<double> init(0.0, cfg.init_std);
    DenseMatrix mask(n, 1);
    for (double& v : mask.data()) {
        v = init(rng);
    }

    auto active_rows = std::make_shared<std::vector<std::size_t>>();
    auto evaluate = [&](const DenseMatrix& m, bool regularize, DenseMatrix* grad) {
        Tape tape;
        const Var x = tape.constant(cg.features);
        const Var mv = tape.leaf(m);
        const Var s = tape.sigmoid(mv);
        const Var logits = model.record(tape, tape.mul_col(x, s), cg).logits;
        Var loss = tape.affine(tape.pick(tape.log_softmax_rows(logits), sg.center_local, cls), -1.0, 0.0);
        if (regularize && !active_rows->empty()) {
            const Var sa = tape.gather_rows(s, active_rows);
            loss = tape.add(loss, tape.affine(tape.mean(sa), cfg.size_coefficient, 0.0));
            loss = tape.add(loss, tape.affine(binary_entropy_mean(tape, sa), cfg.entropy_coefficient, 0.0));
        }
        const double value = tape.value(loss)(0, 0);
        if (!std::isfinite(value)) {
            throw NumericalError("node-mask loss is not finite for node " + std::to_string(target));
        }
        if (grad != nullptr) {
            *grad = backward(tape, loss)[mv];
        }
        return value;
    };

    DenseMatrix grad;
    evaluate(mask, false, &grad);
    for (std::size_t i = 0; i < n; ++i) {
        if (grad(i, 0) != 0.0) {
            active_rows->push_back(i);
        }
    }
    auto restrict_to_active = [&](DenseMatrix& gm) {
        DenseMatrix kept(n, 1);
        for (std::size_t i : *active_rows) {
            kept(i, 0) = gm(i, 0);
        }
        gm = std::move(kept);
    };

    Adam adam(cfg.learning_rate);
    double loss = evaluate(mask, true, &grad);
    restrict_to_active(grad);
    if (trace != nullptr) {
        trace->losses.assign(1, loss);
    }
    for (std::size_t epoch = 0; epoch < cfg.epochs && !active_rows->empty(); ++epoch) {
        const Adam saved_state = adam;
        const DenseMatrix saved_mask = mask;
        DenseMatrix* params[] = {&mask};
        const DenseMatrix* grads[] = {&grad};
        adam.step(params, grads);
        DenseMatrix candidate_grad;
        const double candidate = evaluate(mask, true, &candidate_grad);
        if (candidate > loss) {
            const double lr = adam.learning_rate() * 0.5;
            adam = saved_state;
            adam.set_learning_rate(lr);
            mask = saved_mask;
        } else {
            loss = candidate;
            grad = std::move(candidate_grad);
            restrict_to_active(grad);
        }
        if (trace != nullptr) {
            trace->losses.push_back(loss);
        }
    }
    if (trace != nullptr) {
        trace->final_learning_rate = adam.learning_rate();
    }

    std::vector<NodeId> active;
    for (std::size_t i : *active_rows) {
        if (i != sg.center_local) {
            e.raw[sg.nodes[i]] = mask(i, 0);
            active.push_back(sg.nodes[i]);
        }
    }
    e.importance = normalize_min_max(e.raw, active);
    return e;
}

void PGExplainerConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw ConfigError("pgexplainer learning_rate must be positive");
    }
    if (hidden_dim < 1) {
        throw ConfigError("pgexplainer hidden_dim must be at least 1");
    }
    if (!(temperature_start > 0.0) || !(temperature_end > 0.0)) {
        throw ConfigError("pgexplainer temperatures must be positive");
    }
}

PGExplainerModel::PGExplainerModel(PGExplainerConfig config, std::size_t embedding_dim,
                                   std::vector<Parameter> parameters)
    : config_(config), embedding_dim_(embedding_dim), parameters_(std::move(parameters)) {
    config_.validate();
    const std::size_t h = config_.hidden_dim;
    const std::pair<std::string, std::pair<std::size_t, std::size_t>> expected[] = {
        {"mlp.0.weight", {3 * embedding_dim, h}},
        {"mlp.0.bias", {1, h}},
        {"mlp.2.weight", {h, 1}},
        {"mlp.2.bias", {1, 1}},
    };
    if (parameters_.size() != std::size(expected)) {
        throw ShapeError("pgexplainer expects 4 parameter tensors");
    }
    for (std::size_t i = 0; i < parameters_.size(); ++i) {
        const auto& p = parameters_[i];
        const auto& [name, shape] = expected[i];
        if (p.name != name || p.value.rows() != shape.first || p.value.cols() != shape.second) {
            throw ShapeError("pgexplainer parameter " + p.name + " does not match expected " + name);
        }
        if (!p.value.all_finite()) {
            throw NumericalError("pgexplainer parameter " + p.name + " contains non-finite values");
        }
    }
}

PGExplainerModel PGExplainerModel::initialize(const PGExplainerConfig& config, std::size_t embedding_dim) {
    config.validate();
    Rng rng = make_rng(config.seed, "pgexplainer-init");
    auto glorot = [&](std::size_t rows, std::size_t cols) {
        DenseMatrix m(rows, cols);
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : m.data()) {
            v = dist(rng);
        }
        return m;
    };
    std::vector<Parameter> params;
    params.push_back({"mlp.0.weight", glorot(3 * embedding_dim, config.hidden_dim)});
    params.push_back({"mlp.0.bias", DenseMatrix(1, config.hidden_dim)});
    DenseMatrix out = glorot(config.hidden_dim, 1);
    if (config.zero_init_output) {
        out.fill(0.0);
    }
    params.push_back({"mlp.2.weight", std::move(out)});
    params.push_back({"mlp.2.bias", DenseMatrix(1, 1)});
    return PGExplainerModel(config, embedding_dim, std::move(params));
}

double PGExplainerModel::edge_logit(const DenseMatrix& z, NodeId i, NodeId j, NodeId k) const {
    if (z.cols() != embedding_dim_) {
        throw ShapeError("embedding width " + std::to_string(z.cols()) + " does not match explainer input width " +
                         std::to_string(embedding_dim_));
    }
    const DenseMatrix& w1 = parameters_[0].value;
    const DenseMatrix& b1 = parameters_[1].value;
    const DenseMatrix& w2 = parameters_[2].value;
    const double b2 = parameters_[3].value(0, 0);
    const std::size_t d = embedding_dim_;
    const NodeId ids[] = {i, j, k};
    double out = b2;
    for (std::size_t u = 0; u < w1.cols(); ++u) {
        double a = b1(0, u);
        for (std::size_t part = 0; part < 3; ++part) {
            for (std::size_t f = 0; f < d; ++f) {
                a += z(ids[part], f) * w1(part * d + f, u);
            }
        }
        out += std::max(a, 0.0) * w2(u, 0);
    }
    return out;
}

Var PGExplainerModel::record(Tape& tape, Var inputs, std::vector<Var>& params) const {
    params.clear();
    for (const auto& p : parameters_) {
        params.push_back(tape.leaf(p.value));
    }
    const Var h = tape.relu(tape.add_row(tape.matmul(inputs, params[0]), params[1]));
    return tape.add_row(tape.matmul(h, params[2]), params[3]);
}

DenseMatrix node_embeddings(const TrainedModel& model, const Graph& g) { return model.logits(compute_graph(g)); }

namespace {

DenseMatrix edge_inputs(const Subgraph& sg, const DenseMatrix& z) {
    const std::size_t d = z.cols();
    DenseMatrix inputs(sg.edges.size(), 3 * d);
    for (std::size_t e = 0; e < sg.edges.size(); ++e) {
        const NodeId ids[] = {sg.nodes[sg.edges[e].source], sg.nodes[sg.edges[e].target], sg.center};
        for (std::size_t part = 0; part < 3; ++part) {
            for (std::size_t f = 0; f < d; ++f) {
                inputs(e, part * d + f) = z(ids[part], f);
            }
        }
    }
    return inputs;
}

struct PGTrainingItem {
    Subgraph sg;
    ComputeGraph cg;
    DenseMatrix inputs;
    std::size_t cls = 0;
};

} // namespace

PGExplainerModel pgexplainer_train(const TrainedModel& model, const Graph& g, const std::vector<NodeId>& nodes,
                                   const PGExplainerConfig& cfg, std::vector<double>* losses) {
    cfg.validate();
    if (nodes.empty()) {
        throw ConfigError("pgexplainer needs at least one training node");
    }
    const DenseMatrix z = node_embeddings(model, g);
    PGExplainerModel pgm = PGExplainerModel::initialize(cfg, z.cols());

    std::vector<PGTrainingItem> items;
    for (NodeId k : nodes) {
        Subgraph sg = khop_subgraph(g, k, kHops);
        if (sg.edges.empty()) {
            continue;
        }
        PGTrainingItem item;
        item.cg = compute_graph(sg);
        item.inputs = edge_inputs(sg, z);
        item.cls = argmax(z.row(k));
        item.sg = std::move(sg);
        items.push_back(std::move(item));
    }

    Rng rng = make_rng(cfg.seed, "pgexplainer");
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Adam adam(cfg.learning_rate);
    if (losses != nullptr) {
        losses->clear();
    }
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double temperature =
            cfg.temperature_start * std::pow(cfg.temperature_end / cfg.temperature_start,
                                             static_cast<double>(epoch) / static_cast<double>(cfg.epochs));
        double epoch_loss = 0.0;
        for (const auto& item : items) {
            Tape tape;
            std::vector<Var> params;
            const Var logits = pgm.record(tape, tape.constant(item.inputs), params);
            DenseMatrix noise(item.sg.edges.size(), 1);
            for (double& v : noise.data()) {
                const double eps = (1.0 - 2.0 * kConcreteBias) * uniform(rng) + kConcreteBias;
                v = std::log(eps) - std::log(1.0 - eps);
            }
            const Var gate =
                tape.sigmoid(tape.affine(tape.add(logits, tape.constant(std::move(noise))), 1.0 / temperature, 0.0));
            ForwardOptions opts;
            opts.edge_mask = gate;
            const Var out = model.record(tape, tape.constant(item.cg.features), item.cg, opts).logits;
            Var loss = tape.affine(tape.pick(tape.log_softmax_rows(out), item.sg.center_local, item.cls), -1.0, 0.0);
            loss = tape.add(loss, tape.affine(tape.sum(gate), cfg.size_coefficient, 0.0));
            loss = tape.add(loss, tape.affine(binary_entropy_mean(tape, gate), cfg.entropy_coefficient, 0.0));
            const double value = tape.value(loss)(0, 0);
            if (!std::isfinite(value)) {
                throw NumericalError("pgexplainer loss diverged at epoch " + std::to_string(epoch));
            }
            epoch_loss += value;
            const Gradients grads = backward(tape, loss);
            std::vector<DenseMatrix*> ps;
            std::vector<const DenseMatrix*> gs;
            for (std::size_t i = 0; i < params.size(); ++i) {
                ps.push_back(&pgm.mutable_parameters()[i].value);
                gs.push_back(&grads[params[i]]);
            }
            adam.step(ps, gs);
        }
        if (losses != nullptr) {
            losses->push_back(items.empty() ? 0.0 : epoch_loss / static_cast<double>(items.size()));
        }
    }
    return pgm;
}

Explanation pgexplainer_explain(const PGExplainerModel& pgm, const TrainedModel& model, const Graph& g,
                                NodeId target, const DenseMatrix& z) {
    if (z.cols() != pgm.embedding_dim() || z.rows() != g.num_nodes()) {
        throw ShapeError("embeddings do not match the explainer or the graph");
    }
    const Subgraph sg = khop_subgraph(g, target, kHops);
    const std::size_t cls = forward(model, sg).predicted_class;
    Explanation e = make_explanation(Method::PGExplainer, sg, cls);

    std::map<NodeId, double> best;
    for (const Edge& edge : sg.edges) {
        if (edge.source == sg.center_local || !sg.on_path(edge)) {
            continue;
        }
        const NodeId i = sg.nodes[edge.source];
        const double w = pgm.edge_logit(z, i, sg.nodes[edge.target], target);
        const auto [it, inserted] = best.emplace(i, w);
        if (!inserted) {
            it->second = std::max(it->second, w);
        }
    }
    std::vector<NodeId> active;
    for (const auto& [node, w] : best) {
        e.raw[node] = w;
        active.push_back(node);
    }
    e.importance = normalize_min_max(e.raw, active);
    return e;
}

Explanation pgexplainer_explain(const PGExplainerModel& pgm, const TrainedModel& model, const Graph& g,
                                NodeId target) {
    return pgexplainer_explain(pgm, model, g, target, node_embeddings(model, g));
}

Explanation explain(Method method, const TrainedModel& model, const Graph& g, NodeId target,
                    const ExplainerSettings& settings) {
    switch (method) {
    case Method::Saliency:
        return saliency(model, g, target);
    case Method::SmoothGrad:
        return smoothgrad(model, g, target, settings.smoothgrad);
    case Method::Deconvnet:
        return deconvnet_explain(model, g, target);
    case Method::Guided:
        return guided_explain(model, g, target);
    case Method::GNNExplainer:
        return gnnexplainer(model, g, target, settings.gnnexplainer);
    case Method::PGExplainer:
        if (settings.pgexplainer == nullptr) {
            throw ConfigError("pgexplainer requires a trained explainer model");
        }
        if (settings.embeddings.empty()) {
            return pgexplainer_explain(*settings.pgexplainer, model, g, target);
        }
        return pgexplainer_explain(*settings.pgexplainer, model, g, target, settings.embeddings);
    }
    throw ConfigError("unknown explainer");
}

std::vector<Explanation> explain_all(Method method, const TrainedModel& model, const Graph& g,
                                     const std::vector<NodeId>& targets, const ExplainerSettings& settings,
                                     std::size_t jobs) {
    ExplainerSettings local = settings;
    if (method == Method::PGExplainer && local.embeddings.empty()) {
        local.embeddings = node_embeddings(model, g);
    }
    std::vector<Explanation> out(targets.size());
    parallel_for(targets.size(), jobs, [&](std::size_t i) { out[i] = explain(method, model, g, targets[i], local); });
    return out;
}

} // namespace nxai
