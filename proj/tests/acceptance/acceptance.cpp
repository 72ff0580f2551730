// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
#include "nxai/autodiff.hpp"
#include "nxai/explainers.hpp"
#include "nxai/metrics.hpp"
#include "nxai/model.hpp"
#include "nxai/synthetic.hpp"
#include "nxai/text.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

using namespace nxai;
using text::format_double;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
}

std::vector<NodeId> all_nodes(const Graph& g) {
    std::vector<NodeId> v(g.num_nodes());
    std::iota(v.begin(), v.end(), 0);
    return v;
}

// Smallest |input| over every ReLU and LeakyReLU on the tape.
double kink_distance(const Tape& tape) {
    double closest = INFINITY;
    for (std::size_t i = 0; i < tape.size(); ++i) {
        const Var v{i};
        if (tape.kind(v) == OpKind::Relu || tape.kind(v) == OpKind::LeakyRelu) {
            for (double x : tape.value(Var{tape.inputs(v)[0]}).data()) {
                closest = std::min(closest, std::abs(x));
            }
        }
    }
    return closest;
}

Outcome finite_differences() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2024);
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    constexpr double step = 1e-5;
    constexpr double kink_margin = 1e-3;
    constexpr double floor = 1e-6;
    double worst = 0.0;
    std::size_t models = 0;
    std::size_t redraws = 0;
    std::size_t gat = 0;
    while (models < 100) {
        RandomGraphConfig gc;
        gc.num_nodes = pick(2, 10);
        gc.num_features = pick(1, 5);
        gc.num_classes = pick(2, 4);
        gc.edge_probability = 0.3;
        gc.undirected = pick(0, 1) == 1;
        gc.self_loops = pick(0, 1) == 1;
        gc.seed = rng();
        const Graph g = make_random_graph(gc);
        const Architecture arch = models % 2 == 0 ? Architecture::GCN : Architecture::GATv2;
        const TrainedModel m = oracle::random_model(arch, gc.num_features, gc.num_classes, gc.self_loops, rng(),
                                                    pick(2, 6), pick(1, 3));
        const ComputeGraph cg = compute_graph(g);
        const NodeId node = pick(0, g.num_nodes() - 1);
        const std::size_t cls = pick(0, gc.num_classes - 1);

        auto logit = [&](Tape& tape, Var x) { return tape.pick(m.record(tape, x, cg).logits, node, cls); };
        Tape tape;
        const Var x = tape.leaf(cg.features);
        const Var y = logit(tape, x);
        if (kink_distance(tape) < kink_margin) {
            ++redraws;
            continue;
        }
        const DenseMatrix analytic = backward(tape, y)[x];
        DenseMatrix features = cg.features;
        const DenseMatrix numeric = oracle::central_differences(
            [&] {
                Tape t;
                return t.value(logit(t, t.leaf(features)))(0, 0);
            },
            features, step);
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double a = analytic.data()[i];
            const double n = numeric.data()[i];
            worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
        }
        gat += arch == Architecture::GATv2 ? 1 : 0;
        ++models;
    }
    const double elapsed = seconds_since(start);
    return {worst < 1e-4 && elapsed < 60.0,
            "max relative error " + format_double(worst) + " over " + std::to_string(models) + " models (" +
                std::to_string(gat) + " GATv2, " + std::to_string(redraws) + " redrawn near a kink), " +
                format_double(std::round(elapsed * 100) / 100) + " s"};
}

Outcome relu_grid() {
    // Expected table: rows x in {-1, -0, +0, +1}, columns g in {-2, 0, 3}.
    const double xs[] = {-1.0, -0.0, 0.0, 1.0};
    const double gs[] = {-2.0, 0.0, 3.0};
    const double standard[4][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {-2, 0, 3}};
    const double deconvnet[4][3] = {{0, 0, 3}, {0, 0, 3}, {0, 0, 3}, {0, 0, 3}};
    const double guided[4][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 3}};
    std::size_t checked = 0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            const std::pair<BackpropMode, double> cases[] = {{BackpropMode::Standard, standard[i][j]},
                                                             {BackpropMode::Deconvnet, deconvnet[i][j]},
                                                             {BackpropMode::Guided, guided[i][j]}};
            for (const auto& [mode, expected] : cases) {
                // Rule applied directly and through a recorded ReLU with upstream gradient g.
                Tape tape;
                const Var x = tape.leaf(DenseMatrix(1, 1, xs[i]));
                const Var y = tape.sum(tape.mul(tape.relu(x), tape.constant(DenseMatrix(1, 1, gs[j]))));
                const double through_tape = backward(tape, y, mode)[x](0, 0);
                wrong += relu_backward(mode, xs[i], gs[j]) == expected ? 0 : 1;
                wrong += through_tape == expected ? 0 : 1;
                checked += 2;
            }
        }
    }
    return {wrong == 0, std::to_string(checked - wrong) + "/" + std::to_string(checked) + " grid entries exact"};
}

Outcome gadget() {
    const Gadget gd = make_gadget();
    const Graph looped = set_self_loops(gd.graph, true);
    double max_gradient = 0.0;
    double min_shift = INFINITY;
    double min_looped_gradient = INFINITY;
    constexpr int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        for (bool loops : {false, true}) {
            const Graph& g = loops ? looped : gd.graph;
            const TrainedModel m = oracle::random_model(Architecture::GCN, g.num_features(), g.num_classes(), loops,
                                                        static_cast<std::uint64_t>(seed));
            const ComputeGraph cg = compute_graph(g);
            const std::size_t cls = oracle::whole_graph_prediction(m, g, gd.classified).predicted_class;
            Tape tape;
            const Var x = tape.leaf(cg.features);
            const Var y = tape.pick(m.record(tape, x, cg).logits, gd.classified, cls);
            const DenseMatrix grad = backward(tape, y)[x];
            double pendant = 0.0;
            for (double d : grad.row(gd.pendant)) {
                pendant = std::max(pendant, std::abs(d));
            }
            if (loops) {
                min_looped_gradient = std::min(min_looped_gradient, pendant);
                continue;
            }
            max_gradient = std::max(max_gradient, pendant);
            const Prediction before = oracle::whole_graph_prediction(m, g, gd.classified);
            const Prediction after =
                oracle::whole_graph_prediction(m, oracle::remove_nodes(g, {gd.pendant}), gd.classified);
            min_shift = std::min(min_shift, std::abs(after.probabilities[cls] - before.probabilities[cls]));
        }
    }
    const bool pass = max_gradient < 1e-12 && min_shift > 1e-6 && min_looped_gradient > 1e-12;
    std::ostringstream s;
    s << seeds << " random GCNs; without loops max |dy/dX_j| " << format_double(max_gradient)
      << ", min |delta prob| on deleting j " << format_double(min_shift) << "; with loops min max|dy/dX_j| "
      << format_double(min_looped_gradient);
    return {pass, s.str()};
}

Outcome metric_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(77);
    const std::vector<int> percents{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    double worst = 0.0;
    std::size_t evaluated = 0;
    for (int trial = 0; trial < 50; ++trial) {
        RandomGraphConfig gc;
        gc.num_nodes = std::uniform_int_distribution<std::size_t>(2, 8)(rng);
        gc.num_features = 3;
        gc.num_classes = 3;
        gc.edge_probability = 0.35;
        gc.undirected = trial % 2 == 0;
        gc.self_loops = trial % 4 < 2;
        gc.seed = rng();
        const Graph g = make_random_graph(gc);
        const Architecture arch = trial % 3 == 0 ? Architecture::GATv2 : Architecture::GCN;
        const TrainedModel m = oracle::random_model(arch, 3, 3, gc.self_loops, rng(), 4, 2);
        std::vector<Explanation> explanations;
        for (NodeId v : all_nodes(g)) {
            explanations.push_back(oracle::random_explanation(m, g, v, rng()));
        }
        for (MetricKind kind : {MetricKind::Loyalty, MetricKind::InverseLoyalty, MetricKind::LoyaltyProbabilities,
                                MetricKind::InverseLoyaltyProbabilities}) {
            const MetricCurve curve = evaluate_metric(kind, m, g, explanations);
            const auto expected =
                oracle::oracle_deletion_curves(m, g, explanations, direction_of(kind) == Direction::Ascending, percents);
            const auto& values = is_probability_metric(kind) ? expected.probabilities : expected.loyalty;
            for (std::size_t i = 0; i < percents.size(); ++i) {
                worst = std::max(worst, std::abs(curve.points.at(i).value - values[i]));
            }
            worst = std::max(worst, curve.n_evaluated == expected.evaluated ? 0.0 : 1.0);
        }
        worst = std::max(worst, std::abs(all_deleted_loyalty(m, g, explanations).loyalty -
                                         oracle::oracle_all_deleted(m, g, explanations, false)));
        worst = std::max(worst, std::abs(all_neighbors_deleted_loyalty(m, g, all_nodes(g)).loyalty -
                                         oracle::oracle_all_deleted(m, g, explanations, true)));
        evaluated += g.num_nodes();
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-12 && elapsed < 60.0,
            "50 graphs, " + std::to_string(evaluated) + " explained nodes, max deviation " + format_double(worst) +
                ", " + format_double(std::round(elapsed * 100) / 100) + " s"};
}

struct Experiment {
    Graph graph;
    TrainedModel model;
    std::map<Method, std::vector<Explanation>> explanations;
    std::vector<NodeId> targets;
};

Experiment run_experiment(Architecture arch, bool loops) {
    PlantedMotifConfig pc;
    pc.self_loops = loops;
    Graph g = make_planted_motif_graph(pc);
    ModelConfig mc = ModelConfig::defaults(arch);
    mc.self_loops = loops;
    TrainedModel m = train(g, mc);
    const std::vector<NodeId> targets = g.nodes_in(Split::Test);
    const PGExplainerModel pgm = pgexplainer_train(m, g, g.nodes_in(Split::Train), PGExplainerConfig{});
    ExplainerSettings settings;
    settings.smoothgrad = SmoothGradConfig::defaults(g);
    settings.pgexplainer = &pgm;
    settings.embeddings = node_embeddings(m, g);
    Experiment e{g, m, {}, targets};
    for (Method method : all_methods()) {
        e.explanations[method] = explain_all(method, m, g, targets, settings);
    }
    return e;
}

Outcome self_loop_equality(const std::vector<std::pair<std::string, const Experiment*>>& runs) {
    bool pass = true;
    std::ostringstream s;
    for (const auto& [name, ex] : runs) {
        const double baseline = all_neighbors_deleted_loyalty(ex->model, ex->graph, ex->targets).loyalty;
        s << name << " baseline " << format_double(baseline) << " (";
        bool first = true;
        for (Method method : all_methods()) {
            const double value = all_deleted_loyalty(ex->model, ex->graph, ex->explanations.at(method)).loyalty;
            pass = pass && value == baseline;
            s << (first ? "" : ", ") << to_string(method) << " " << format_double(value);
            first = false;
        }
        s << ") ";
    }
    return {pass, s.str()};
}

Outcome no_loop_gap(const Experiment& ex) {
    const double baseline = all_neighbors_deleted_loyalty(ex.model, ex.graph, ex.targets).loyalty;
    bool pass = true;
    std::ostringstream s;
    s << "GCN planted motif, baseline " << format_double(baseline);
    for (Method method : all_methods()) {
        const double value = all_deleted_loyalty(ex.model, ex.graph, ex.explanations.at(method)).loyalty;
        if (method == Method::PGExplainer) {
            pass = pass && value == baseline;
        } else {
            pass = pass && value >= baseline + 0.1;
        }
        s << ", " << to_string(method) << " " << format_double(value);
    }
    return {pass, s.str()};
}

Outcome gradient_auc_agreement(const Experiment& ex) {
    std::map<Method, double> aucs;
    for (Method method : {Method::Saliency, Method::Deconvnet, Method::Guided}) {
        aucs[method] = loyalty(ex.model, ex.graph, ex.explanations.at(method), Direction::Descending).auc();
    }
    double spread = 0.0;
    for (const auto& [a, x] : aucs) {
        for (const auto& [b, y] : aucs) {
            spread = std::max(spread, std::abs(x - y));
        }
    }
    std::ostringstream s;
    s << "GCN planted motif with loops, loyalty AUC saliency " << format_double(aucs[Method::Saliency])
      << ", deconvnet " << format_double(aucs[Method::Deconvnet]) << ", guided " << format_double(aucs[Method::Guided])
      << ", max pairwise gap " << format_double(spread);
    return {spread <= 0.02, s.str()};
}

Outcome auc_examples() {
    const double constant = auc(std::vector<MetricPoint>{{0, 1}, {100, 1}});
    const double linear = auc(std::vector<MetricPoint>{{0, 1}, {100, 0}});
    const double trapezoid = auc(std::vector<MetricPoint>{{0, 1}, {50, 1}, {100, 0}});
    return {constant == 1.0 && linear == 0.5 && trapezoid == 0.75,
            "constant " + format_double(constant) + ", linear " + format_double(linear) + ", trapezoid " +
                format_double(trapezoid)};
}

} // namespace

int main() {
    report(1, "finite-difference gradient check", finite_differences);
    report(2, "relu_backward sign grid", relu_grid);
    report(3, "gadget zero gradient yet nonzero deletion effect", gadget);
    report(4, "metric oracle equivalence", metric_oracle);

    const auto start = Clock::now();
    const Experiment gcn_loops = run_experiment(Architecture::GCN, true);
    const Experiment gat_loops = run_experiment(Architecture::GATv2, true);
    const Experiment gcn_plain = run_experiment(Architecture::GCN, false);
    std::cout << "synthetic experiments prepared in " << format_double(std::round(seconds_since(start) * 10) / 10)
              << " s (" << gcn_loops.targets.size() << " test nodes each)" << std::endl;

    report(5, "with self-loops all_deleted(nonzero) equals all_deleted(all_neighbors)",
           [&] { return self_loop_equality({{"GCN", &gcn_loops}, {"GATv2", &gat_loops}}); });
    report(6, "without self-loops PGExplainer at baseline, other methods above it by 0.1",
           [&] { return no_loop_gap(gcn_plain); });
    report(7, "gradient methods loyalty AUCs within 0.02", [&] { return gradient_auc_agreement(gcn_loops); });
    report(8, "AUC examples", auc_examples);

    std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
