#include "cli.hpp"

#include "nxai/checkpoint.hpp"
#include "nxai/explainers.hpp"
#include "nxai/graph_io.hpp"
#include "nxai/metrics.hpp"
#include "nxai/report.hpp"
#include "nxai/synthetic.hpp"
#include "nxai/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace nxai::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSeedEnv = "NEIGHBOR_XAI_SEED";

struct TrainArgs {
    std::string dataset;
    std::string arch = "gcn";
    bool self_loops = true;
    std::uint64_t seed = 0;
    std::size_t epochs = 200;
    std::size_t hidden_dim = 0;
    std::size_t heads = 8;
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    double dropout = 0.5;
    std::string out = "out";
};

struct ExplainArgs {
    std::string dataset;
    std::string model;
    std::vector<std::string> methods;
    std::string out = "out";
    std::string nodes = "test";
    std::vector<std::size_t> ids;
    std::size_t limit = 0;
    std::size_t jobs = 1;
    std::uint64_t seed = 0;
    bool train_explainer = false;
    std::string explainer;
    std::size_t smoothgrad_samples = 50;
    double smoothgrad_sigma = -1.0;
    std::size_t mask_epochs = 100;
    double mask_learning_rate = 0.01;
    double mask_size = nxai::MaskTrainConfig{}.size_coefficient;
    double mask_entropy = nxai::MaskTrainConfig{}.entropy_coefficient;
    std::size_t pg_epochs = 30;
    double pg_learning_rate = 0.003;
};

struct EvaluateArgs {
    std::string dataset;
    std::string model;
    std::vector<std::string> explanations;
    std::string explanations_dir;
    std::vector<std::string> metrics;
    std::string baseline;
    std::string out = "out";
    std::size_t jobs = 1;
};

struct GadgetArgs {
    bool self_loops = false;
    bool json = false;
    std::uint64_t seed = 0;
    std::size_t epochs = 200;
};

struct ConvertCheckArgs {
    std::string dataset;
    std::size_t expect_nodes = 0;
    std::size_t expect_features = 0;
    std::size_t expect_classes = 0;
};

struct SyntheticArgs {
    std::string kind = "planted";
    std::string out;
    std::uint64_t seed = 0;
    bool self_loops = false;
    std::size_t nodes = 10;
};

void add_seed(CLI::App* app, std::uint64_t& seed) {
    app->add_option("--seed", seed, "Base random seed (falls back to $NEIGHBOR_XAI_SEED, then 0)")
        ->envname(kSeedEnv)
        ->capture_default_str();
}

/// The dataset with its self-loops set to match the model.
Graph load_for_model(const std::string& dataset, const TrainedModel& model) {
    Graph g = set_self_loops(load_graph(dataset), model.config().self_loops);
    if (g.num_features() != model.in_features() || g.num_classes() != model.num_classes()) {
        throw ConfigError("model expects " + std::to_string(model.in_features()) + " features and " +
                          std::to_string(model.num_classes()) + " classes but " + dataset + " has " +
                          std::to_string(g.num_features()) + " and " + std::to_string(g.num_classes()));
    }
    return g;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    ModelConfig config = ModelConfig::defaults(parse_architecture(a.arch));
    config.self_loops = a.self_loops;
    config.seed = a.seed;
    config.epochs = a.epochs;
    if (a.hidden_dim > 0) {
        config.hidden_dim = a.hidden_dim;
    }
    config.heads = a.heads;
    config.learning_rate = a.learning_rate;
    config.weight_decay = a.weight_decay;
    config.dropout_rate = a.dropout;
    config.validate();

    const Graph g = set_self_loops(load_graph(a.dataset), a.self_loops);
    const TrainedModel model = train(g, config);
    ensure_dir(a.out);
    const fs::path model_path = fs::path(a.out) / "model.json";
    save_model(model, model_path);
    text::write_file((fs::path(a.out) / "training_log.csv").string(), training_log_csv(model.log()));

    const EpochLog last = model.log().empty() ? EpochLog{} : model.log().back();
    out << "dataset " << g.name() << ", arch " << to_string(config.arch) << ", self-loops "
        << (a.self_loops ? "on" : "off") << ", seed " << a.seed << "\n";
    out << "final epoch " << last.epoch << ": loss " << text::format_double(last.loss) << ", train accuracy "
        << text::format_double(last.train_accuracy) << ", val accuracy " << text::format_double(last.val_accuracy)
        << ", test accuracy " << text::format_double(last.test_accuracy) << "\n";
    out << "checkpoint written to " << model_path.string() << "\n";
    return kOk;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<Method> methods;
    for (const auto& name : names) {
        if (name == "all") {
            return {all_methods().begin(), all_methods().end()};
        }
        const Method m = parse_method(name);
        if (std::find(methods.begin(), methods.end(), m) == methods.end()) {
            methods.push_back(m);
        }
    }
    if (methods.empty()) {
        throw ConfigError("no explainer selected");
    }
    return methods;
}

std::vector<NodeId> select_nodes(const Graph& g, const std::string& which, const std::vector<std::size_t>& ids,
                                 std::size_t limit) {
    std::vector<NodeId> nodes;
    if (!ids.empty()) {
        for (std::size_t v : ids) {
            if (v >= g.num_nodes()) {
                throw ConfigError("node " + std::to_string(v) + " is out of range");
            }
            nodes.push_back(v);
        }
    } else if (which == "all") {
        nodes.resize(g.num_nodes());
        for (NodeId v = 0; v < g.num_nodes(); ++v) {
            nodes[v] = v;
        }
    } else if (which == "test") {
        nodes = g.nodes_in(Split::Test);
    } else if (which == "val") {
        nodes = g.nodes_in(Split::Val);
    } else if (which == "train") {
        nodes = g.nodes_in(Split::Train);
    } else {
        throw ConfigError("unknown node set '" + which + "' (expected test, val, train or all)");
    }
    if (limit > 0 && nodes.size() > limit) {
        nodes.resize(limit);
    }
    return nodes;
}

fs::path explanation_path(const fs::path& dir, Method m) {
    return dir / ("explanations_" + std::string(to_string(m)) + ".jsonl");
}

int cmd_explain(const ExplainArgs& a, std::ostream& out) {
    const std::vector<Method> methods = parse_methods(a.methods);
    const TrainedModel model = load_model(a.model);
    const Graph g = load_for_model(a.dataset, model);
    const std::vector<NodeId> targets = select_nodes(g, a.nodes, a.ids, a.limit);
    ensure_dir(a.out);

    ExplainerSettings settings;
    settings.smoothgrad = SmoothGradConfig::defaults(g, a.seed);
    settings.smoothgrad.n = a.smoothgrad_samples;
    if (a.smoothgrad_sigma >= 0.0) {
        settings.smoothgrad.sigma = a.smoothgrad_sigma;
    }
    settings.smoothgrad.validate();
    settings.gnnexplainer.seed = a.seed;
    settings.gnnexplainer.epochs = a.mask_epochs;
    settings.gnnexplainer.learning_rate = a.mask_learning_rate;
    settings.gnnexplainer.size_coefficient = a.mask_size;
    settings.gnnexplainer.entropy_coefficient = a.mask_entropy;
    settings.gnnexplainer.validate();

    std::optional<PGExplainerModel> pgm;
    if (std::find(methods.begin(), methods.end(), Method::PGExplainer) != methods.end()) {
        const fs::path artifact = a.explainer.empty() ? fs::path(a.out) / "pgexplainer_model.json" : fs::path(a.explainer);
        if (a.train_explainer) {
            PGExplainerConfig pc;
            pc.seed = a.seed;
            pc.epochs = a.pg_epochs;
            pc.learning_rate = a.pg_learning_rate;
            pgm = pgexplainer_train(model, g, g.nodes_in(Split::Train), pc);
            save_pgexplainer(*pgm, artifact);
            out << "trained pgexplainer on " << g.nodes_in(Split::Train).size() << " nodes, saved to "
                << artifact.string() << "\n";
        } else if (fs::exists(artifact)) {
            pgm = load_pgexplainer(artifact);
        } else {
            throw ConfigError("no trained pgexplainer at " + artifact.string() +
                              "; run explain with --train-explainer first");
        }
        settings.pgexplainer = &*pgm;
        settings.embeddings = node_embeddings(model, g);
    }

    for (Method m : methods) {
        const auto explanations = explain_all(m, model, g, targets, settings, a.jobs);
        const fs::path path = explanation_path(a.out, m);
        write_explanations(path, explanations);
        out << to_string(m) << ": " << explanations.size() << " explanations written to " << path.string() << "\n";
    }
    return kOk;
}

std::vector<MetricKind> parse_metrics(const std::vector<std::string>& names) {
    if (names.empty()) {
        return {MetricKind::Loyalty, MetricKind::InverseLoyalty, MetricKind::LoyaltyProbabilities,
                MetricKind::InverseLoyaltyProbabilities};
    }
    std::vector<MetricKind> kinds;
    for (const auto& n : names) {
        const MetricKind k = parse_metric(n);
        if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) {
            kinds.push_back(k);
        }
    }
    return kinds;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const std::vector<MetricKind> kinds = parse_metrics(a.metrics);
    if (!a.baseline.empty() && a.baseline != "without-neighbors") {
        throw ConfigError("unknown baseline '" + a.baseline + "' (expected without-neighbors)");
    }
    std::vector<std::string> files = a.explanations;
    if (!a.explanations_dir.empty()) {
        for (Method m : all_methods()) {
            const fs::path p = explanation_path(a.explanations_dir, m);
            if (fs::exists(p)) {
                files.push_back(p.string());
            }
        }
    }
    if (files.empty() && a.baseline.empty()) {
        throw ConfigError("nothing to evaluate: pass --explanations, --explanations-dir or --baseline");
    }

    const TrainedModel model = load_model(a.model);
    const Graph g = load_for_model(a.dataset, model);
    const std::string arch(to_string(model.config().arch));
    const bool loops = model.config().self_loops;
    ensure_dir(a.out);
    const fs::path plots = fs::path(a.out) / "plots";

    EvaluationOptions options;
    options.jobs = a.jobs;
    std::vector<CurveRecord> curves;
    std::vector<BaselineRecord> baselines;
    std::vector<NodeId> baseline_nodes;
    for (const auto& file : files) {
        const std::vector<Explanation> explanations = read_explanations(file);
        if (explanations.empty()) {
            throw ConfigError(file + " holds no explanations");
        }
        const Method method = explanations.front().method;
        for (const auto& e : explanations) {
            if (e.method != method) {
                throw ConfigError(file + " mixes explanations of several methods");
            }
            if (e.target >= g.num_nodes()) {
                throw ConfigError(file + ": target " + std::to_string(e.target) + " is not a node of the dataset");
            }
        }
        const RunLabel label{std::string(to_string(method)), g.name(), arch, loops};
        std::optional<DeletionCurves> desc;
        std::optional<DeletionCurves> asc;
        for (MetricKind k : kinds) {
            auto& slot = direction_of(k) == Direction::Descending ? desc : asc;
            if (!slot) {
                slot = deletion_curves(model, g, explanations, direction_of(k), options);
            }
            const MetricCurve curve = is_probability_metric(k) ? slot->probabilities : slot->loyalty;
            curves.push_back({label, curve});
            ensure_dir(plots);
            const std::string stem = std::string(to_string(k)) + "_" + label.method;
            text::write_file((plots / (stem + ".svg")).string(),
                             curve_svg(curve, label.method + " on " + g.name() + " (" + arch + ", " +
                                                  (loops ? "with" : "without") + " self-loops)"));
            out << label.method << " " << to_string(k) << " AUC " << text::format_double(curve.auc()) << " ("
                << curve.n_evaluated << " evaluated, " << curve.n_excluded << " excluded)\n";
        }
        if (!a.baseline.empty()) {
            baselines.push_back({label, all_deleted_loyalty(model, g, explanations, a.jobs)});
            if (baseline_nodes.empty()) {
                for (const auto& e : explanations) {
                    baseline_nodes.push_back(e.target);
                }
            }
        }
    }
    if (!a.baseline.empty()) {
        if (baseline_nodes.empty()) {
            baseline_nodes = g.nodes_in(Split::Test);
        }
        baselines.push_back({{"without_neighbors", g.name(), arch, loops},
                             all_neighbors_deleted_loyalty(model, g, baseline_nodes, a.jobs)});
        text::write_file((fs::path(a.out) / "baselines.csv").string(), baselines_csv(baselines));
        for (const auto& b : baselines) {
            out << "all deleted (" << b.label.method << "): loyalty " << text::format_double(b.result.loyalty) << "\n";
        }
    }
    if (!curves.empty()) {
        text::write_file((fs::path(a.out) / "curves.csv").string(), curves_csv(curves));
        text::write_file((fs::path(a.out) / "auc.csv").string(), auc_csv(curves));
    }
    return kOk;
}

struct GadgetRow {
    NodeId node = 0;
    bool pendant = false;
    double max_gradient = 0.0;
    double mean_gradient = 0.0;
    double logit_change = 0.0;
    double probability_change = 0.0;
};

int cmd_gadget(const GadgetArgs& a, std::ostream& out) {
    const Gadget gadget = make_gadget();
    const Graph g = set_self_loops(gadget.graph, a.self_loops);
    ModelConfig config = ModelConfig::defaults(Architecture::GCN);
    config.self_loops = a.self_loops;
    config.seed = a.seed;
    config.epochs = a.epochs;
    const TrainedModel model = train(g, config);

    const Subgraph sg = khop_subgraph(g, gadget.classified, 2);
    RecordedSubgraph rec = forward_recorded(model, sg);
    const std::size_t cls = rec.prediction.predicted_class;
    const Var y = rec.tape.pick(rec.logits, rec.center_local, cls);
    const DenseMatrix grad = backward(rec.tape, y)[rec.features];

    std::vector<GadgetRow> rows;
    for (NodeId v : sg.neighbor_ids) {
        GadgetRow r;
        r.node = v;
        r.pendant = v == gadget.pendant;
        const std::size_t local = sg.local_index(v);
        for (double d : grad.row(local)) {
            r.max_gradient = std::max(r.max_gradient, std::abs(d));
            r.mean_gradient += std::abs(d) / static_cast<double>(grad.cols());
        }
        const NodeId victim[] = {v};
        const Prediction after = forward(model, delete_neighbors(sg, victim));
        r.logit_change = std::abs(after.logits[cls] - rec.prediction.logits[cls]);
        r.probability_change = std::abs(after.probabilities[cls] - rec.prediction.probabilities[cls]);
        rows.push_back(r);
    }

    if (a.json) {
        nlohmann::ordered_json j;
        j["self_loops"] = a.self_loops;
        j["classified"] = gadget.classified;
        j["pendant"] = gadget.pendant;
        j["predicted_class"] = cls;
        j["neighbors"] = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            j["neighbors"].push_back({{"node", r.node},
                                      {"pendant", r.pendant},
                                      {"max_abs_gradient", r.max_gradient},
                                      {"mean_abs_gradient", r.mean_gradient},
                                      {"logit_change", r.logit_change},
                                      {"probability_change", r.probability_change}});
        }
        out << j.dump(2) << "\n";
        return kOk;
    }
    out << "gadget: classified node " << gadget.classified << ", pendant node " << gadget.pendant << ", self-loops "
        << (a.self_loops ? "on" : "off") << ", predicted class " << cls << "\n";
    for (const auto& r : rows) {
        out << "node " << r.node << (r.pendant ? " (pendant)" : "") << ": max |gradient| "
            << text::format_double(r.max_gradient) << ", mean |gradient| " << text::format_double(r.mean_gradient)
            << ", |delta logit| on deletion " << text::format_double(r.logit_change) << ", |delta probability| "
            << text::format_double(r.probability_change) << "\n";
    }
    return kOk;
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 computation failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < length; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return hex.str();
}

int cmd_convert_check(const ConvertCheckArgs& a, std::ostream& out) {
    const Graph g = load_graph(a.dataset);
    auto expect = [&](std::size_t expected, std::size_t actual, const char* what) {
        if (expected != 0 && expected != actual) {
            throw ConfigError(a.dataset + ": expected " + std::to_string(expected) + " " + what + ", found " +
                              std::to_string(actual));
        }
    };
    expect(a.expect_nodes, g.num_nodes(), "nodes");
    expect(a.expect_features, g.num_features(), "features");
    expect(a.expect_classes, g.num_classes(), "classes");

    std::size_t loops = 0;
    std::size_t asymmetric = 0;
    for (const Edge& e : g.edges()) {
        loops += e.source == e.target ? 1 : 0;
        asymmetric += g.has_edge(e.target, e.source) ? 0 : 1;
    }
    out << "dataset " << g.name() << ": " << g.num_nodes() << " nodes, " << g.num_features() << " features, "
        << g.num_classes() << " classes, " << g.edges().size() << " edges (" << loops << " self-loops, "
        << asymmetric << " without reverse)\n";
    out << "split: " << g.nodes_in(Split::Train).size() << " train, " << g.nodes_in(Split::Val).size() << " val, "
        << g.nodes_in(Split::Test).size() << " test\n";

    const fs::path sums = fs::path(a.dataset) / "checksums.txt";
    if (const auto listing = text::read_file(sums.string())) {
        std::size_t checked = 0;
        for (auto line : text::split(*listing, '\n')) {
            line = text::trim(line);
            if (line.empty()) {
                continue;
            }
            const auto space = line.find(' ');
            if (space == std::string_view::npos) {
                throw ConfigError(sums.string() + ": malformed line '" + std::string(line) + "'");
            }
            const std::string expected(line.substr(0, space));
            std::string name(text::trim(line.substr(space + 1)));
            if (!name.empty() && name.front() == '*') {
                name.erase(0, 1);
            }
            const auto contents = text::read_file((fs::path(a.dataset) / name).string());
            if (!contents) {
                throw ConfigError(sums.string() + " lists missing file " + name);
            }
            if (sha256_hex(*contents) != expected) {
                throw ConfigError("checksum mismatch for " + (fs::path(a.dataset) / name).string());
            }
            ++checked;
        }
        out << "checksums: " << checked << " files verified\n";
    } else {
        out << "checksums: none found\n";
    }
    out << "ok\n";
    return kOk;
}

int cmd_synthetic(const SyntheticArgs& a, std::ostream& out) {
    std::optional<Graph> g;
    if (a.kind == "planted") {
        PlantedMotifConfig c;
        c.seed = a.seed;
        c.self_loops = a.self_loops;
        g = make_planted_motif_graph(c);
    } else if (a.kind == "carrier") {
        CarrierStarConfig c;
        c.seed = a.seed;
        c.self_loops = a.self_loops;
        g = make_carrier_star_graph(c);
    } else if (a.kind == "random") {
        RandomGraphConfig c;
        c.seed = a.seed;
        c.self_loops = a.self_loops;
        c.num_nodes = a.nodes;
        g = make_random_graph(c);
    } else if (a.kind == "separable") {
        g = set_self_loops(make_separable_graph(), a.self_loops);
    } else if (a.kind == "gadget") {
        g = set_self_loops(make_gadget().graph, a.self_loops);
    } else {
        throw ConfigError("unknown synthetic kind '" + a.kind + "' (expected planted, carrier, random, separable, gadget)");
    }
    ensure_dir(a.out);
    save_graph(*g, a.out);
    out << "wrote " << g->name() << " (" << g->num_nodes() << " nodes, " << g->edges().size() << " edges) to "
        << a.out << "\n";
    return kOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Neighbor-importance explanations for two-layer GNN node classifiers", "nxai"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read option values from a key = value file (use [section] per subcommand)");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a two-layer GCN or GATv2 classifier");
    train_cmd->add_option("--dataset", train_args.dataset, "Dataset directory (interchange format)")->required();
    train_cmd->add_option("--arch", train_args.arch, "gcn or gat")->capture_default_str();
    train_cmd->add_flag("--self-loops,!--no-self-loops", train_args.self_loops, "Add or strip self-loops")
        ->capture_default_str();
    add_seed(train_cmd, train_args.seed);
    train_cmd->add_option("--epochs", train_args.epochs)->capture_default_str();
    train_cmd->add_option("--hidden-dim", train_args.hidden_dim, "Hidden width (0: 16 for GCN, 8 per head for GAT)");
    train_cmd->add_option("--heads", train_args.heads)->capture_default_str();
    train_cmd->add_option("--learning-rate", train_args.learning_rate)->capture_default_str();
    train_cmd->add_option("--weight-decay", train_args.weight_decay)->capture_default_str();
    train_cmd->add_option("--dropout", train_args.dropout)->capture_default_str();
    train_cmd->add_option("--out", train_args.out, "Output directory")->capture_default_str();

    ExplainArgs explain_args;
    auto* explain_cmd = app.add_subcommand("explain", "Explain node predictions of a trained model");
    explain_cmd->add_option("--dataset", explain_args.dataset)->required();
    explain_cmd->add_option("--model", explain_args.model, "Model checkpoint")->required();
    explain_cmd->add_option("--method", explain_args.methods, "Explainer name(s) or all")
        ->required()
        ->delimiter(',');
    explain_cmd->add_option("--out", explain_args.out)->capture_default_str();
    explain_cmd->add_option("--nodes", explain_args.nodes, "test, val, train or all")->capture_default_str();
    explain_cmd->add_option("--ids", explain_args.ids, "Explicit node ids")->delimiter(',');
    explain_cmd->add_option("--limit", explain_args.limit, "Explain at most this many nodes (0: no limit)");
    explain_cmd->add_option("--jobs", explain_args.jobs)->capture_default_str()->check(CLI::PositiveNumber);
    add_seed(explain_cmd, explain_args.seed);
    explain_cmd->add_flag("--train-explainer", explain_args.train_explainer, "Train and save the PGExplainer MLP");
    explain_cmd->add_option("--explainer", explain_args.explainer,
                            "PGExplainer artifact (default OUT/pgexplainer_model.json)");
    explain_cmd->add_option("--smoothgrad-samples", explain_args.smoothgrad_samples)->capture_default_str();
    explain_cmd->add_option("--smoothgrad-sigma", explain_args.smoothgrad_sigma,
                            "Noise level (default 0.15 x feature range)");
    explain_cmd->add_option("--mask-epochs", explain_args.mask_epochs)->capture_default_str();
    explain_cmd->add_option("--mask-learning-rate", explain_args.mask_learning_rate)->capture_default_str();
    explain_cmd->add_option("--mask-size", explain_args.mask_size, "Weight of the mean mask size penalty")
        ->capture_default_str();
    explain_cmd->add_option("--mask-entropy", explain_args.mask_entropy, "Weight of the mask entropy penalty")
        ->capture_default_str();
    explain_cmd->add_option("--pg-epochs", explain_args.pg_epochs)->capture_default_str();
    explain_cmd->add_option("--pg-learning-rate", explain_args.pg_learning_rate)->capture_default_str();

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "Compute loyalty curves, AUC tables and plots");
    eval_cmd->add_option("--dataset", eval_args.dataset)->required();
    eval_cmd->add_option("--model", eval_args.model)->required();
    eval_cmd->add_option("--explanations", eval_args.explanations, "Explanation JSONL files")->delimiter(',');
    eval_cmd->add_option("--explanations-dir", eval_args.explanations_dir,
                         "Directory holding explanations_<method>.jsonl files");
    eval_cmd->add_option("--metrics", eval_args.metrics, "Metric names (default all four)")->delimiter(',');
    eval_cmd->add_option("--baseline", eval_args.baseline, "without-neighbors");
    eval_cmd->add_option("--out", eval_args.out)->capture_default_str();
    eval_cmd->add_option("--jobs", eval_args.jobs)->capture_default_str()->check(CLI::PositiveNumber);

    GadgetArgs gadget_args;
    auto* gadget_cmd = app.add_subcommand("gadget", "Zero-gradient neighbor demonstration on a six-node graph");
    gadget_cmd->add_flag("--self-loops,!--no-self-loops", gadget_args.self_loops)->capture_default_str();
    gadget_cmd->add_flag("--json", gadget_args.json, "Machine-readable report");
    add_seed(gadget_cmd, gadget_args.seed);
    gadget_cmd->add_option("--epochs", gadget_args.epochs)->capture_default_str();

    ConvertCheckArgs check_args;
    auto* check_cmd = app.add_subcommand("convert-check", "Validate a converted dataset directory");
    check_cmd->add_option("dataset,--dataset", check_args.dataset)->required();
    check_cmd->add_option("--expect-nodes", check_args.expect_nodes);
    check_cmd->add_option("--expect-features", check_args.expect_features);
    check_cmd->add_option("--expect-classes", check_args.expect_classes);

    SyntheticArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synthetic", "Write a synthetic dataset in the interchange format");
    synth_cmd->add_option("--kind", synth_args.kind, "planted, carrier, random, separable or gadget")
        ->capture_default_str();
    synth_cmd->add_option("--out", synth_args.out)->required();
    add_seed(synth_cmd, synth_args.seed);
    synth_cmd->add_flag("--self-loops,!--no-self-loops", synth_args.self_loops)->capture_default_str();
    synth_cmd->add_option("--nodes", synth_args.nodes, "Node count for random graphs")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (train_cmd->parsed()) {
            return cmd_train(train_args, out);
        }
        if (explain_cmd->parsed()) {
            return cmd_explain(explain_args, out);
        }
        if (eval_cmd->parsed()) {
            return cmd_evaluate(eval_args, out);
        }
        if (gadget_cmd->parsed()) {
            return cmd_gadget(gadget_args, out);
        }
        if (check_cmd->parsed()) {
            return cmd_convert_check(check_args, out);
        }
        if (synth_cmd->parsed()) {
            return cmd_synthetic(synth_args, out);
        }
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return kNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kUsage;
}

} // namespace nxai::cli
