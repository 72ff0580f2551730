#include "nxai/autodiff.hpp"
#include "nxai/checkpoint.hpp"
#include "nxai/explainers.hpp"
#include "nxai/graph.hpp"
#include "nxai/graph_io.hpp"
#include "nxai/metrics.hpp"
#include "nxai/model.hpp"
#include "nxai/synthetic.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace nxai;

namespace {

py::array_t<double> to_numpy(const DenseMatrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

BackpropMode parse_mode(const std::string& name) {
    if (name == "standard") return BackpropMode::Standard;
    if (name == "deconvnet") return BackpropMode::Deconvnet;
    if (name == "guided") return BackpropMode::Guided;
    throw ConfigError("unknown backprop mode: " + name);
}

Direction parse_direction(const std::string& name) {
    if (name == "desc") return Direction::Descending;
    if (name == "asc") return Direction::Ascending;
    throw ConfigError("unknown direction: " + name);
}

py::dict curve_dict(const MetricCurve& c) {
    py::list percents;
    py::list values;
    for (const auto& p : c.points) {
        percents.append(p.percent);
        values.append(p.value);
    }
    py::dict d;
    d["metric"] = std::string(to_string(c.kind));
    d["percents"] = percents;
    d["values"] = values;
    d["auc"] = c.auc();
    d["n_evaluated"] = c.n_evaluated;
    d["n_excluded"] = c.n_excluded;
    return d;
}

py::dict all_deleted_dict(const AllDeletedResult& r) {
    py::dict d;
    d["loyalty"] = r.loyalty;
    d["n_evaluated"] = r.n_evaluated;
    d["n_excluded"] = r.n_excluded;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Neighbor-importance explainers and loyalty metrics for GCN and GATv2 node classifiers.";

    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
    py::register_exception<GraphError>(m, "GraphError", error.ptr());

    py::class_<Graph>(m, "Graph")
        .def_property_readonly("name", &Graph::name)
        .def_property_readonly("num_nodes", &Graph::num_nodes)
        .def_property_readonly("num_features", &Graph::num_features)
        .def_property_readonly("num_classes", &Graph::num_classes)
        .def_property_readonly("has_self_loops", &Graph::has_self_loops)
        .def_property_readonly("features", [](const Graph& g) { return to_numpy(g.features()); })
        .def_property_readonly("labels", &Graph::labels)
        .def_property_readonly("edges",
                               [](const Graph& g) {
                                   std::vector<std::pair<NodeId, NodeId>> out;
                                   for (const Edge& e : g.edges()) {
                                       out.emplace_back(e.source, e.target);
                                   }
                                   return out;
                               })
        .def(
            "nodes_in",
            [](const Graph& g, const std::string& split) {
                for (Split s : {Split::None, Split::Train, Split::Val, Split::Test}) {
                    if (to_string(s) == split) {
                        return g.nodes_in(s);
                    }
                }
                throw ConfigError("unknown split: " + split);
            },
            py::arg("split"))
        .def(
            "receptive_field",
            [](const Graph& g, NodeId center, std::size_t hops) { return khop_subgraph(g, center, hops).neighbor_ids; },
            py::arg("center"), py::arg("hops") = 2, "Neighbors within `hops` incoming edges, excluding the center.");

    m.def("load_graph", &load_graph, py::arg("directory"));
    m.def("save_graph", &save_graph, py::arg("graph"), py::arg("directory"));
    m.def("set_self_loops", &set_self_loops, py::arg("graph"), py::arg("enabled"));
    m.def(
        "random_graph",
        [](std::size_t nodes, std::size_t features, std::size_t classes, double p, bool undirected, bool loops,
           std::uint64_t seed) {
            return make_random_graph({nodes, features, classes, p, undirected, loops, seed});
        },
        py::arg("num_nodes") = 10, py::arg("num_features") = 4, py::arg("num_classes") = 3,
        py::arg("edge_probability") = 0.3, py::arg("undirected") = true, py::arg("self_loops") = false,
        py::arg("seed") = 0);
    m.def(
        "planted_motif_graph",
        [](bool loops, std::uint64_t seed) {
            PlantedMotifConfig c;
            c.self_loops = loops;
            c.seed = seed;
            return make_planted_motif_graph(c);
        },
        py::arg("self_loops") = false, py::arg("seed") = 0);
    m.def("gadget", [] {
        const Gadget gd = make_gadget();
        return py::make_tuple(gd.graph, gd.classified, gd.pendant);
    });

    py::class_<TrainedModel>(m, "Model")
        .def_property_readonly("architecture", [](const TrainedModel& t) { return std::string(to_string(t.config().arch)); })
        .def_property_readonly("self_loops", [](const TrainedModel& t) { return t.config().self_loops; })
        .def_property_readonly("num_classes", &TrainedModel::num_classes)
        .def_property_readonly("parameter_names",
                               [](const TrainedModel& t) {
                                   std::vector<std::string> names;
                                   for (const auto& p : t.parameters()) {
                                       names.push_back(p.name);
                                   }
                                   return names;
                               })
        .def("parameter", [](const TrainedModel& t, const std::string& name) { return to_numpy(t.parameter(name)); })
        .def(
            "predict",
            [](const TrainedModel& t, const Graph& g, NodeId node) {
                const Prediction p = forward(t, khop_subgraph(g, node, 2));
                return py::make_tuple(p.predicted_class, p.probabilities);
            },
            py::arg("graph"), py::arg("node"), "Predicted class and class probabilities of one node.")
        .def("accuracy", [](const TrainedModel& t, const Graph& g, const std::string& split) {
            for (Split s : {Split::Train, Split::Val, Split::Test}) {
                if (to_string(s) == split) {
                    return accuracy(t, g, s);
                }
            }
            throw ConfigError("unknown split: " + split);
        });

    m.def(
        "train",
        [](const Graph& g, const std::string& arch, bool loops, std::size_t epochs, std::uint64_t seed) {
            ModelConfig c = ModelConfig::defaults(parse_architecture(arch));
            c.self_loops = loops;
            c.epochs = epochs;
            c.seed = seed;
            py::gil_scoped_release release;
            return train(g, c);
        },
        py::arg("graph"), py::arg("arch") = "gcn", py::arg("self_loops") = true, py::arg("epochs") = 200,
        py::arg("seed") = 0);
    m.def("load_model", &load_model, py::arg("path"));
    m.def("save_model", &save_model, py::arg("model"), py::arg("path"));

    py::class_<Explanation>(m, "Explanation")
        .def_readonly("target", &Explanation::target)
        .def_property_readonly("method", [](const Explanation& e) { return std::string(to_string(e.method)); })
        .def_readonly("predicted_class", &Explanation::predicted_class)
        .def_readonly("importance", &Explanation::importance)
        .def_readonly("raw", &Explanation::raw)
        .def(
            "nonzero_neighbors",
            [](const Explanation& e, const std::string& direction) {
                return nonzero_neighbors(e, parse_direction(direction));
            },
            py::arg("direction") = "desc");

    py::class_<PGExplainerModel>(m, "PGExplainer");
    m.def(
        "train_pgexplainer",
        [](const TrainedModel& model, const Graph& g, const std::vector<NodeId>& nodes, std::size_t epochs,
           std::uint64_t seed) {
            PGExplainerConfig c;
            c.epochs = epochs;
            c.seed = seed;
            py::gil_scoped_release release;
            return pgexplainer_train(model, g, nodes, c);
        },
        py::arg("model"), py::arg("graph"), py::arg("nodes"), py::arg("epochs") = 30, py::arg("seed") = 0);

    m.def(
        "explain",
        [](const std::string& method, const TrainedModel& model, const Graph& g, const std::vector<NodeId>& targets,
           const PGExplainerModel* pg, std::size_t smoothgrad_samples, std::size_t mask_epochs, std::uint64_t seed,
           std::size_t jobs) {
            ExplainerSettings s;
            s.smoothgrad = SmoothGradConfig::defaults(g, seed);
            s.smoothgrad.n = smoothgrad_samples;
            s.gnnexplainer.epochs = mask_epochs;
            s.gnnexplainer.seed = seed;
            s.pgexplainer = pg;
            py::gil_scoped_release release;
            return explain_all(parse_method(method), model, g, targets, s, jobs);
        },
        py::arg("method"), py::arg("model"), py::arg("graph"), py::arg("targets"), py::arg("pgexplainer") = nullptr,
        py::arg("smoothgrad_samples") = 50, py::arg("mask_epochs") = 100, py::arg("seed") = 0, py::arg("jobs") = 1);

    m.def(
        "evaluate",
        [](const std::string& metric, const TrainedModel& model, const Graph& g,
           const std::vector<Explanation>& explanations, std::size_t jobs) {
            EvaluationOptions o;
            o.jobs = jobs;
            MetricCurve c;
            {
                py::gil_scoped_release release;
                c = evaluate_metric(parse_metric(metric), model, g, explanations, o);
            }
            return curve_dict(c);
        },
        py::arg("metric"), py::arg("model"), py::arg("graph"), py::arg("explanations"), py::arg("jobs") = 1);
    m.def(
        "all_deleted",
        [](const TrainedModel& model, const Graph& g, const std::vector<Explanation>& explanations) {
            return all_deleted_dict(all_deleted_loyalty(model, g, explanations));
        },
        py::arg("model"), py::arg("graph"), py::arg("explanations"));
    m.def(
        "without_neighbors",
        [](const TrainedModel& model, const Graph& g, const std::vector<NodeId>& nodes) {
            return all_deleted_dict(all_neighbors_deleted_loyalty(model, g, nodes));
        },
        py::arg("model"), py::arg("graph"), py::arg("nodes"));
    m.def(
        "auc",
        [](const std::vector<double>& percents, const std::vector<double>& values) {
            if (percents.size() != values.size()) {
                throw ShapeError("percents and values differ in length");
            }
            std::vector<MetricPoint> pts;
            for (std::size_t i = 0; i < percents.size(); ++i) {
                pts.push_back({percents[i], values[i]});
            }
            return auc(pts);
        },
        py::arg("percents"), py::arg("values"));
    m.def(
        "relu_backward",
        [](const std::string& mode, double x, double g) { return relu_backward(parse_mode(mode), x, g); },
        py::arg("mode"), py::arg("x"), py::arg("grad"));
}
