#pragma once

#include "nxai/autodiff.hpp"
#include "nxai/graph.hpp"
#include "nxai/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nxai {

enum class Architecture { GCN, GATv2 };

std::string_view to_string(Architecture arch) noexcept;
Architecture parse_architecture(std::string_view name);

struct ModelConfig {
    Architecture arch = Architecture::GCN;
    /// Hidden width (GCN) or per-head width (GATv2).
    std::size_t hidden_dim = 16;
    /// GATv2 attention heads in the first layer (concatenated) and the output layer (averaged).
    std::size_t heads = 8;
    std::size_t output_heads = 1;
    double dropout_rate = 0.5;
    double attention_slope = 0.2;
    bool self_loops = true;
    std::uint64_t seed = 0;
    std::size_t epochs = 200;
    double learning_rate = 0.01;
    double weight_decay = 5e-4;

    /// Conventional settings: GCN 16 hidden units; GATv2 8 heads x 8 units.
    static ModelConfig defaults(Architecture arch);
    void validate() const;
};

struct Parameter {
    std::string name;
    DenseMatrix value;
};

struct EpochLog {
    std::size_t epoch = 0;
    double loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
};

struct Prediction {
    NodeId node = 0;
    std::vector<double> logits;
    std::vector<double> probabilities;
    std::size_t predicted_class = 0;
};

/// Evaluation mode unless `training` is set, in which case inverted dropout
/// draws its masks from `dropout_rng`.
struct ForwardOptions {
    bool training = false;
    Rng* dropout_rng = nullptr;
    /// Optional E x 1 multiplier applied to every message in both layers.
    std::optional<Var> edge_mask;
};

/// Parameters placed on a tape by `TrainedModel::record`.
struct RecordedForward {
    Var logits;
    std::vector<Var> parameters;
};

/// Two-layer GCN or GATv2 node classifier with a ReLU between the layers.
class TrainedModel {
public:
    TrainedModel(ModelConfig config, std::size_t in_features, std::size_t num_classes,
                 std::vector<Parameter> parameters, std::vector<EpochLog> log = {});

    /// Glorot-uniform weights and zero biases drawn from the "init" stream of config.seed.
    static TrainedModel initialize(const ModelConfig& config, std::size_t in_features, std::size_t num_classes);

    const ModelConfig& config() const noexcept { return config_; }
    std::size_t in_features() const noexcept { return in_features_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    const std::vector<Parameter>& parameters() const noexcept { return parameters_; }
    std::vector<Parameter>& mutable_parameters() noexcept { return parameters_; }
    const DenseMatrix& parameter(std::string_view name) const;
    DenseMatrix& parameter(std::string_view name);
    const std::vector<EpochLog>& log() const noexcept { return log_; }
    void set_log(std::vector<EpochLog> log) { log_ = std::move(log); }

    /// Expected parameter names and shapes for this configuration.
    static std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>>
    parameter_shapes(const ModelConfig& config, std::size_t in_features, std::size_t num_classes);

    /// Records the forward pass onto `tape`; parameters become differentiable leaves.
    RecordedForward record(Tape& tape, Var features, const ComputeGraph& graph, const ForwardOptions& options = {}) const;

    /// All-node logits on the whole graph (evaluation mode).
    DenseMatrix logits(const ComputeGraph& graph) const;

private:
    ModelConfig config_;
    std::size_t in_features_ = 0;
    std::size_t num_classes_ = 0;
    std::vector<Parameter> parameters_;
    std::vector<EpochLog> log_;
};

/// Argmax with ties broken by the lowest class id.
std::size_t argmax(std::span<const double> values);
Prediction make_prediction(NodeId node, std::span<const double> logits);

/// Prediction for the subgraph's center (evaluation mode).
Prediction forward(const TrainedModel& model, const Subgraph& sg);

/// Forward pass on a subgraph recorded for differentiation w.r.t. the
/// feature rows of every subgraph node.
struct RecordedSubgraph {
    Tape tape;
    Var features;
    Var logits;
    std::size_t center_local = 0;
    Prediction prediction;
};
RecordedSubgraph forward_recorded(const TrainedModel& model, const Subgraph& sg);

std::vector<Prediction> predict_all(const TrainedModel& model, const Graph& g, std::span<const NodeId> nodes);

double accuracy(const TrainedModel& model, const Graph& g, Split split);

/// Full-batch training with Adam on the cross-entropy of train-mask nodes.
/// Deterministic given config.seed. The graph's edge list is used as is; its
/// self-loop flag must match config.self_loops.
TrainedModel train(const Graph& g, const ModelConfig& config);

} // namespace nxai
