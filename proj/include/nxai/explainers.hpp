#pragma once

#include "nxai/autodiff.hpp"
#include "nxai/graph.hpp"
#include "nxai/model.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

namespace nxai {

enum class Method { Saliency, SmoothGrad, Deconvnet, Guided, GNNExplainer, PGExplainer };

std::string_view to_string(Method method) noexcept;
/// Accepts the names produced by to_string plus a few common spellings.
Method parse_method(std::string_view name);
const std::array<Method, 6>& all_methods() noexcept;
/// True for every method whose scores depend on feature gradients, including
/// GNNExplainer through its hard mask.
bool uses_gradients(Method method) noexcept;

/// Neighbor importances for one classified node. Keys of `importance` and
/// `raw` are exactly the receptive-field neighbors of `target`.
struct Explanation {
    NodeId target = 0;
    Method method = Method::Saliency;
    std::size_t predicted_class = 0;
    std::map<NodeId, double> importance;
    std::map<NodeId, double> raw;
};

enum class Direction { Descending, Ascending };
std::string_view to_string(Direction direction) noexcept;

/// Neighbors whose raw score magnitude exceeds 1e-12, ordered by importance
/// (ties by ascending id).
std::vector<NodeId> nonzero_neighbors(const Explanation& e, Direction direction = Direction::Descending);

// Normalizers over a raw score map. `active` lists the keys that take part in
// min-max scaling; every other key scores 0.
std::map<NodeId, double> normalize_by_max(const std::map<NodeId, double>& raw);
std::map<NodeId, double> normalize_min_max(const std::map<NodeId, double>& raw, const std::vector<NodeId>& active);

/// Mean over features of |d logit_c / d X_i| for every neighbor i of the
/// subgraph center, with the chosen ReLU backward rule.
std::map<NodeId, double> gradient_scores(const TrainedModel& model, const Subgraph& sg, std::size_t cls,
                                         BackpropMode mode);

Explanation saliency(const TrainedModel& model, const Graph& g, NodeId target);
Explanation deconvnet_explain(const TrainedModel& model, const Graph& g, NodeId target);
Explanation guided_explain(const TrainedModel& model, const Graph& g, NodeId target);

struct SmoothGradConfig {
    std::size_t n = 50;
    double sigma = 0.0;
    std::uint64_t seed = 0;

    /// n = 50 and sigma = 0.15 times the spread of the graph's feature values.
    static SmoothGradConfig defaults(const Graph& g, std::uint64_t seed = 0);
    void validate() const;
};

Explanation smoothgrad(const TrainedModel& model, const Graph& g, NodeId target, const SmoothGradConfig& cfg);

struct MaskTrainConfig {
    std::size_t epochs = 100;
    double learning_rate = 0.01;
    double size_coefficient = 1.0;
    double entropy_coefficient = 0.1;
    double init_std = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Loss after every accepted step of the node-mask optimization; element 0
/// is the loss at initialization.
struct MaskTrace {
    std::vector<double> losses;
    double final_learning_rate = 0.0;
};

/// Node-mask explainer. Only nodes whose mask receives a nonzero gradient
/// from the prediction loss at initialization are trained and scored; the
/// rest keep raw score 0.
Explanation gnnexplainer(const TrainedModel& model, const Graph& g, NodeId target, const MaskTrainConfig& cfg,
                         MaskTrace* trace = nullptr);

struct PGExplainerConfig {
    std::size_t epochs = 30;
    double learning_rate = 0.003;
    std::size_t hidden_dim = 64;
    double size_coefficient = 0.05;
    double entropy_coefficient = 1.0;
    double temperature_start = 5.0;
    double temperature_end = 1.0;
    /// Start the output layer at zero so every edge logit is initially equal.
    bool zero_init_output = false;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Edge-weight MLP over concatenated final-layer embeddings [z_i; z_j; z_k].
class PGExplainerModel {
public:
    PGExplainerModel(PGExplainerConfig config, std::size_t embedding_dim, std::vector<Parameter> parameters);

    static PGExplainerModel initialize(const PGExplainerConfig& config, std::size_t embedding_dim);

    const PGExplainerConfig& config() const noexcept { return config_; }
    std::size_t embedding_dim() const noexcept { return embedding_dim_; }
    const std::vector<Parameter>& parameters() const noexcept { return parameters_; }
    std::vector<Parameter>& mutable_parameters() noexcept { return parameters_; }

    /// Logit of edge (i -> j) for the node k being explained.
    double edge_logit(const DenseMatrix& embeddings, NodeId i, NodeId j, NodeId k) const;

    /// Records edge logits for every edge of `edges` (local ids) onto `tape`,
    /// with `inputs` the E x 3d matrix of concatenated embeddings.
    Var record(Tape& tape, Var inputs, std::vector<Var>& params) const;

private:
    PGExplainerConfig config_;
    std::size_t embedding_dim_ = 0;
    std::vector<Parameter> parameters_;
};

/// Final-layer (pre-softmax) representations of every node on the whole graph.
DenseMatrix node_embeddings(const TrainedModel& model, const Graph& g);

/// Loss per epoch (mean over training nodes) when `losses` is given.
PGExplainerModel pgexplainer_train(const TrainedModel& model, const Graph& g, const std::vector<NodeId>& nodes,
                                   const PGExplainerConfig& cfg, std::vector<double>* losses = nullptr);

Explanation pgexplainer_explain(const PGExplainerModel& pgm, const TrainedModel& model, const Graph& g,
                                NodeId target, const DenseMatrix& embeddings);
Explanation pgexplainer_explain(const PGExplainerModel& pgm, const TrainedModel& model, const Graph& g,
                                NodeId target);

/// Per-method settings for `explain`.
struct ExplainerSettings {
    SmoothGradConfig smoothgrad;
    MaskTrainConfig gnnexplainer;
    const PGExplainerModel* pgexplainer = nullptr;
    /// Cached embeddings for PGExplainer; computed on demand when empty.
    DenseMatrix embeddings;
};

Explanation explain(Method method, const TrainedModel& model, const Graph& g, NodeId target,
                    const ExplainerSettings& settings);

/// Explains every node of `targets`, spreading the work over `jobs` threads.
/// Results follow the order of `targets`.
std::vector<Explanation> explain_all(Method method, const TrainedModel& model, const Graph& g,
                                     const std::vector<NodeId>& targets, const ExplainerSettings& settings,
                                     std::size_t jobs = 1);

} // namespace nxai
