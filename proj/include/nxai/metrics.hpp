#pragma once

#include "nxai/explainers.hpp"
#include "nxai/graph.hpp"
#include "nxai/model.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace nxai {

enum class MetricKind { Loyalty, InverseLoyalty, LoyaltyProbabilities, InverseLoyaltyProbabilities };

std::string_view to_string(MetricKind kind) noexcept;
MetricKind parse_metric(std::string_view name);
/// Deletion order used by a metric: inverse variants delete least important first.
Direction direction_of(MetricKind kind) noexcept;
bool is_probability_metric(MetricKind kind) noexcept;

struct MetricPoint {
    double percent = 0.0;
    double value = 0.0;
};

struct MetricCurve {
    MetricKind kind = MetricKind::Loyalty;
    std::vector<MetricPoint> points;
    /// Nodes averaged into every point, and nodes skipped for having no
    /// nonzero-importance neighbor.
    std::size_t n_evaluated = 0;
    std::size_t n_excluded = 0;

    Direction direction() const noexcept { return direction_of(kind); }
    double auc() const;
};

/// 0, 10, ..., 100.
const std::vector<double>& default_percents();

/// Cumulative victim counts round(t * m / 100), rounding halves up.
std::vector<std::size_t> schedule_counts(std::size_t m, std::span<const double> percents);

struct DeletionSchedule {
    std::vector<NodeId> order;
    std::vector<double> percents;
    std::vector<std::size_t> counts;

    /// Victims at step s: the first counts[s] entries of `order`.
    std::span<const NodeId> victims(std::size_t step) const { return {order.data(), counts.at(step)}; }
};

DeletionSchedule schedule(std::vector<NodeId> neighbors, std::span<const double> percents);

/// Trapezoidal area under the curve with the percent axis rescaled to [0, 1].
double auc(std::span<const MetricPoint> points);

struct EvaluationOptions {
    std::vector<double> percents = default_percents();
    std::size_t jobs = 1;
};

/// Loyalty curve and probability-change curve from one deletion sweep.
struct DeletionCurves {
    MetricCurve loyalty;
    MetricCurve probabilities;
};

/// Deletes neighbors in the order given by `direction` and records, per
/// percent, the share of nodes keeping their original class and the mean
/// absolute change of the original class probability. Each explanation must
/// belong to the same model and graph (predicted class and neighbor set are checked).
DeletionCurves deletion_curves(const TrainedModel& model, const Graph& g, const std::vector<Explanation>& explanations,
                               Direction direction, const EvaluationOptions& options = {});

MetricCurve loyalty(const TrainedModel& model, const Graph& g, const std::vector<Explanation>& explanations,
                    Direction direction, const EvaluationOptions& options = {});
MetricCurve loyalty_probabilities(const TrainedModel& model, const Graph& g,
                                  const std::vector<Explanation>& explanations, Direction direction,
                                  const EvaluationOptions& options = {});
MetricCurve evaluate_metric(MetricKind kind, const TrainedModel& model, const Graph& g,
                            const std::vector<Explanation>& explanations, const EvaluationOptions& options = {});

struct AllDeletedResult {
    double loyalty = 1.0;
    std::size_t n_evaluated = 0;
    std::size_t n_excluded = 0;
};

/// Loyalty after removing every neighbor with nonzero importance.
AllDeletedResult all_deleted_loyalty(const TrainedModel& model, const Graph& g,
                                     const std::vector<Explanation>& explanations, std::size_t jobs = 1);
/// Loyalty after removing the whole receptive field of each node.
AllDeletedResult all_neighbors_deleted_loyalty(const TrainedModel& model, const Graph& g,
                                               const std::vector<NodeId>& nodes, std::size_t jobs = 1);

/// Checks that `e` matches the model's prediction and the receptive field of
/// its target; throws ConfigError otherwise.
void check_explanation(const TrainedModel& model, const Graph& g, const Explanation& e);

} // namespace nxai
