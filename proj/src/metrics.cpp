#include "nxai/metrics.hpp"

#include "nxai/parallel.hpp"

#include <cmath>
#include <string>

namespace nxai {

namespace {

constexpr std::size_t kHops = 2;

void check_against(const Subgraph& sg, const Prediction& original, const Explanation& e) {
    if (e.predicted_class != original.predicted_class) {
        throw ConfigError("explanation for node " + std::to_string(e.target) + " records class " +
                          std::to_string(e.predicted_class) + " but the model predicts " +
                          std::to_string(original.predicted_class));
    }
    bool same_keys = e.raw.size() == sg.neighbor_ids.size() && e.importance.size() == sg.neighbor_ids.size();
    if (same_keys) {
        std::size_t i = 0;
        for (const auto& [node, value] : e.raw) {
            same_keys = same_keys && node == sg.neighbor_ids[i++] && e.importance.contains(node);
        }
    }
    if (!same_keys) {
        throw ConfigError("explanation for node " + std::to_string(e.target) +
                          " does not cover exactly the node's receptive field");
    }
}

struct NodeSweep {
    bool evaluated = false;
    std::vector<double> loyal;
    std::vector<double> change;
};

NodeSweep sweep_node(const TrainedModel& model, const Graph& g, const Explanation& e, Direction direction,
                     std::span<const double> percents) {
    const Subgraph sg = khop_subgraph(g, e.target, kHops);
    const Prediction original = forward(model, sg);
    check_against(sg, original, e);
    NodeSweep out;
    const DeletionSchedule plan = schedule(nonzero_neighbors(e, direction), percents);
    if (plan.order.empty()) {
        return out;
    }
    out.evaluated = true;
    const std::size_t cls = original.predicted_class;
    std::size_t last_count = 0;
    double last_loyal = 1.0;
    double last_change = 0.0;
    for (std::size_t s = 0; s < plan.counts.size(); ++s) {
        const std::size_t count = plan.counts[s];
        if (count != last_count) {
            const Prediction p = forward(model, delete_neighbors(sg, plan.victims(s)));
            last_loyal = p.predicted_class == cls ? 1.0 : 0.0;
            last_change = std::abs(p.probabilities[cls] - original.probabilities[cls]);
            last_count = count;
        }
        out.loyal.push_back(last_loyal);
        out.change.push_back(last_change);
    }
    return out;
}

AllDeletedResult average_loyal(const std::vector<int>& outcome) {
    // outcome: -1 excluded, 0 changed, 1 kept.
    AllDeletedResult r;
    std::size_t kept = 0;
    for (int o : outcome) {
        if (o < 0) {
            ++r.n_excluded;
        } else {
            ++r.n_evaluated;
            kept += static_cast<std::size_t>(o);
        }
    }
    r.loyalty = r.n_evaluated == 0 ? 1.0 : static_cast<double>(kept) / static_cast<double>(r.n_evaluated);
    return r;
}

} // namespace

std::string_view to_string(MetricKind kind) noexcept {
    switch (kind) {
    case MetricKind::Loyalty:
        return "loyalty";
    case MetricKind::InverseLoyalty:
        return "inverse_loyalty";
    case MetricKind::LoyaltyProbabilities:
        return "loyalty_probabilities";
    case MetricKind::InverseLoyaltyProbabilities:
        return "inverse_loyalty_probabilities";
    }
    return "unknown";
}

MetricKind parse_metric(std::string_view name) {
    for (MetricKind k : {MetricKind::Loyalty, MetricKind::InverseLoyalty, MetricKind::LoyaltyProbabilities,
                         MetricKind::InverseLoyaltyProbabilities}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    if (name == "inverse-loyalty") {
        return MetricKind::InverseLoyalty;
    }
    if (name == "loyalty-probabilities") {
        return MetricKind::LoyaltyProbabilities;
    }
    if (name == "inverse-loyalty-probabilities") {
        return MetricKind::InverseLoyaltyProbabilities;
    }
    throw ConfigError("unknown metric '" + std::string(name) +
                      "' (expected loyalty, inverse_loyalty, loyalty_probabilities, inverse_loyalty_probabilities)");
}

Direction direction_of(MetricKind kind) noexcept {
    return kind == MetricKind::InverseLoyalty || kind == MetricKind::InverseLoyaltyProbabilities
               ? Direction::Ascending
               : Direction::Descending;
}

bool is_probability_metric(MetricKind kind) noexcept {
    return kind == MetricKind::LoyaltyProbabilities || kind == MetricKind::InverseLoyaltyProbabilities;
}

double MetricCurve::auc() const { return nxai::auc(points); }

const std::vector<double>& default_percents() {
    static const std::vector<double> percents = {0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    return percents;
}

std::vector<std::size_t> schedule_counts(std::size_t m, std::span<const double> percents) {
    std::vector<std::size_t> counts;
    double previous = -1.0;
    for (double t : percents) {
        if (!(t >= 0.0 && t <= 100.0) || t <= previous) {
            throw ConfigError("deletion percents must increase within [0, 100]");
        }
        previous = t;
        const double exact = t * static_cast<double>(m);
        const auto count = static_cast<std::size_t>(std::floor((exact + 50.0) / 100.0));
        counts.push_back(std::min(count, m));
    }
    return counts;
}

DeletionSchedule schedule(std::vector<NodeId> neighbors, std::span<const double> percents) {
    DeletionSchedule s;
    s.counts = schedule_counts(neighbors.size(), percents);
    s.order = std::move(neighbors);
    s.percents.assign(percents.begin(), percents.end());
    return s;
}

double auc(std::span<const MetricPoint> points) {
    if (points.size() < 2) {
        throw ConfigError("area under the curve needs at least two points");
    }
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double width = (points[i].percent - points[i - 1].percent) / 100.0;
        area += width * (points[i].value + points[i - 1].value) / 2.0;
    }
    return area;
}

void check_explanation(const TrainedModel& model, const Graph& g, const Explanation& e) {
    const Subgraph sg = khop_subgraph(g, e.target, kHops);
    check_against(sg, forward(model, sg), e);
}

DeletionCurves deletion_curves(const TrainedModel& model, const Graph& g, const std::vector<Explanation>& explanations,
                               Direction direction, const EvaluationOptions& options) {
    const auto& percents = options.percents;
    schedule_counts(0, percents);
    std::vector<NodeSweep> sweeps(explanations.size());
    parallel_for(explanations.size(), options.jobs, [&](std::size_t i) {
        sweeps[i] = sweep_node(model, g, explanations[i], direction, percents);
    });

    DeletionCurves out;
    const bool inverse = direction == Direction::Ascending;
    out.loyalty.kind = inverse ? MetricKind::InverseLoyalty : MetricKind::Loyalty;
    out.probabilities.kind = inverse ? MetricKind::InverseLoyaltyProbabilities : MetricKind::LoyaltyProbabilities;
    std::vector<double> loyal_sum(percents.size(), 0.0);
    std::vector<double> change_sum(percents.size(), 0.0);
    std::size_t evaluated = 0;
    for (const auto& s : sweeps) {
        if (!s.evaluated) {
            continue;
        }
        ++evaluated;
        for (std::size_t p = 0; p < percents.size(); ++p) {
            loyal_sum[p] += s.loyal[p];
            change_sum[p] += s.change[p];
        }
    }
    for (std::size_t p = 0; p < percents.size(); ++p) {
        const double n = static_cast<double>(evaluated);
        out.loyalty.points.push_back({percents[p], evaluated == 0 ? 1.0 : loyal_sum[p] / n});
        out.probabilities.points.push_back({percents[p], evaluated == 0 ? 0.0 : change_sum[p] / n});
    }
    for (MetricCurve* c : {&out.loyalty, &out.probabilities}) {
        c->n_evaluated = evaluated;
        c->n_excluded = explanations.size() - evaluated;
    }
    return out;
}

MetricCurve loyalty(const TrainedModel& model, const Graph& g, const std::vector<Explanation>& explanations,
                    Direction direction, const EvaluationOptions& options) {
    return deletion_curves(model, g, explanations, direction, options).loyalty;
}

MetricCurve loyalty_probabilities(const TrainedModel& model, const Graph& g,
                                  const std::vector<Explanation>& explanations, Direction direction,
                                  const EvaluationOptions& options) {
    return deletion_curves(model, g, explanations, direction, options).probabilities;
}

MetricCurve evaluate_metric(MetricKind kind, const TrainedModel& model, const Graph& g,
                            const std::vector<Explanation>& explanations, const EvaluationOptions& options) {
    const DeletionCurves curves = deletion_curves(model, g, explanations, direction_of(kind), options);
    return is_probability_metric(kind) ? curves.probabilities : curves.loyalty;
}

AllDeletedResult all_deleted_loyalty(const TrainedModel& model, const Graph& g,
                                     const std::vector<Explanation>& explanations, std::size_t jobs) {
    std::vector<int> outcome(explanations.size(), -1);
    parallel_for(explanations.size(), jobs, [&](std::size_t i) {
        const Explanation& e = explanations[i];
        const Subgraph sg = khop_subgraph(g, e.target, kHops);
        const Prediction original = forward(model, sg);
        check_against(sg, original, e);
        if (sg.neighbor_ids.empty()) {
            return;
        }
        const std::vector<NodeId> victims = nonzero_neighbors(e);
        if (victims.empty()) {
            outcome[i] = 1;
            return;
        }
        outcome[i] = forward(model, delete_neighbors(sg, victims)).predicted_class == original.predicted_class;
    });
    return average_loyal(outcome);
}

AllDeletedResult all_neighbors_deleted_loyalty(const TrainedModel& model, const Graph& g,
                                               const std::vector<NodeId>& nodes, std::size_t jobs) {
    std::vector<int> outcome(nodes.size(), -1);
    parallel_for(nodes.size(), jobs, [&](std::size_t i) {
        const Subgraph sg = khop_subgraph(g, nodes[i], kHops);
        if (sg.neighbor_ids.empty()) {
            return;
        }
        const Prediction original = forward(model, sg);
        outcome[i] = forward(model, delete_neighbors(sg, sg.neighbor_ids)).predicted_class == original.predicted_class;
    });
    return average_loyal(outcome);
}

} // namespace nxai
