#pragma once

#include "nxai/explainers.hpp"
#include "nxai/metrics.hpp"
#include "nxai/model.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace nxai {

/// {"target", "method", "predicted_class", "importance": {id: score}, "raw": {id: value}}
std::string explanation_to_json(const Explanation& e);
Explanation explanation_from_json(const std::string& line);

void write_explanations(const std::filesystem::path& path, const std::vector<Explanation>& explanations);
/// Throws ConfigError naming the file and line on malformed input.
std::vector<Explanation> read_explanations(const std::filesystem::path& path);

/// Identifies the experiment a curve or baseline belongs to.
struct RunLabel {
    std::string method;
    std::string dataset;
    std::string arch;
    bool self_loops = false;
};

struct CurveRecord {
    RunLabel label;
    MetricCurve curve;
};

/// metric,method,dataset,arch,self_loops,direction,percent,value,n_evaluated,n_excluded
std::string curves_csv(const std::vector<CurveRecord>& records);

/// table,self_loops,method,dataset,arch,L,I where table is "loyalty" (L =
/// loyalty, I = inverse loyalty) or "loyalty_probabilities"; a missing
/// metric leaves its cell empty. Rows follow first appearance.
std::string auc_csv(const std::vector<CurveRecord>& records);

struct BaselineRecord {
    RunLabel label;
    AllDeletedResult result;
};

/// method,dataset,arch,self_loops,loyalty,n_evaluated,n_excluded
std::string baselines_csv(const std::vector<BaselineRecord>& records);

/// epoch,loss,train_accuracy,val_accuracy,test_accuracy
std::string training_log_csv(const std::vector<EpochLog>& log);

/// Single polyline plot of a curve over the percent axis.
std::string curve_svg(const MetricCurve& curve, const std::string& title);

} // namespace nxai
