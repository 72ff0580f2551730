#include "nxai/report.hpp"

#include "nxai/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace nxai {

namespace {

using nlohmann::json;
using text::format_double;

std::map<NodeId, double> parse_score_map(const json& j) {
    std::map<NodeId, double> out;
    for (const auto& [key, value] : j.items()) {
        const auto id = text::parse_index(key);
        if (!id) {
            throw ConfigError("invalid node id '" + key + "'");
        }
        out[*id] = value.get<double>();
    }
    return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

} // namespace

std::string explanation_to_json(const Explanation& e) {
    // Keys are emitted in insertion order so numeric ids stay ascending.
    nlohmann::ordered_json j;
    j["target"] = e.target;
    j["method"] = to_string(e.method);
    j["predicted_class"] = e.predicted_class;
    nlohmann::ordered_json importance = nlohmann::ordered_json::object();
    nlohmann::ordered_json raw = nlohmann::ordered_json::object();
    for (const auto& [node, v] : e.importance) {
        importance[std::to_string(node)] = v;
    }
    for (const auto& [node, v] : e.raw) {
        raw[std::to_string(node)] = v;
    }
    j["importance"] = std::move(importance);
    j["raw"] = std::move(raw);
    return j.dump();
}

Explanation explanation_from_json(const std::string& line) {
    try {
        const json j = json::parse(line);
        Explanation e;
        e.target = j.at("target").get<NodeId>();
        e.method = parse_method(j.at("method").get<std::string>());
        e.predicted_class = j.at("predicted_class").get<std::size_t>();
        e.importance = parse_score_map(j.at("importance"));
        e.raw = parse_score_map(j.at("raw"));
        return e;
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("malformed explanation record: ") + ex.what());
    }
}

void write_explanations(const std::filesystem::path& path, const std::vector<Explanation>& explanations) {
    std::string out;
    for (const auto& e : explanations) {
        out += explanation_to_json(e);
        out += '\n';
    }
    text::write_file(path.string(), out);
}

std::vector<Explanation> read_explanations(const std::filesystem::path& path) {
    const auto contents = text::read_file(path.string());
    if (!contents) {
        throw ConfigError("cannot read explanations " + path.string());
    }
    std::vector<Explanation> out;
    std::size_t line_no = 0;
    for (auto line : text::split(*contents, '\n')) {
        ++line_no;
        line = text::trim(line);
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(explanation_from_json(std::string(line)));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string curves_csv(const std::vector<CurveRecord>& records) {
    std::string out = "metric,method,dataset,arch,self_loops,direction,percent,value,n_evaluated,n_excluded\n";
    for (const auto& r : records) {
        for (const auto& p : r.curve.points) {
            out += std::string(to_string(r.curve.kind)) + "," + r.label.method + "," + r.label.dataset + "," +
                   r.label.arch + "," + bool_text(r.label.self_loops) + "," +
                   std::string(to_string(r.curve.direction())) + "," + format_double(p.percent) + "," +
                   format_double(p.value) + "," + std::to_string(r.curve.n_evaluated) + "," +
                   std::to_string(r.curve.n_excluded) + "\n";
        }
    }
    return out;
}

std::string auc_csv(const std::vector<CurveRecord>& records) {
    struct Row {
        std::string table;
        RunLabel label;
        std::string l;
        std::string i;
    };
    std::vector<Row> rows;
    for (const auto& r : records) {
        const std::string table = is_probability_metric(r.curve.kind) ? "loyalty_probabilities" : "loyalty";
        auto it = std::find_if(rows.begin(), rows.end(), [&](const Row& row) {
            return row.table == table && row.label.method == r.label.method && row.label.dataset == r.label.dataset &&
                   row.label.arch == r.label.arch && row.label.self_loops == r.label.self_loops;
        });
        if (it == rows.end()) {
            rows.push_back({table, r.label, "", ""});
            it = rows.end() - 1;
        }
        const std::string value = format_double(r.curve.auc());
        (r.curve.direction() == Direction::Descending ? it->l : it->i) = value;
    }
    std::string out = "table,self_loops,method,dataset,arch,L,I\n";
    for (const auto& row : rows) {
        out += row.table + "," + bool_text(row.label.self_loops) + "," + row.label.method + "," + row.label.dataset +
               "," + row.label.arch + "," + row.l + "," + row.i + "\n";
    }
    return out;
}

std::string baselines_csv(const std::vector<BaselineRecord>& records) {
    std::string out = "method,dataset,arch,self_loops,loyalty,n_evaluated,n_excluded\n";
    for (const auto& r : records) {
        out += r.label.method + "," + r.label.dataset + "," + r.label.arch + "," + bool_text(r.label.self_loops) + "," +
               format_double(r.result.loyalty) + "," + std::to_string(r.result.n_evaluated) + "," +
               std::to_string(r.result.n_excluded) + "\n";
    }
    return out;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
    std::string out = "epoch,loss,train_accuracy,val_accuracy,test_accuracy\n";
    for (const auto& e : log) {
        out += std::to_string(e.epoch) + "," + format_double(e.loss) + "," + format_double(e.train_accuracy) + "," +
               format_double(e.val_accuracy) + "," + format_double(e.test_accuracy) + "\n";
    }
    return out;
}

std::string curve_svg(const MetricCurve& curve, const std::string& title) {
    constexpr double width = 480.0;
    constexpr double height = 360.0;
    constexpr double left = 60.0;
    constexpr double right = 20.0;
    constexpr double top = 40.0;
    constexpr double bottom = 50.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    auto x_of = [&](double percent) { return left + plot_w * percent / 100.0; };
    auto y_of = [&](double value) { return top + plot_h * (1.0 - std::clamp(value, 0.0, 1.0)); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"14\">" << title << "</text>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 100; t += 20) {
        svg << "<text x=\"" << x_of(t) << "\" y=\"" << top + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << t << "</text>\n";
    }
    for (int t = 0; t <= 10; t += 2) {
        const double v = t / 10.0;
        svg << "<text x=\"" << left - 8 << "\" y=\"" << y_of(v) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(v)
            << "</text>\n";
    }
    svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">% of neighbors deleted</text>\n";
    svg << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"12\" transform=\"rotate(-90 16 " << top + plot_h / 2 << ")\">" << to_string(curve.kind)
        << "</text>\n";
    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        svg << (i == 0 ? "" : " ") << format_double(x_of(curve.points[i].percent)) << ","
            << format_double(y_of(curve.points[i].value));
    }
    svg << "\"/>\n</svg>\n";
    return svg.str();
}

} // namespace nxai
