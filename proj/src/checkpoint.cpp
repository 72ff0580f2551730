#include "nxai/checkpoint.hpp"

#include "nxai/text.hpp"

#include <json.hpp>

namespace nxai {

namespace {

using nlohmann::json;

constexpr int kModelVersion = 1;
constexpr int kExplainerVersion = 1;

json tensors_to_json(const std::vector<Parameter>& params) {
    json out = json::array();
    for (const auto& p : params) {
        out.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"data", p.value.data()}});
    }
    return out;
}

std::vector<Parameter> tensors_from_json(const json& j) {
    std::vector<Parameter> params;
    for (const auto& t : j) {
        const auto rows = t.at("rows").get<std::size_t>();
        const auto cols = t.at("cols").get<std::size_t>();
        auto data = t.at("data").get<std::vector<double>>();
        if (data.size() != rows * cols) {
            throw ShapeError("tensor " + t.at("name").get<std::string>() + " declares " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " but holds " + std::to_string(data.size()) + " values");
        }
        params.push_back({t.at("name").get<std::string>(), DenseMatrix(rows, cols, std::move(data))});
    }
    return params;
}

template <typename Fn>
auto parse_or_config_error(const std::string& what, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw ConfigError("malformed " + what + ": " + e.what());
    }
}

std::string read_or_throw(const std::filesystem::path& path, const std::string& what) {
    auto text = text::read_file(path.string());
    if (!text) {
        throw ConfigError("cannot read " + what + " " + path.string());
    }
    return *text;
}

} // namespace

std::string model_to_json(const TrainedModel& model) {
    const ModelConfig& c = model.config();
    json log = json::array();
    for (const auto& e : model.log()) {
        log.push_back({{"epoch", e.epoch},
                       {"loss", e.loss},
                       {"train_accuracy", e.train_accuracy},
                       {"val_accuracy", e.val_accuracy},
                       {"test_accuracy", e.test_accuracy}});
    }
    json j = {
        {"format", "nxai-model"},
        {"version", kModelVersion},
        {"config",
         {{"arch", to_string(c.arch)},
          {"hidden_dim", c.hidden_dim},
          {"heads", c.heads},
          {"output_heads", c.output_heads},
          {"dropout_rate", c.dropout_rate},
          {"attention_slope", c.attention_slope},
          {"self_loops", c.self_loops},
          {"seed", c.seed},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay}}},
        {"in_features", model.in_features()},
        {"num_classes", model.num_classes()},
        {"parameters", tensors_to_json(model.parameters())},
        {"log", log},
    };
    return j.dump() + "\n";
}

TrainedModel model_from_json(const std::string& text) {
    return parse_or_config_error("model checkpoint", [&] {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "nxai-model" || j.at("version").get<int>() != kModelVersion) {
            throw ConfigError("unsupported model checkpoint format");
        }
        const json& jc = j.at("config");
        ModelConfig c;
        c.arch = parse_architecture(jc.at("arch").get<std::string>());
        c.hidden_dim = jc.at("hidden_dim").get<std::size_t>();
        c.heads = jc.at("heads").get<std::size_t>();
        c.output_heads = jc.at("output_heads").get<std::size_t>();
        c.dropout_rate = jc.at("dropout_rate").get<double>();
        c.attention_slope = jc.at("attention_slope").get<double>();
        c.self_loops = jc.at("self_loops").get<bool>();
        c.seed = jc.at("seed").get<std::uint64_t>();
        c.epochs = jc.at("epochs").get<std::size_t>();
        c.learning_rate = jc.at("learning_rate").get<double>();
        c.weight_decay = jc.at("weight_decay").get<double>();
        std::vector<EpochLog> log;
        for (const auto& e : j.at("log")) {
            log.push_back({e.at("epoch").get<std::size_t>(), e.at("loss").get<double>(),
                           e.at("train_accuracy").get<double>(), e.at("val_accuracy").get<double>(),
                           e.at("test_accuracy").get<double>()});
        }
        return TrainedModel(c, j.at("in_features").get<std::size_t>(), j.at("num_classes").get<std::size_t>(),
                            tensors_from_json(j.at("parameters")), std::move(log));
    });
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    text::write_file(path.string(), model_to_json(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
    return model_from_json(read_or_throw(path, "model checkpoint"));
}

std::string pgexplainer_to_json(const PGExplainerModel& pgm) {
    const PGExplainerConfig& c = pgm.config();
    json j = {
        {"format", "nxai-pgexplainer"},
        {"version", kExplainerVersion},
        {"config",
         {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"hidden_dim", c.hidden_dim},
          {"size_coefficient", c.size_coefficient},
          {"entropy_coefficient", c.entropy_coefficient},
          {"temperature_start", c.temperature_start},
          {"temperature_end", c.temperature_end},
          {"zero_init_output", c.zero_init_output},
          {"seed", c.seed}}},
        {"embedding_dim", pgm.embedding_dim()},
        {"parameters", tensors_to_json(pgm.parameters())},
    };
    return j.dump() + "\n";
}

PGExplainerModel pgexplainer_from_json(const std::string& text) {
    return parse_or_config_error("explainer model", [&] {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "nxai-pgexplainer" ||
            j.at("version").get<int>() != kExplainerVersion) {
            throw ConfigError("unsupported explainer model format");
        }
        const json& jc = j.at("config");
        PGExplainerConfig c;
        c.epochs = jc.at("epochs").get<std::size_t>();
        c.learning_rate = jc.at("learning_rate").get<double>();
        c.hidden_dim = jc.at("hidden_dim").get<std::size_t>();
        c.size_coefficient = jc.at("size_coefficient").get<double>();
        c.entropy_coefficient = jc.at("entropy_coefficient").get<double>();
        c.temperature_start = jc.at("temperature_start").get<double>();
        c.temperature_end = jc.at("temperature_end").get<double>();
        c.zero_init_output = jc.at("zero_init_output").get<bool>();
        c.seed = jc.at("seed").get<std::uint64_t>();
        return PGExplainerModel(c, j.at("embedding_dim").get<std::size_t>(), tensors_from_json(j.at("parameters")));
    });
}

void save_pgexplainer(const PGExplainerModel& pgm, const std::filesystem::path& path) {
    text::write_file(path.string(), pgexplainer_to_json(pgm));
}

PGExplainerModel load_pgexplainer(const std::filesystem::path& path) {
    return pgexplainer_from_json(read_or_throw(path, "explainer model"));
}

} // namespace nxai
