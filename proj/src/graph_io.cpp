#include "nxai/graph_io.hpp"

#include "nxai/text.hpp"

#include <json.hpp>

#include <cmath>

namespace nxai {

namespace fs = std::filesystem;

std::string_view to_string(Split split) noexcept {
    switch (split) {
    case Split::Train:
        return "train";
    case Split::Val:
        return "val";
    case Split::Test:
        return "test";
    case Split::None:
        return "none";
    }
    return "none";
}

namespace {

std::string read_required(const fs::path& dir, const char* name) {
    const fs::path p = dir / name;
    auto contents = text::read_file(p.string());
    if (!contents) {
        throw GraphError(GraphErrorCode::MissingFile, "missing file: " + p.string());
    }
    return std::move(*contents);
}

// Non-empty lines; a trailing newline does not produce an extra row.
template <typename F>
void for_each_line(const std::string& contents, F f) {
    std::size_t line_no = 0;
    for (std::string_view line : text::split(contents, '\n')) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (text::trim(line).empty()) {
            continue;
        }
        f(line, line_no);
    }
}

[[noreturn]] void parse_error(const char* file, std::size_t line_no, const std::string& what) {
    throw GraphError(GraphErrorCode::Parse, std::string(file) + ":" + std::to_string(line_no) + ": " + what);
}

std::pair<std::size_t, std::string_view> id_pair(std::string_view line, const char* file, std::size_t line_no) {
    const auto parts = text::split(line, ',');
    if (parts.size() != 2) {
        parse_error(file, line_no, "expected two comma-separated fields");
    }
    const auto id = text::parse_index(parts[0]);
    if (!id) {
        parse_error(file, line_no, "invalid node id '" + std::string(parts[0]) + "'");
    }
    return {*id, text::trim(parts[1])};
}

void check_node(std::size_t id, std::size_t n, const char* file, std::size_t line_no) {
    if (id >= n) {
        throw GraphError(GraphErrorCode::OutOfRange, std::string(file) + ":" + std::to_string(line_no) + ": node " +
                                                         std::to_string(id) + " outside [0," + std::to_string(n) +
                                                         ")");
    }
}

} // namespace

Graph load_graph(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw GraphError(GraphErrorCode::MissingFile, "dataset directory not found: " + dir.string());
    }
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_required(dir, "meta.json"));
    } catch (const nlohmann::json::exception& e) {
        throw GraphError(GraphErrorCode::Parse, "meta.json: " + std::string(e.what()));
    }
    std::size_t n = 0;
    std::size_t f = 0;
    std::size_t c = 0;
    bool loops = false;
    std::string name;
    try {
        n = meta.at("num_nodes").get<std::size_t>();
        f = meta.at("num_features").get<std::size_t>();
        c = meta.at("num_classes").get<std::size_t>();
        loops = meta.at("has_self_loops").get<bool>();
        name = meta.value("name", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw GraphError(GraphErrorCode::Parse, "meta.json: " + std::string(e.what()));
    }

    DenseMatrix features(n, f);
    std::size_t rows = 0;
    for_each_line(read_required(dir, "features.csv"), [&](std::string_view line, std::size_t line_no) {
        const auto parts = text::split(line, ',');
        if (parts.size() != f) {
            throw GraphError(GraphErrorCode::DimensionMismatch,
                             "features.csv:" + std::to_string(line_no) + ": expected " + std::to_string(f) +
                                 " values, got " + std::to_string(parts.size()));
        }
        if (rows >= n) {
            throw GraphError(GraphErrorCode::DimensionMismatch,
                             "features.csv has more than " + std::to_string(n) + " rows");
        }
        for (std::size_t j = 0; j < f; ++j) {
            const auto v = text::parse_double(parts[j]);
            if (!v) {
                parse_error("features.csv", line_no, "invalid number '" + std::string(parts[j]) + "'");
            }
            if (!std::isfinite(*v)) {
                throw GraphError(GraphErrorCode::NonFinite,
                                 "features.csv:" + std::to_string(line_no) + ": non-finite feature value");
            }
            features(rows, j) = *v;
        }
        ++rows;
    });
    if (rows != n) {
        throw GraphError(GraphErrorCode::DimensionMismatch,
                         "features.csv has " + std::to_string(rows) + " rows, meta.json declares " + std::to_string(n));
    }

    std::vector<Edge> edges;
    for_each_line(read_required(dir, "edges.csv"), [&](std::string_view line, std::size_t line_no) {
        const auto [src, rest] = id_pair(line, "edges.csv", line_no);
        const auto dst = text::parse_index(rest);
        if (!dst) {
            parse_error("edges.csv", line_no, "invalid node id '" + std::string(rest) + "'");
        }
        check_node(src, n, "edges.csv", line_no);
        check_node(*dst, n, "edges.csv", line_no);
        edges.push_back({src, *dst});
    });

    std::vector<std::size_t> labels(n, 0);
    std::vector<bool> labelled(n, false);
    for_each_line(read_required(dir, "labels.csv"), [&](std::string_view line, std::size_t line_no) {
        const auto [node, rest] = id_pair(line, "labels.csv", line_no);
        const auto cls = text::parse_index(rest);
        if (!cls) {
            parse_error("labels.csv", line_no, "invalid class '" + std::string(rest) + "'");
        }
        check_node(node, n, "labels.csv", line_no);
        if (*cls >= c) {
            throw GraphError(GraphErrorCode::OutOfRange, "labels.csv:" + std::to_string(line_no) + ": class " +
                                                             std::to_string(*cls) + " outside [0," + std::to_string(c) +
                                                             ")");
        }
        if (labelled[node]) {
            parse_error("labels.csv", line_no, "node " + std::to_string(node) + " labelled twice");
        }
        labels[node] = *cls;
        labelled[node] = true;
    });
    for (std::size_t v = 0; v < n; ++v) {
        if (!labelled[v]) {
            throw GraphError(GraphErrorCode::DimensionMismatch, "labels.csv: node " + std::to_string(v) + " has no label");
        }
    }

    std::vector<Split> splits(n, Split::None);
    for_each_line(read_required(dir, "masks.csv"), [&](std::string_view line, std::size_t line_no) {
        const auto [node, rest] = id_pair(line, "masks.csv", line_no);
        check_node(node, n, "masks.csv", line_no);
        Split s = Split::None;
        if (rest == "train") {
            s = Split::Train;
        } else if (rest == "val") {
            s = Split::Val;
        } else if (rest == "test") {
            s = Split::Test;
        } else {
            parse_error("masks.csv", line_no, "unknown split '" + std::string(rest) + "'");
        }
        if (splits[node] != Split::None) {
            parse_error("masks.csv", line_no, "node " + std::to_string(node) + " assigned to two splits");
        }
        splits[node] = s;
    });

    return Graph(std::move(name), std::move(features), std::move(edges), std::move(labels), std::move(splits), c,
                 loops);
}

void save_graph(const Graph& g, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::json meta = {
        {"name", g.name()},
        {"num_nodes", g.num_nodes()},
        {"num_features", g.num_features()},
        {"num_classes", g.num_classes()},
        {"has_self_loops", g.has_self_loops()},
    };
    text::write_file((dir / "meta.json").string(), meta.dump(2) + "\n");

    std::string out;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        const auto row = g.features().row(v);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j > 0) {
                out += ',';
            }
            out += text::format_double(row[j]);
        }
        out += '\n';
    }
    text::write_file((dir / "features.csv").string(), out);

    out.clear();
    for (const auto& e : g.edges()) {
        out += std::to_string(e.source) + ',' + std::to_string(e.target) + '\n';
    }
    text::write_file((dir / "edges.csv").string(), out);

    out.clear();
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        out += std::to_string(v) + ',' + std::to_string(g.labels()[v]) + '\n';
    }
    text::write_file((dir / "labels.csv").string(), out);

    out.clear();
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        if (g.splits()[v] != Split::None) {
            out += std::to_string(v) + ',' + std::string(to_string(g.splits()[v])) + '\n';
        }
    }
    text::write_file((dir / "masks.csv").string(), out);
}

} // namespace nxai
