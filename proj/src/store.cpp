#include "ibd/models/store.hpp"

#include "ibd/errors.hpp"
#include "ibd/models/linear.hpp"
#include "ibd/models/tree.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace ibd {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "ibd-model/1";

json schema_to_json(const Schema& schema) {
    json kinds = json::array();
    for (FeatureKind k : schema.kinds) {
        kinds.push_back(k == FeatureKind::Numeric ? "numeric" : "categorical");
    }
    return {{"names", schema.names}, {"kinds", kinds}, {"levels", schema.levels}};
}

Schema schema_from_json(const json& j) {
    Schema schema;
    schema.names = j.at("names").get<std::vector<std::string>>();
    schema.levels = j.at("levels").get<std::vector<std::vector<std::string>>>();
    for (const auto& kind : j.at("kinds")) {
        const std::string k = kind.get<std::string>();
        if (k == "numeric") {
            schema.kinds.push_back(FeatureKind::Numeric);
        } else if (k == "categorical") {
            schema.kinds.push_back(FeatureKind::Categorical);
        } else {
            throw FormatError("unknown feature kind '" + k + "'");
        }
    }
    if (schema.names.size() != schema.kinds.size() || schema.names.size() != schema.levels.size()) {
        throw FormatError("inconsistent schema arrays");
    }
    return schema;
}

json tree_to_json(const Tree& tree) {
    json nodes = json::array();
    for (const TreeNode& node : tree) {
        json n = {{"value", node.value}};
        if (!node.is_leaf()) {
            n["feature"] = node.feature;
            n["left"] = node.left;
            n["right"] = node.right;
            if (node.categorical) {
                n["left_levels"] = node.left_levels;
            } else {
                n["threshold"] = node.threshold;
            }
        }
        nodes.push_back(n);
    }
    return nodes;
}

Tree tree_from_json(const json& nodes) {
    Tree tree;
    tree.reserve(nodes.size());
    for (const auto& n : nodes) {
        TreeNode node;
        node.value = n.at("value").get<double>();
        if (n.contains("feature")) {
            node.feature = n.at("feature").get<std::int32_t>();
            node.left = n.at("left").get<std::int32_t>();
            node.right = n.at("right").get<std::int32_t>();
            if (n.contains("left_levels")) {
                node.categorical = true;
                node.left_levels = n.at("left_levels").get<std::vector<std::int32_t>>();
            } else {
                node.threshold = n.at("threshold").get<double>();
            }
        }
        tree.push_back(std::move(node));
    }
    for (const TreeNode& node : tree) {
        if (node.is_leaf()) continue;
        const auto size = static_cast<std::int32_t>(tree.size());
        if (node.left < 0 || node.right < 0 || node.left >= size || node.right >= size) {
            throw FormatError("tree node child id out of range");
        }
    }
    return tree;
}

} // namespace

std::string model_to_json(const ModelPtr& model) {
    if (!model) throw ValidationError("no model to save");

    json doc = {{"format", kFormat}, {"family", model->family()}, {"name", model->name()}};

    if (const auto* linear = dynamic_cast<const LinearModel*>(model.get())) {
        doc["schema"] = schema_to_json(*linear->schema());
        doc["model"] = {{"intercept", linear->intercept()}, {"weights", linear->weights()}};
    } else if (const auto* ensemble = dynamic_cast<const TreeEnsemble*>(model.get())) {
        doc["schema"] = schema_to_json(*ensemble->schema());
        json trees = json::array();
        for (const Tree& tree : ensemble->trees()) trees.push_back(tree_to_json(tree));
        doc["model"] = {
            {"mode", ensemble->mode() == EnsembleMode::Boosted ? "boosted" : "bagged"},
            {"learning_rate", ensemble->learning_rate()},
            {"init_score", ensemble->init_score()},
            {"max_depth", ensemble->max_depth()},
            {"seed", ensemble->seed()},
            {"trees", trees},
        };
    } else {
        throw ModelError("unsupported: " + model->family() +
                         " models cannot be serialized; only trained built-in families can");
    }
    return doc.dump(2) + "\n";
}

ModelPtr model_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        const std::string format = doc.at("format").get<std::string>();
        if (format != kFormat) {
            throw FormatError("unknown model format version '" + format + "', expected '" +
                              std::string(kFormat) + "'");
        }
        const std::string family = doc.at("family").get<std::string>();
        const Schema schema = schema_from_json(doc.at("schema"));
        const json& body = doc.at("model");

        if (family == "linear") {
            return std::make_shared<LinearModel>(body.at("intercept").get<double>(),
                                                 body.at("weights").get<std::vector<double>>(),
                                                 schema);
        }
        if (family == "gbm" || family == "random_forest") {
            const std::string mode = body.at("mode").get<std::string>();
            if (mode != "boosted" && mode != "bagged") {
                throw FormatError("unknown ensemble mode '" + mode + "'");
            }
            std::vector<Tree> trees;
            for (const auto& t : body.at("trees")) trees.push_back(tree_from_json(t));
            return std::make_shared<TreeEnsemble>(
                mode == "boosted" ? EnsembleMode::Boosted : EnsembleMode::Bagged,
                std::move(trees), body.at("learning_rate").get<double>(),
                body.at("init_score").get<double>(), body.at("max_depth").get<int>(), schema,
                doc.at("name").get<std::string>(), body.at("seed").get<std::uint64_t>());
        }
        throw FormatError("unknown model family '" + family + "'");
    } catch (const json::exception& e) {
        throw FormatError(std::string("model file is missing required fields: ") + e.what());
    }
}

void save_model(const ModelPtr& model, const std::string& path) {
    const std::string text = model_to_json(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw ValidationError("failed to write '" + path + "'");
}

ModelPtr load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return model_from_json(buffer.str());
}

} // namespace ibd
