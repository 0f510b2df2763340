#include "fg/app/run_config.hpp"

#include <cstdio>
#include <fstream>

#include "fg/core/errors.hpp"

namespace fg {

using nlohmann::json;

namespace {

template <class T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

// Every key of `given` must exist in `defaults`; nested objects are checked recursively.
void reject_unknown(const json& given, const json& defaults, const std::string& path) {
    if (!given.is_object()) throw ConfigError("config: '" + (path.empty() ? "<root>" : path) + "' must be an object");
    for (const auto& [key, value] : given.items()) {
        const std::string at = path.empty() ? key : path + "." + key;
        if (!defaults.contains(key)) throw ConfigError("config: unknown key '" + at + "'");
        if (defaults[key].is_object()) reject_unknown(value, defaults[key], at);
    }
}

json merged(json base, const json& over) {
    for (const auto& [key, value] : over.items()) {
        if (base[key].is_object() && value.is_object()) {
            base[key] = merged(base[key], value);
        } else {
            base[key] = value;
        }
    }
    return base;
}

template <class T>
T get(const json& j, const char* key, const std::string& section) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: '" + section + "." + key + "' has the wrong type");
    }
}

template <class T>
std::optional<T> get_optional(const json& j, const char* key, const std::string& section) {
    if (j.at(key).is_null()) return std::nullopt;
    return get<T>(j, key, section);
}

}  // namespace

void RunConfig::validate() const {
    if (data.source == "synthetic") {
        data.synthetic.validate();
    } else if (data.source == "csv") {
        if (data.csv.factors.empty() || data.csv.prices.empty() || data.csv.sectors.empty()) {
            throw ConfigError("config: data.csv needs factors, prices and sectors paths");
        }
    } else {
        throw ConfigError("config: data.source must be 'synthetic' or 'csv', got '" + data.source + "'");
    }
    if (cv.n_folds < 2) throw ConfigError("config: cv.n_folds must be >= 2");
    if (!(cv.valid_fraction >= 0.0 && cv.valid_fraction < 1.0)) {
        throw ConfigError("config: cv.valid_fraction must lie in [0, 1)");
    }
    if (cv.test_span < 1) throw ConfigError("config: cv.test_span must be >= 1");
    for (auto f : cv.folds)
        if (f < 1 || f >= cv.n_folds) throw ConfigError("config: cv.folds entries must lie in [1, n_folds)");
    if (model.context_dim < 1 || model.encoder_hidden < 1 || model.selection_hidden < 1) {
        throw ConfigError("config: model widths must be >= 1");
    }
    if (model.gamma_f && !(*model.gamma_f >= 0.0 && *model.gamma_f <= 1.0)) {
        throw ConfigError("config: model.gamma_f must lie in [0, 1]");
    }
    if (!(model.gamma_p > 0.0 && model.gamma_p <= 1.0)) throw ConfigError("config: model.gamma_p must lie in (0, 1]");
    training.validate();
    if (evaluation.horizons.empty()) throw ConfigError("config: evaluation.horizons is empty");
    for (int k : evaluation.horizons) {
        try {
            horizon_index(k);
        } catch (const ValidationError&) {
            throw ConfigError("config: evaluation.horizons entry " + std::to_string(k) + " is not one of 3, 5, 10, 15, 20");
        }
    }
    if (evaluation.n_groups < 2) throw ConfigError("config: evaluation.n_groups must be >= 2");
    if (evaluation.benchmark != "equal_weight") {
        throw ConfigError("config: evaluation.benchmark must be 'equal_weight'");
    }
    for (const auto& b : evaluation.baselines) {
        try {
            parse_baseline(b);
        } catch (const ValidationError& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
    if (evaluation.heatmap_bucket < 1) throw ConfigError("config: evaluation.heatmap_bucket must be >= 1");
    baselines.validate();
}

json to_json(const RunConfig& c) {
    const auto& s = c.data.synthetic;
    json j;
    j["seed"] = c.seed;
    j["data"] = {
        {"source", c.data.source},
        {"synthetic",
         {{"n_stocks", s.n_stocks},
          {"n_factors", s.n_factors},
          {"n_days", s.n_days},
          {"n_sectors", s.n_sectors},
          {"signal_strength", s.signal_strength},
          {"n_planted", s.n_planted},
          {"n_negative", s.n_negative},
          {"quadratic_weight", s.quadratic_weight},
          {"signal_window", s.signal_window},
          {"signal_scale", s.signal_scale},
          {"idio_vol", s.idio_vol},
          {"sector_vol", s.sector_vol},
          {"market_vol", s.market_vol}}},
        {"csv",
         {{"factors", c.data.csv.factors},
          {"prices", c.data.csv.prices},
          {"sectors", c.data.csv.sectors},
          {"groups", optional_json(c.data.csv.groups)},
          {"graph", optional_json(c.data.csv.graph)}}}};
    j["cv"] = {{"n_folds", c.cv.n_folds},
               {"valid_fraction", c.cv.valid_fraction},
               {"test_span", c.cv.test_span},
               {"folds", c.cv.folds}};
    j["model"] = {{"context_dim", c.model.context_dim},
                  {"encoder_hidden", c.model.encoder_hidden},
                  {"selection_hidden", c.model.selection_hidden},
                  {"leaky_slope", c.model.leaky_slope},
                  {"gat_slope", c.model.gat_slope},
                  {"gamma_f", optional_json(c.model.gamma_f)},
                  {"gamma_p", c.model.gamma_p},
                  {"selection_gradient", c.model.selection_gradient == diff::GateGradient::constant
                                             ? "constant"
                                             : "straight_through"}};
    const auto& t = c.training;
    j["training"] = {{"lambda_s", t.lambda_s},
                     {"lambda_f", t.lambda_f},
                     {"lambda_e", t.lambda_e},
                     {"theta", t.theta},
                     {"optimizer", t.optimizer},
                     {"learning_rate", t.learning_rate},
                     {"momentum", t.momentum},
                     {"grad_clip", t.grad_clip},
                     {"local_mode", t.local_mode == LocalMode::closed_form ? "closed_form" : "iterative"},
                     {"local_step", t.local_step},
                     {"local_iterations", t.local_iterations},
                     {"batch_dates", t.batch_dates},
                     {"max_epochs", t.max_epochs},
                     {"patience", t.patience}};
    j["evaluation"] = {{"horizons", c.evaluation.horizons},
                       {"n_groups", c.evaluation.n_groups},
                       {"benchmark", c.evaluation.benchmark},
                       {"baselines", c.evaluation.baselines},
                       {"heatmap_bucket", c.evaluation.heatmap_bucket}};
    j["baselines"] = {{"stepwise_q", optional_json(c.baselines.stepwise_q)},
                      {"mlp_hidden", c.baselines.mlp_hidden},
                      {"mlp_context", c.baselines.mlp_context},
                      {"mlp_epochs", c.baselines.mlp_epochs},
                      {"mlp_learning_rate", c.baselines.mlp_learning_rate}};
    return j;
}

RunConfig run_config_from_json(const json& given) {
    const json defaults = to_json(RunConfig{});
    reject_unknown(given, defaults, "");
    const json j = merged(defaults, given);

    RunConfig c;
    c.seed = get<std::uint64_t>(j, "seed", "<root>");

    const json& d = j["data"];
    c.data.source = get<std::string>(d, "source", "data");
    const json& s = d["synthetic"];
    const std::string ss = "data.synthetic";
    auto& sp = c.data.synthetic;
    sp.n_stocks = get<std::size_t>(s, "n_stocks", ss);
    sp.n_factors = get<std::size_t>(s, "n_factors", ss);
    sp.n_days = get<std::size_t>(s, "n_days", ss);
    sp.n_sectors = get<std::size_t>(s, "n_sectors", ss);
    sp.signal_strength = get<double>(s, "signal_strength", ss);
    sp.n_planted = get<std::size_t>(s, "n_planted", ss);
    sp.n_negative = get<std::size_t>(s, "n_negative", ss);
    sp.quadratic_weight = get<double>(s, "quadratic_weight", ss);
    sp.signal_window = get<std::size_t>(s, "signal_window", ss);
    sp.signal_scale = get<double>(s, "signal_scale", ss);
    sp.idio_vol = get<double>(s, "idio_vol", ss);
    sp.sector_vol = get<double>(s, "sector_vol", ss);
    sp.market_vol = get<double>(s, "market_vol", ss);
    sp.seed = c.seed;
    const json& csv = d["csv"];
    c.data.csv.factors = get<std::string>(csv, "factors", "data.csv");
    c.data.csv.prices = get<std::string>(csv, "prices", "data.csv");
    c.data.csv.sectors = get<std::string>(csv, "sectors", "data.csv");
    c.data.csv.groups = get_optional<std::string>(csv, "groups", "data.csv");
    c.data.csv.graph = get_optional<std::string>(csv, "graph", "data.csv");

    const json& cv = j["cv"];
    c.cv.n_folds = get<std::size_t>(cv, "n_folds", "cv");
    c.cv.valid_fraction = get<double>(cv, "valid_fraction", "cv");
    c.cv.test_span = get<std::size_t>(cv, "test_span", "cv");
    c.cv.folds = get<std::vector<std::size_t>>(cv, "folds", "cv");

    const json& m = j["model"];
    c.model.context_dim = get<std::size_t>(m, "context_dim", "model");
    c.model.encoder_hidden = get<std::size_t>(m, "encoder_hidden", "model");
    c.model.selection_hidden = get<std::size_t>(m, "selection_hidden", "model");
    c.model.leaky_slope = get<double>(m, "leaky_slope", "model");
    c.model.gat_slope = get<double>(m, "gat_slope", "model");
    c.model.gamma_f = get_optional<double>(m, "gamma_f", "model");
    c.model.gamma_p = get<double>(m, "gamma_p", "model");
    const auto mode = get<std::string>(m, "selection_gradient", "model");
    if (mode == "constant") {
        c.model.selection_gradient = diff::GateGradient::constant;
    } else if (mode == "straight_through") {
        c.model.selection_gradient = diff::GateGradient::straight_through;
    } else {
        throw ConfigError("config: model.selection_gradient must be 'constant' or 'straight_through'");
    }

    const json& t = j["training"];
    auto& tc = c.training;
    tc.lambda_s = get<double>(t, "lambda_s", "training");
    tc.lambda_f = get<double>(t, "lambda_f", "training");
    tc.lambda_e = get<double>(t, "lambda_e", "training");
    tc.theta = get<double>(t, "theta", "training");
    tc.optimizer = get<std::string>(t, "optimizer", "training");
    tc.learning_rate = get<double>(t, "learning_rate", "training");
    tc.momentum = get<double>(t, "momentum", "training");
    tc.grad_clip = get<double>(t, "grad_clip", "training");
    const auto local = get<std::string>(t, "local_mode", "training");
    if (local == "closed_form") {
        tc.local_mode = LocalMode::closed_form;
    } else if (local == "iterative") {
        tc.local_mode = LocalMode::iterative;
    } else {
        throw ConfigError("config: training.local_mode must be 'closed_form' or 'iterative'");
    }
    tc.local_step = get<double>(t, "local_step", "training");
    tc.local_iterations = get<int>(t, "local_iterations", "training");
    tc.batch_dates = get<std::size_t>(t, "batch_dates", "training");
    tc.max_epochs = get<std::size_t>(t, "max_epochs", "training");
    tc.patience = get<std::size_t>(t, "patience", "training");
    tc.seed = c.seed;

    const json& e = j["evaluation"];
    c.evaluation.horizons = get<std::vector<int>>(e, "horizons", "evaluation");
    c.evaluation.n_groups = get<std::size_t>(e, "n_groups", "evaluation");
    c.evaluation.benchmark = get<std::string>(e, "benchmark", "evaluation");
    c.evaluation.baselines = get<std::vector<std::string>>(e, "baselines", "evaluation");
    c.evaluation.heatmap_bucket = get<std::size_t>(e, "heatmap_bucket", "evaluation");

    const json& b = j["baselines"];
    c.baselines.stepwise_q = get_optional<std::size_t>(b, "stepwise_q", "baselines");
    c.baselines.mlp_hidden = get<std::size_t>(b, "mlp_hidden", "baselines");
    c.baselines.mlp_context = get<std::size_t>(b, "mlp_context", "baselines");
    c.baselines.mlp_epochs = get<std::size_t>(b, "mlp_epochs", "baselines");
    c.baselines.mlp_learning_rate = get<double>(b, "mlp_learning_rate", "baselines");
    c.baselines.n_groups = c.evaluation.n_groups;
    c.baselines.seed = c.seed;

    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const RunConfig& config) { return fnv1a_hex(to_json(config).dump()); }

std::string training_hash(const RunConfig& config) {
    json j = to_json(config);
    j.erase("evaluation");
    j.erase("baselines");
    return fnv1a_hex(j.dump());
}

}  // namespace fg
