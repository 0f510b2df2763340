#include "fg/model/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

#include "fg/core/errors.hpp"

namespace fg {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "fg-checkpoint/1";

json config_json(const ModelConfig& c) {
    json j = {{"n_factors", c.n_factors},
              {"context_dim", c.context_dim},
              {"encoder_hidden", c.encoder_hidden},
              {"selection_hidden", c.selection_hidden},
              {"leaky_slope", c.leaky_slope},
              {"gat_slope", c.gat_slope},
              {"gamma_f", c.factor_threshold()},
              {"gamma_p", c.gamma_p},
              {"selection_gradient",
               c.selection_gradient == diff::GateGradient::constant ? "constant" : "straight_through"}};
    return j;
}

ModelConfig config_from(const json& j) {
    ModelConfig c;
    c.n_factors = j.at("n_factors").get<std::size_t>();
    c.context_dim = j.at("context_dim").get<std::size_t>();
    c.encoder_hidden = j.at("encoder_hidden").get<std::size_t>();
    c.selection_hidden = j.at("selection_hidden").get<std::size_t>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.gat_slope = j.at("gat_slope").get<double>();
    c.gamma_f = j.at("gamma_f").get<double>();
    c.gamma_p = j.at("gamma_p").get<double>();
    const auto mode = j.at("selection_gradient").get<std::string>();
    if (mode == "constant") {
        c.selection_gradient = diff::GateGradient::constant;
    } else if (mode == "straight_through") {
        c.selection_gradient = diff::GateGradient::straight_through;
    } else {
        throw DataError("checkpoint has unknown selection_gradient '" + mode + "'");
    }
    c.validate();
    return c;
}

}  // namespace

Directions Checkpoint::directions() const {
    Directions d;
    for (double b : factor_buffer) d.factor.push_back(b >= 0.0 ? 1.0 : -1.0);
    for (std::size_t k = 0; k < kNumHorizons; ++k) d.deep[k] = deep_buffer[k] >= 0.0 ? 1.0 : -1.0;
    return d;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    json params = json::object();
    for (const auto& [name, t] : ckpt.params.named()) {
        params[name] = {{"rows", t.rows()}, {"cols", t.cols()}, {"data", t.to_vector()}};
    }
    json j = {{"format", kFormat},
              {"horizons", std::vector<int>(kHorizons.begin(), kHorizons.end())},
              {"config_hash", ckpt.config_hash},
              {"best_epoch", ckpt.best_epoch},
              {"model", config_json(ckpt.config)},
              {"factor_names", ckpt.factor_names},
              {"buffers",
               {{"factor", ckpt.factor_buffer},
                {"deep", std::vector<double>(ckpt.deep_buffer.begin(), ckpt.deep_buffer.end())}}},
              {"params", params}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    try {
        const json j = json::parse(in);
        if (j.at("format") != kFormat) throw DataError("unsupported checkpoint format in " + path.string());
        const auto horizons = j.at("horizons").get<std::vector<int>>();
        if (horizons != std::vector<int>(kHorizons.begin(), kHorizons.end())) {
            throw DataError("checkpoint horizons do not match 3,5,10,15,20");
        }
        Checkpoint c;
        c.config = config_from(j.at("model"));
        c.config_hash = j.at("config_hash").get<std::string>();
        c.best_epoch = j.at("best_epoch").get<int>();
        c.factor_names = j.at("factor_names").get<std::vector<std::string>>();
        c.factor_buffer = j.at("buffers").at("factor").get<std::vector<double>>();
        const auto deep = j.at("buffers").at("deep").get<std::vector<double>>();
        if (deep.size() != kNumHorizons || c.factor_buffer.size() != c.config.n_factors) {
            throw DataError("checkpoint buffer sizes do not match the model");
        }
        std::copy(deep.begin(), deep.end(), c.deep_buffer.begin());
        c.params = ModelParams::init(c.config, 0);
        const auto& params = j.at("params");
        for (auto& [name, t] : c.params.named()) {
            const auto& p = params.at(name);
            const auto rows = p.at("rows").get<std::size_t>(), cols = p.at("cols").get<std::size_t>();
            auto data = p.at("data").get<std::vector<double>>();
            if (rows != t.rows() || cols != t.cols() || data.size() != rows * cols) {
                throw DataError("checkpoint parameter " + name + " has the wrong shape");
            }
            std::copy(data.begin(), data.end(), t.mutable_values().begin());
        }
        return c;
    } catch (const json::exception& e) {
        throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
    }
}

}  // namespace fg
