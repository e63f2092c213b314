#include "hdnet/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "hdnet/errors.hpp"
#include "json.hpp"

namespace hdnet {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'H', 'D', 'N', 'E', 'T', 'C', 'K', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& v, std::size_t count) {
    v.resize(count);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const ExperimentConfig& cfg,
                     const TrainState* state) {
    json dir = json::array();
    auto add_entries = [&dir](const std::map<std::string, Tensor>& tensors, const char* kind) {
        for (const auto& [name, t] : tensors)
            dir.push_back({{"name", name}, {"kind", kind}, {"count", t.size()}});
    };
    add_entries(model.params(), "param");
    add_entries(model.buffers(), "buffer");
    if (state) {
        for (const auto& [name, v] : state->adam_m)
            dir.push_back({{"name", name}, {"kind", "adam_m"}, {"count", v.size()}});
        for (const auto& [name, v] : state->adam_v)
            dir.push_back({{"name", name}, {"kind", "adam_v"}, {"count", v.size()}});
    }

    json header;
    header["config"] = json::parse(experiment_config_to_json(cfg));
    header["tensors"] = dir;
    if (state) {
        header["train_state"] = {{"step", state->step},
                                 {"best_val", state->best_val},
                                 {"has_best", state->has_best}};
    }
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_checkpoint: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u64(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto& [name, t] : model.params()) write_doubles(out, t.values());
    for (const auto& [name, t] : model.buffers()) write_doubles(out, t.values());
    if (state) {
        for (const auto& [name, v] : state->adam_m) write_doubles(out, v);
        for (const auto& [name, v] : state->adam_v) write_doubles(out, v);
    }
    if (!out) throw DataError("save_checkpoint: write failure for " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path, ExperimentConfig* out_cfg,
                                       TrainState* out_state) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("load_checkpoint: bad magic in " + path);
    const std::uint64_t header_len = read_u64(in);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw DataError("load_checkpoint: truncated header in " + path);

    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("load_checkpoint: bad header: ") + e.what());
    }
    ExperimentConfig cfg = experiment_config_from_json(header.at("config").dump());
    if (out_cfg) *out_cfg = cfg;

    auto model = std::make_unique<Model>(cfg.model, cfg.gen.skeleton, cfg.seed);
    TrainState state;
    const bool has_state = header.contains("train_state");
    if (has_state) {
        state.step = header["train_state"].at("step");
        state.best_val = header["train_state"].at("best_val");
        state.has_best = header["train_state"].at("has_best");
    }

    for (const json& entry : header.at("tensors")) {
        const std::string name = entry.at("name");
        const std::string kind = entry.at("kind");
        const std::size_t count = entry.at("count");
        std::vector<double> payload;
        read_doubles(in, payload, count);
        if (!in) throw DataError("load_checkpoint: truncated payload at " + name);
        if (kind == "param" || kind == "buffer") {
            auto& store = kind == "param" ? model->params() : model->buffers();
            auto it = store.find(name);
            if (it == store.end())
                throw DataError("load_checkpoint: unknown tensor '" + name + "'");
            if (it->second.size() != count)
                throw DataError("load_checkpoint: size mismatch for '" + name + "'");
            std::copy(payload.begin(), payload.end(), it->second.values().begin());
        } else if (kind == "adam_m") {
            state.adam_m[name] = std::move(payload);
        } else if (kind == "adam_v") {
            state.adam_v[name] = std::move(payload);
        } else {
            throw DataError("load_checkpoint: unknown tensor kind '" + kind + "'");
        }
    }
    if (out_state && has_state) *out_state = std::move(state);
    return model;
}

}  // namespace hdnet
