#include "hdnet/config.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hdnet {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError(path + ": unknown key '" + it.key() + "'");
}

double get_number(const json& j, const std::string& path, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return v.get<double>();
}

int get_int(const json& j, const std::string& path, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
    return v.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& path, const char* key,
                      std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
        throw ConfigError(path + "." + key + ": expected an integer");
    return v.get<std::uint64_t>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError(path + "." + key + ": expected a boolean");
    return v.get<bool>();
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::vector<double> get_number_array(const json& j, const std::string& path, const char* key,
                                     const std::vector<double>& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_array()) throw ConfigError(path + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const json& e : v) {
        if (!e.is_number()) throw ConfigError(path + "." + key + ": expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

BinConfig parse_bins(const json& j, const std::string& path, BinConfig base) {
    check_keys(j, path, {"alpha", "beta", "num_bins"});
    base.alpha = get_number(j, path, "alpha", base.alpha);
    base.beta = get_number(j, path, "beta", base.beta);
    base.num_bins = get_int(j, path, "num_bins", base.num_bins);
    return base;
}

json bins_to_json(const BinConfig& b) {
    return json{{"alpha", b.alpha}, {"beta", b.beta}, {"num_bins", b.num_bins}};
}

ModelConfig parse_model(const json& j, const std::string& path, ModelConfig base) {
    check_keys(j, path,
               {"input_size", "heatmap_size", "num_joints", "feature_channels", "num_gnn_layers",
                "bins", "variant", "renormalize_masked", "bn_momentum", "bn_eps"});
    base.input_size = get_int(j, path, "input_size", base.input_size);
    base.heatmap_size = get_int(j, path, "heatmap_size", base.heatmap_size);
    base.num_joints = get_int(j, path, "num_joints", base.num_joints);
    base.feature_channels = get_int(j, path, "feature_channels", base.feature_channels);
    base.num_gnn_layers = get_int(j, path, "num_gnn_layers", base.num_gnn_layers);
    if (j.contains("bins")) base.bin_config = parse_bins(j.at("bins"), path + ".bins", base.bin_config);
    if (j.contains("variant")) {
        const std::string name = get_string(j, path, "variant", "full");
        try {
            base.variant = variant_from_name(name);
        } catch (const std::exception& e) {
            throw ConfigError(path + ".variant: " + e.what());
        }
    }
    base.renormalize_masked = get_bool(j, path, "renormalize_masked", base.renormalize_masked);
    base.bn_momentum = get_number(j, path, "bn_momentum", base.bn_momentum);
    base.bn_eps = get_number(j, path, "bn_eps", base.bn_eps);
    return base;
}

GenConfig parse_gen(const json& j, const std::string& path, GenConfig base) {
    check_keys(j, path,
               {"min_persons", "max_persons", "depth_min", "depth_max", "skeleton", "bone_mean",
                "bone_std", "joint_radius_mm", "image_size", "focal_min", "focal_max",
                "max_place_retries", "bins"});
    base.min_persons = get_int(j, path, "min_persons", base.min_persons);
    base.max_persons = get_int(j, path, "max_persons", base.max_persons);
    base.depth_min = get_number(j, path, "depth_min", base.depth_min);
    base.depth_max = get_number(j, path, "depth_max", base.depth_max);
    if (j.contains("skeleton")) {
        try {
            base.skeleton = skeleton_from_json(j.at("skeleton").dump());
        } catch (const std::exception& e) {
            throw ConfigError(path + ".skeleton: " + e.what());
        }
    }
    base.bone_mean = get_number_array(j, path, "bone_mean", base.bone_mean);
    base.bone_std = get_number_array(j, path, "bone_std", base.bone_std);
    base.joint_radius_mm = get_number(j, path, "joint_radius_mm", base.joint_radius_mm);
    base.image_size = get_int(j, path, "image_size", base.image_size);
    base.focal_min = get_number(j, path, "focal_min", base.focal_min);
    base.focal_max = get_number(j, path, "focal_max", base.focal_max);
    base.max_place_retries = get_int(j, path, "max_place_retries", base.max_place_retries);
    if (j.contains("bins")) base.bins = parse_bins(j.at("bins"), path + ".bins", base.bins);
    return base;
}

LossWeights parse_loss_weights(const json& j, const std::string& path, LossWeights base) {
    check_keys(j, path, {"hm", "pose", "bins", "idx"});
    base.hm = get_number(j, path, "hm", base.hm);
    base.pose = get_number(j, path, "pose", base.pose);
    base.bins = get_number(j, path, "bins", base.bins);
    base.idx = get_number(j, path, "idx", base.idx);
    return base;
}

OptimConfig parse_optimizer(const json& j, const std::string& path, OptimConfig base) {
    check_keys(j, path,
               {"learning_rate", "batch_size", "total_steps", "decay_factor", "decay_interval",
                "beta1", "beta2", "adam_eps"});
    base.learning_rate = get_number(j, path, "learning_rate", base.learning_rate);
    base.batch_size = get_int(j, path, "batch_size", base.batch_size);
    base.total_steps = get_int(j, path, "total_steps", base.total_steps);
    base.decay_factor = get_number(j, path, "decay_factor", base.decay_factor);
    base.decay_interval = get_int(j, path, "decay_interval", base.decay_interval);
    base.beta1 = get_number(j, path, "beta1", base.beta1);
    base.beta2 = get_number(j, path, "beta2", base.beta2);
    base.adam_eps = get_number(j, path, "adam_eps", base.adam_eps);
    return base;
}

}  // namespace

void OptimConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("optimizer.learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("optimizer.batch_size must be at least 1");
    if (total_steps < 1) throw ConfigError("optimizer.total_steps must be at least 1");
    if (decay_factor <= 0.0 || decay_factor > 1.0)
        throw ConfigError("optimizer.decay_factor must be in (0, 1]");
    if (decay_interval < 1) throw ConfigError("optimizer.decay_interval must be at least 1");
}

void ExperimentConfig::validate() const {
    model.validate();
    gen.validate();
    optimizer.validate();
    if (train_scenes < 1) throw ConfigError("train_scenes must be at least 1");
    if (eval_scenes < 1) throw ConfigError("eval_scenes must be at least 1");
    if (log_interval < 1) throw ConfigError("log_interval must be at least 1");
    if (model.num_joints != gen.skeleton.num_joints())
        throw ConfigError("model.num_joints must match the generator skeleton");
    if (model.bin_config.alpha != gen.bins.alpha || model.bin_config.beta != gen.bins.beta ||
        model.bin_config.num_bins != gen.bins.num_bins)
        throw ConfigError("model.bins must match gen.bins");
}

ExperimentConfig experiment_config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"model", "gen", "loss_weights", "optimizer", "seed", "out_dir", "train_scenes",
                "eval_scenes", "log_interval"});
    ExperimentConfig cfg;
    cfg.gen = GenConfig::desk_default();
    if (j.contains("model")) cfg.model = parse_model(j.at("model"), "model", cfg.model);
    if (j.contains("gen")) cfg.gen = parse_gen(j.at("gen"), "gen", cfg.gen);
    else cfg.gen.bins = cfg.model.bin_config;
    if (j.contains("gen") && !j.at("gen").contains("bins")) cfg.gen.bins = cfg.model.bin_config;
    if (j.contains("loss_weights"))
        cfg.loss_weights = parse_loss_weights(j.at("loss_weights"), "loss_weights", cfg.loss_weights);
    if (j.contains("optimizer"))
        cfg.optimizer = parse_optimizer(j.at("optimizer"), "optimizer", cfg.optimizer);
    cfg.seed = get_u64(j, "config", "seed", cfg.seed);
    cfg.out_dir = get_string(j, "config", "out_dir", cfg.out_dir);
    cfg.train_scenes = get_int(j, "config", "train_scenes", cfg.train_scenes);
    cfg.eval_scenes = get_int(j, "config", "eval_scenes", cfg.eval_scenes);
    cfg.log_interval = get_int(j, "config", "log_interval", cfg.log_interval);
    try {
        cfg.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return experiment_config_from_json(ss.str());
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["model"] = {{"input_size", cfg.model.input_size},
                  {"heatmap_size", cfg.model.heatmap_size},
                  {"num_joints", cfg.model.num_joints},
                  {"feature_channels", cfg.model.feature_channels},
                  {"num_gnn_layers", cfg.model.num_gnn_layers},
                  {"bins", bins_to_json(cfg.model.bin_config)},
                  {"variant", variant_name(cfg.model.variant)},
                  {"renormalize_masked", cfg.model.renormalize_masked},
                  {"bn_momentum", cfg.model.bn_momentum},
                  {"bn_eps", cfg.model.bn_eps}};
    j["gen"] = {{"min_persons", cfg.gen.min_persons},
                {"max_persons", cfg.gen.max_persons},
                {"depth_min", cfg.gen.depth_min},
                {"depth_max", cfg.gen.depth_max},
                {"skeleton", json::parse(skeleton_to_json(cfg.gen.skeleton))},
                {"bone_mean", cfg.gen.bone_mean},
                {"bone_std", cfg.gen.bone_std},
                {"joint_radius_mm", cfg.gen.joint_radius_mm},
                {"image_size", cfg.gen.image_size},
                {"focal_min", cfg.gen.focal_min},
                {"focal_max", cfg.gen.focal_max},
                {"max_place_retries", cfg.gen.max_place_retries},
                {"bins", bins_to_json(cfg.gen.bins)}};
    j["loss_weights"] = {{"hm", cfg.loss_weights.hm},
                         {"pose", cfg.loss_weights.pose},
                         {"bins", cfg.loss_weights.bins},
                         {"idx", cfg.loss_weights.idx}};
    j["optimizer"] = {{"learning_rate", cfg.optimizer.learning_rate},
                      {"batch_size", cfg.optimizer.batch_size},
                      {"total_steps", cfg.optimizer.total_steps},
                      {"decay_factor", cfg.optimizer.decay_factor},
                      {"decay_interval", cfg.optimizer.decay_interval},
                      {"beta1", cfg.optimizer.beta1},
                      {"beta2", cfg.optimizer.beta2},
                      {"adam_eps", cfg.optimizer.adam_eps}};
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["train_scenes"] = cfg.train_scenes;
    j["eval_scenes"] = cfg.eval_scenes;
    j["log_interval"] = cfg.log_interval;
    return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = experiment_config_to_json(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace hdnet
