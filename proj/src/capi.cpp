#include "hdnet/hdnet_c.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include "hdnet/ablate.hpp"
#include "hdnet/checkpoint.hpp"
#include "hdnet/data.hpp"
#include "hdnet/errors.hpp"
#include "hdnet/eval.hpp"
#include "hdnet/gradsuite.hpp"
#include "hdnet/train.hpp"

using namespace hdnet;

extern "C" {

struct hdnet_model {
    std::unique_ptr<Model> model;
    ExperimentConfig cfg;
};

}  // extern "C"

namespace {

void set_err(char* err, size_t err_len, const std::string& msg) {
    if (!err || err_len == 0) return;
    const size_t n = std::min(msg.size(), err_len - 1);
    std::memcpy(err, msg.data(), n);
    err[n] = '\0';
}

template <typename Fn>
hdnet_status guarded(char* err, size_t err_len, Fn&& fn) {
    try {
        fn();
        return HDNET_OK;
    } catch (const ConfigError& e) {
        set_err(err, err_len, e.what());
        return HDNET_ERR_CONFIG;
    } catch (const DataError& e) {
        set_err(err, err_len, e.what());
        return HDNET_ERR_DATA;
    } catch (const NumericError& e) {
        set_err(err, err_len, e.what());
        return HDNET_ERR_NUMERIC;
    } catch (const std::exception& e) {
        set_err(err, err_len, e.what());
        return HDNET_ERR;
    }
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

extern "C" {

hdnet_status hdnet_gen_data(const char* config_path, unsigned long long seed, int count,
                            const char* out_dir, int workers, char* err, size_t err_len) {
    return guarded(err, err_len, [&] {
        if (!config_path || !out_dir) throw ConfigError("gen_data: null argument");
        ExperimentConfig cfg = load_experiment_config(config_path);
        export_dataset(cfg, seed, count, out_dir, workers);
    });
}

hdnet_status hdnet_train(const char* config_path, const char* resume_ckpt, const char* out_dir,
                         int use_seed, unsigned long long seed, double* out_final_val, char* err,
                         size_t err_len) {
    return guarded(err, err_len, [&] {
        if (!config_path) throw ConfigError("train: null config path");
        ExperimentConfig cfg = load_experiment_config(config_path);
        if (out_dir) cfg.out_dir = out_dir;
        if (use_seed) cfg.seed = seed;
        const TrainResult r = train_model(cfg, resume_ckpt ? resume_ckpt : "");
        if (out_final_val) *out_final_val = r.final_val_rel_err;
    });
}

hdnet_status hdnet_eval(const char* ckpt_path, int num_scenes, unsigned long long seed,
                        const char* metrics_csv, const char* out_csv, char* err, size_t err_len) {
    return guarded(err, err_len, [&] {
        if (!ckpt_path) throw ConfigError("eval: null checkpoint path");
        if (num_scenes < 1) throw ConfigError("eval: num_scenes must be at least 1");
        ExperimentConfig cfg;
        auto model = load_checkpoint(ckpt_path, &cfg);
        EvalOptions opts;
        opts.num_scenes = num_scenes;
        opts.seed = seed;
        if (metrics_csv) opts.metrics = split_csv(metrics_csv);
        for (const std::string& m : opts.metrics)
            if (m != "mrpe" && m != "ap" && m != "pck")
                throw ConfigError("eval: unknown metric family '" + m + "'");
        evaluate_model(*model, cfg, opts, out_csv ? out_csv : "");
    });
}

hdnet_status hdnet_grad_check(unsigned long long seed, const char* report_path, int* out_failures,
                              char* err, size_t err_len) {
    return guarded(err, err_len, [&] {
        const std::vector<GradSuiteEntry> entries = run_gradient_suite(seed);
        int failures = 0;
        std::ostringstream report;
        for (const GradSuiteEntry& e : entries) {
            report << (e.pass ? "pass" : "FAIL") << "  " << e.name << "  max_rel_err="
                   << e.max_rel_err << "\n";
            if (!e.pass) ++failures;
        }
        if (report_path) {
            std::ofstream out(report_path);
            if (!out) throw DataError("grad_check: cannot open " + std::string(report_path));
            out << report.str();
        }
        if (out_failures) *out_failures = failures;
        if (failures > 0) throw NumericError("grad_check: " + std::to_string(failures) +
                                             " primitive(s) failed:\n" + report.str());
    });
}

hdnet_status hdnet_ablate(const char* config_path, const char* variants_csv,
                          const char* seeds_csv, const char* out_dir, char* err, size_t err_len) {
    return guarded(err, err_len, [&] {
        if (!config_path || !variants_csv || !seeds_csv || !out_dir)
            throw ConfigError("ablate: null argument");
        ExperimentConfig cfg = load_experiment_config(config_path);
        std::vector<std::string> variants = split_csv(variants_csv);
        if (variants.empty()) throw ConfigError("ablate: empty variant list");
        for (const std::string& v : variants) variant_from_name(v);  // validate early
        std::vector<std::uint64_t> seeds;
        for (const std::string& s : split_csv(seeds_csv)) {
            try {
                seeds.push_back(std::stoull(s));
            } catch (const std::exception&) {
                throw ConfigError("ablate: bad seed '" + s + "'");
            }
        }
        if (seeds.empty()) throw ConfigError("ablate: empty seed list");
        run_ablation(cfg, variants, seeds, out_dir);
    });
}

hdnet_status hdnet_model_load(const char* ckpt_path, hdnet_model** out, char* err,
                              size_t err_len) {
    return guarded(err, err_len, [&] {
        if (!ckpt_path || !out) throw ConfigError("model_load: null argument");
        auto handle = std::make_unique<hdnet_model>();
        handle->model = load_checkpoint(ckpt_path, &handle->cfg);
        *out = handle.release();
    });
}

void hdnet_model_free(hdnet_model* model) { delete model; }

int hdnet_model_input_size(const hdnet_model* model) {
    return model ? model->cfg.model.input_size : 0;
}

hdnet_status hdnet_model_predict(hdnet_model* model, const double* patch, int patch_size,
                                 const double* bbox_hm, double fx, double fy, double cx, double cy,
                                 double patch_du, double patch_dv, double out_root_xyz[3],
                                 double* out_score, char* err, size_t err_len) {
    return guarded(err, err_len, [&] {
        if (!model || !patch || !out_root_xyz) throw ConfigError("predict: null argument");
        const int P = model->cfg.model.input_size;
        if (patch_size != P)
            throw ConfigError("predict: patch size " + std::to_string(patch_size) +
                              " does not match the model input " + std::to_string(P));
        Tensor image = Tensor::from(
            {3, static_cast<std::size_t>(P), static_cast<std::size_t>(P)},
            std::vector<double>(patch, patch + 3 * static_cast<std::size_t>(P) * P));
        BBox box;
        if (bbox_hm) box = {bbox_hm[0], bbox_hm[1], bbox_hm[2], bbox_hm[3]};
        const CameraIntrinsics cam{fx, fy, cx, cy};
        const Model::Prediction pred =
            model->model->predict(image, bbox_hm ? &box : nullptr, cam, patch_du, patch_dv);
        out_root_xyz[0] = pred.root3d.x;
        out_root_xyz[1] = pred.root3d.y;
        out_root_xyz[2] = pred.root3d.z;
        if (out_score) *out_score = pred.score;
    });
}

hdnet_status hdnet_encode_bins(double depth_mm, double fx, double fy, double alpha, double beta,
                               int num_bins, double* out_dist, char* err, size_t err_len) {
    return guarded(err, err_len, [&] {
        if (!out_dist) throw ConfigError("encode_bins: null output");
        if (num_bins < 2) throw ConfigError("encode_bins: num_bins must be at least 2");
        const CameraIntrinsics cam{fx, fy, 0.0, 0.0};
        const BinConfig bins{alpha, beta, num_bins};
        const double b = bin_index(normalize_depth(depth_mm, cam), bins);
        const std::vector<double> dist = encode_bins(b, num_bins);
        std::copy(dist.begin(), dist.end(), out_dist);
    });
}

hdnet_status hdnet_decode_depth(const double* dist, int num_bins, double alpha, double beta,
                                double fx, double fy, double* out_depth_mm, char* err,
                                size_t err_len) {
    return guarded(err, err_len, [&] {
        if (!dist || !out_depth_mm) throw ConfigError("decode_depth: null argument");
        if (num_bins < 2) throw ConfigError("decode_depth: num_bins must be at least 2");
        const CameraIntrinsics cam{fx, fy, 0.0, 0.0};
        const BinConfig bins{alpha, beta, num_bins};
        *out_depth_mm =
            decode_depth(std::vector<double>(dist, dist + num_bins), bins, cam);
    });
}

hdnet_status hdnet_back_project(double u, double v, double depth_mm, double fx, double fy,
                                double cx, double cy, double out_xyz[3], char* err,
                                size_t err_len) {
    return guarded(err, err_len, [&] {
        if (!out_xyz) throw ConfigError("back_project: null output");
        const Vec3 p = back_project(u, v, depth_mm, CameraIntrinsics{fx, fy, cx, cy});
        out_xyz[0] = p.x;
        out_xyz[1] = p.y;
        out_xyz[2] = p.z;
    });
}

}  // extern "C"
