#include "hdnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hdnet/errors.hpp"
#include "hdnet/losses.hpp"
#include "hdnet/metrics.hpp"

namespace hdnet {

namespace fs = std::filesystem;

namespace {

constexpr double kHeatmapSigma = 0.75;
constexpr int kValInterval = 250;
constexpr int kCheckpointInterval = 500;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct SampleTargets {
    Tensor patch;  // [3,P,P]
    Tensor heatmaps;
    std::vector<double> pose_hm;  // J*2
    std::vector<double> bins;
    double b = 0.0, dhat = 0.0;
    BBox box_hm;
};

SampleTargets make_sample(const ExperimentConfig& cfg, std::uint64_t scene_seed,
                          std::uint64_t pick_seed) {
    const SceneSample scene = generate_scene(cfg.gen, scene_seed);
    const std::size_t pi = pick_seed % scene.persons.size();
    const PersonGT& person = scene.persons[pi];

    const int P = cfg.model.input_size;
    const int h = cfg.model.heatmap_size;
    const double stride = static_cast<double>(P) / h;
    const double cx = 0.5 * (person.bbox.x0 + person.bbox.x1);
    const double cy = 0.5 * (person.bbox.y0 + person.bbox.y1);

    SampleTargets s;
    Tensor image = Tensor::from({3, static_cast<std::size_t>(scene.size),
                                 static_cast<std::size_t>(scene.size)},
                                scene.image);
    CropTransform xf;
    s.patch = crop_patch(image, cx, cy, P, &xf);

    std::vector<std::array<double, 2>> pose_hm(person.pose2d.size());
    for (std::size_t j = 0; j < person.pose2d.size(); ++j) {
        pose_hm[j] = {(person.pose2d[j][0] - xf.dx) / stride,
                      (person.pose2d[j][1] - xf.dy) / stride};
    }
    s.heatmaps = render_gt_heatmaps(pose_hm, kHeatmapSigma, h, h);
    for (const auto& uv : pose_hm) {
        s.pose_hm.push_back(std::clamp(uv[0], 0.0, h - 1.0));
        s.pose_hm.push_back(std::clamp(uv[1], 0.0, h - 1.0));
    }
    s.box_hm = {std::clamp((person.bbox.x0 - xf.dx) / stride, 0.0, h - 1.0),
                std::clamp((person.bbox.y0 - xf.dy) / stride, 0.0, h - 1.0),
                std::clamp((person.bbox.x1 - xf.dx) / stride, 0.0, h - 1.0),
                std::clamp((person.bbox.y1 - xf.dy) / stride, 0.0, h - 1.0)};
    s.bins = person.bin_target;
    s.dhat = normalize_depth(person.root_depth, scene.camera);
    s.b = bin_index(s.dhat, cfg.gen.bins);
    return s;
}

void adam_step(Model& model, TrainState& state, const OptimConfig& opt, double lr) {
    const int t = state.step + 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, t);
    const double bc2 = 1.0 - std::pow(opt.beta2, t);
    for (auto& [name, p] : model.params()) {
        if (!p.requires_grad()) continue;
        auto& m = state.adam_m[name];
        auto& v = state.adam_v[name];
        if (m.size() != p.size()) m.assign(p.size(), 0.0);
        if (v.size() != p.size()) v.assign(p.size(), 0.0);
        const double* g = p.grad();
        double* w = p.data();
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
            w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opt.adam_eps);
        }
    }
}

}  // namespace

std::uint64_t sample_seed(std::uint64_t cfg_seed, int step, int sample) {
    return splitmix64(cfg_seed ^ splitmix64(static_cast<std::uint64_t>(step) * 0x10001ull +
                                            static_cast<std::uint64_t>(sample)));
}

Batch build_batch(const ExperimentConfig& cfg, int step) {
    const int B = cfg.optimizer.batch_size;
    const std::size_t P = cfg.model.input_size;
    const std::size_t h = cfg.model.heatmap_size;
    const std::size_t J = cfg.model.num_joints;
    const std::size_t NB = cfg.model.bin_config.num_bins;

    Batch batch;
    batch.images = Tensor::zeros({static_cast<std::size_t>(B), 3, P, P});
    batch.hm_target = Tensor::zeros({static_cast<std::size_t>(B), J, h, h});
    batch.pose_target = Tensor::zeros({static_cast<std::size_t>(B), J, 2});
    batch.bin_target = Tensor::zeros({static_cast<std::size_t>(B), NB});
    batch.b_target = Tensor::zeros({static_cast<std::size_t>(B), 1});
    batch.dhat_target = Tensor::zeros({static_cast<std::size_t>(B), 1});

    // draw from a fixed pool of train_scenes so the schedule revisits a
    // bounded synthetic dataset instead of fresh scenes forever
    const std::uint64_t pool_base = splitmix64(cfg.seed ^ 0x7261696eull);
    for (int i = 0; i < B; ++i) {
        const std::uint64_t pick = sample_seed(cfg.seed, step, i);
        const std::uint64_t seed =
            pool_base + pick % static_cast<std::uint64_t>(cfg.train_scenes);
        batch.seeds.push_back(seed);
        SampleTargets s = make_sample(cfg, seed, pick);
        std::copy(s.patch.values().begin(), s.patch.values().end(),
                  batch.images.values().begin() + static_cast<std::ptrdiff_t>(i * 3 * P * P));
        std::copy(s.heatmaps.values().begin(), s.heatmaps.values().end(),
                  batch.hm_target.values().begin() + static_cast<std::ptrdiff_t>(i * J * h * h));
        std::copy(s.pose_hm.begin(), s.pose_hm.end(),
                  batch.pose_target.values().begin() + static_cast<std::ptrdiff_t>(i * J * 2));
        std::copy(s.bins.begin(), s.bins.end(),
                  batch.bin_target.values().begin() + static_cast<std::ptrdiff_t>(i * NB));
        batch.b_target.values()[i] = s.b;
        batch.dhat_target.values()[i] = s.dhat;
        batch.boxes.push_back(s.box_hm);
    }
    return batch;
}

double validation_rel_depth_err(Model& model, const ExperimentConfig& cfg) {
    std::vector<double> errs;
    const int P = cfg.model.input_size;
    const int h = cfg.model.heatmap_size;
    const double stride = static_cast<double>(P) / h;
    for (int i = 0; i < cfg.eval_scenes; ++i) {
        const std::uint64_t seed = splitmix64(cfg.seed ^ 0x76616c21ull) + static_cast<std::uint64_t>(i);
        const SceneSample scene = generate_scene(cfg.gen, seed);
        Tensor image = Tensor::from({3, static_cast<std::size_t>(scene.size),
                                     static_cast<std::size_t>(scene.size)},
                                    scene.image);
        for (const PersonGT& person : scene.persons) {
            const double cx = 0.5 * (person.bbox.x0 + person.bbox.x1);
            const double cy = 0.5 * (person.bbox.y0 + person.bbox.y1);
            CropTransform xf;
            Tensor patch = crop_patch(image, cx, cy, P, &xf);
            const BBox box{std::clamp((person.bbox.x0 - xf.dx) / stride, 0.0, h - 1.0),
                           std::clamp((person.bbox.y0 - xf.dy) / stride, 0.0, h - 1.0),
                           std::clamp((person.bbox.x1 - xf.dx) / stride, 0.0, h - 1.0),
                           std::clamp((person.bbox.y1 - xf.dy) / stride, 0.0, h - 1.0)};
            const Model::Prediction pred = model.predict(patch, &box, scene.camera, xf.dx, xf.dy);
            errs.push_back(std::fabs(pred.depth - person.root_depth) / person.root_depth);
        }
    }
    std::sort(errs.begin(), errs.end());
    const std::size_t n = errs.size();
    return n % 2 ? errs[n / 2] : 0.5 * (errs[n / 2 - 1] + errs[n / 2]);
}

void write_loss_plot_svg(const std::vector<StepStats>& history, const std::string& svg_path) {
    std::ofstream out(svg_path);
    if (!out || history.empty()) return;
    const double W = 800, H = 300, ml = 60, mb = 30, mt = 10, mr = 10;
    double lo = 1e30, hi = -1e30;
    for (const StepStats& s : history) {
        const double y = std::log10(std::max(s.total, 1e-12));
        lo = std::min(lo, y);
        hi = std::max(hi, y);
    }
    if (hi - lo < 1e-9) hi = lo + 1.0;
    const double x0 = history.front().step, x1 = history.back().step;
    auto px = [&](double step) {
        return ml + (step - x0) / std::max(1.0, x1 - x0) * (W - ml - mr);
    };
    auto py = [&](double logy) { return H - mb - (logy - lo) / (hi - lo) * (H - mb - mt); };
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << (H - mb) << "\" x2=\"" << (W - mr) << "\" y2=\""
        << (H - mb) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << (H - mb)
        << "\" stroke=\"black\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"";
    for (const StepStats& s : history)
        out << px(s.step) << "," << py(std::log10(std::max(s.total, 1e-12))) << " ";
    out << "\"/>\n";
    out << "<text x=\"5\" y=\"" << (py(hi) + 4) << "\" font-size=\"11\">1e" << hi << "</text>\n";
    out << "<text x=\"5\" y=\"" << (py(lo) + 4) << "\" font-size=\"11\">1e" << lo << "</text>\n";
    out << "<text x=\"" << (W / 2 - 60) << "\" y=\"" << (H - 8)
        << "\" font-size=\"11\">step (total loss, log scale)</text>\n";
    out << "</svg>\n";
}

TrainResult train_model(const ExperimentConfig& cfg, const std::string& resume_path,
                        int stop_after) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    std::unique_ptr<Model> model;
    TrainState state;
    if (!resume_path.empty()) {
        ExperimentConfig saved;
        model = load_checkpoint(resume_path, &saved, &state);
        if (config_hash(saved) != config_hash(cfg))
            throw ConfigError("resume checkpoint was trained with a different config");
    } else {
        model = std::make_unique<Model>(cfg.model, cfg.gen.skeleton, cfg.seed);
    }

    const std::string csv_path = (fs::path(cfg.out_dir) / "train_log.csv").string();
    std::ofstream csv(csv_path, resume_path.empty() ? std::ios::trunc : std::ios::app);
    if (!csv) throw DataError("train: cannot open " + csv_path);
    if (resume_path.empty()) csv << "step,lr,total,hm,pose,bins,idx,val_rel_err\n";

    const bool direct = cfg.model.variant == Variant::direct_regression;
    const int end_step = stop_after >= 0 ? std::min(stop_after, cfg.optimizer.total_steps)
                                         : cfg.optimizer.total_steps;
    TrainResult result;
    for (int step = state.step; step < end_step; ++step) {
        const double lr = cfg.optimizer.learning_rate *
                          std::pow(cfg.optimizer.decay_factor, step / cfg.optimizer.decay_interval);
        Batch batch = build_batch(cfg, step);

        for (auto& [name, p] : model->params()) p.zero_grad();
        Tape tape;
        ModelOutput out = model->forward(tape, batch.images, &batch.boxes, true);
        Tensor l_hm = heatmap_mse(tape, out.heatmaps, batch.hm_target);
        Tensor l_pose = pose_l1(tape, out.pose_hm, batch.pose_target);
        Tensor l_bins =
            direct ? Tensor::scalar(0.0) : bins_ce(tape, out.bins, batch.bin_target);
        Tensor l_idx = direct ? idx_l1(tape, out.dhat_direct, batch.dhat_target)
                              : idx_l1(tape, out.bhat, batch.b_target);
        Tensor total = total_loss(tape, l_hm, l_pose, l_bins, l_idx, cfg.loss_weights);

        if (!std::isfinite(total.item())) {
            std::ostringstream msg;
            msg << "train: non-finite loss at step " << step << "; batch seeds:";
            for (std::uint64_t s : batch.seeds) msg << " " << s;
            throw NumericError(msg.str());
        }
        tape.backward(total);
        adam_step(*model, state, cfg.optimizer, lr);
        state.step = step + 1;

        StepStats stats;
        stats.step = step;
        stats.lr = lr;
        stats.total = total.item();
        stats.hm = l_hm.item();
        stats.pose = l_pose.item();
        stats.bins = l_bins.item();
        stats.idx = l_idx.item();

        const bool last = step + 1 == cfg.optimizer.total_steps;
        if ((step + 1) % kValInterval == 0 || last) {
            stats.val_rel_err = validation_rel_depth_err(*model, cfg);
            if (!state.has_best || stats.val_rel_err < state.best_val) {
                state.has_best = true;
                state.best_val = stats.val_rel_err;
                result.best_ckpt = (fs::path(cfg.out_dir) / "best.ckpt").string();
                save_checkpoint(result.best_ckpt, *model, cfg, &state);
            }
        }
        if ((step + 1) % kCheckpointInterval == 0 || last)
            save_checkpoint((fs::path(cfg.out_dir) / "last.ckpt").string(), *model, cfg, &state);

        csv << stats.step << "," << stats.lr << "," << stats.total << "," << stats.hm << ","
            << stats.pose << "," << stats.bins << "," << stats.idx << ",";
        if (stats.val_rel_err >= 0.0) csv << stats.val_rel_err;
        csv << "\n";
        if ((step + 1) % cfg.log_interval == 0) csv.flush();
        result.history.push_back(stats);
    }

    if (end_step < cfg.optimizer.total_steps) {
        // paused mid-schedule: persist the trajectory and skip the final
        // artifacts so a resumed run can complete them
        result.final_ckpt = (fs::path(cfg.out_dir) / "last.ckpt").string();
        save_checkpoint(result.final_ckpt, *model, cfg, &state);
        return result;
    }

    result.final_ckpt = (fs::path(cfg.out_dir) / "final.ckpt").string();
    save_checkpoint(result.final_ckpt, *model, cfg, &state);
    if (result.best_ckpt.empty()) result.best_ckpt = result.final_ckpt;
    result.final_val_rel_err =
        result.history.empty() ? validation_rel_depth_err(*model, cfg)
                               : (result.history.back().val_rel_err >= 0.0
                                      ? result.history.back().val_rel_err
                                      : validation_rel_depth_err(*model, cfg));
    write_loss_plot_svg(result.history, (fs::path(cfg.out_dir) / "loss_curve.svg").string());
    return result;
}

}  // namespace hdnet
