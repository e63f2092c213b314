#include "hdnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hdnet/errors.hpp"

namespace hdnet {

namespace {

bool wants(const EvalOptions& opts, const std::string& family) {
    if (opts.metrics.empty()) return true;
    return std::find(opts.metrics.begin(), opts.metrics.end(), family) != opts.metrics.end();
}

}  // namespace

std::map<std::string, double> evaluate_scenes(Model& model, const ExperimentConfig& cfg,
                                              const std::vector<SceneSample>& scenes,
                                              const EvalOptions& opts) {
    const int P = cfg.model.input_size;
    const int h = cfg.model.heatmap_size;
    const double stride = static_cast<double>(P) / h;
    const int root = cfg.gen.skeleton.root_index;

    std::vector<RootPrediction> preds;
    std::vector<Vec3> gts;
    std::vector<std::vector<Vec3>> gt_poses;
    std::vector<int> pred_group, gt_group;
    MatchResult global_match;

    int scene_id = 0;
    for (const SceneSample& scene : scenes) {
        Tensor image = Tensor::from({3, static_cast<std::size_t>(scene.size),
                                     static_cast<std::size_t>(scene.size)},
                                    scene.image);
        std::vector<RootPrediction> scene_preds;
        std::vector<Vec3> scene_gts;
        for (const PersonGT& person : scene.persons) {
            const double cx = 0.5 * (person.bbox.x0 + person.bbox.x1);
            const double cy = 0.5 * (person.bbox.y0 + person.bbox.y1);
            CropTransform xf;
            Tensor patch = crop_patch(image, cx, cy, P, &xf);
            const BBox box{std::clamp((person.bbox.x0 - xf.dx) / stride, 0.0, h - 1.0),
                           std::clamp((person.bbox.y0 - xf.dy) / stride, 0.0, h - 1.0),
                           std::clamp((person.bbox.x1 - xf.dx) / stride, 0.0, h - 1.0),
                           std::clamp((person.bbox.y1 - xf.dy) / stride, 0.0, h - 1.0)};
            const Model::Prediction p = model.predict(patch, &box, scene.camera, xf.dx, xf.dy);

            RootPrediction rp;
            rp.root3d = p.root3d;
            rp.score = p.score;
            const Vec3& gt_root = person.pose3d.at(root);
            std::vector<Vec3> pose;
            for (const Vec3& j : person.pose3d)
                pose.push_back({p.root3d.x + j.x - gt_root.x, p.root3d.y + j.y - gt_root.y,
                                p.root3d.z + j.z - gt_root.z});
            rp.pose3d = std::move(pose);
            scene_preds.push_back(std::move(rp));
            scene_gts.push_back(gt_root);
        }

        const MatchResult m = match_roots(scene_preds, scene_gts, opts.match_mode);
        const int pred_base = static_cast<int>(preds.size());
        const int gt_base = static_cast<int>(gts.size());
        for (const MatchPair& pair : m.pairs)
            global_match.pairs.push_back(
                {pair.pred_index + pred_base, pair.gt_index + gt_base, pair.distance});
        for (std::size_t i = 0; i < scene_preds.size(); ++i) {
            preds.push_back(scene_preds[i]);
            pred_group.push_back(scene_id);
        }
        for (std::size_t i = 0; i < scene_gts.size(); ++i) {
            gts.push_back(scene_gts[i]);
            gt_group.push_back(scene_id);
            gt_poses.push_back(scene.persons[i].pose3d);
        }
        ++scene_id;
    }
    if (gts.empty()) throw DataError("evaluate_scenes: no ground-truth persons");

    std::map<std::string, double> out;
    if (wants(opts, "mrpe")) {
        const MrpeResult r = mrpe(preds, gts, global_match);
        out["mrpe"] = r.mrpe;
        out["mrpe_x"] = r.mrpe_x;
        out["mrpe_y"] = r.mrpe_y;
        out["mrpe_z"] = r.mrpe_z;
    }
    if (wants(opts, "ap")) {
        const std::vector<ApAr> aps =
            root_ap_ar_grouped(preds, pred_group, gts, gt_group, opts.ap_thresholds_mm);
        for (const ApAr& a : aps) {
            const std::string suffix = std::to_string(static_cast<int>(a.threshold_mm));
            out["ap_" + suffix] = a.ap;
            out["ar_" + suffix] = a.ar;
        }
    }
    if (wants(opts, "pck")) {
        out["pck_abs"] = pck(preds, gt_poses, global_match, PckMode::absolute, root);
        out["pck_rel"] = pck(preds, gt_poses, global_match, PckMode::root_aligned, root);
    }
    return out;
}

std::map<std::string, double> evaluate_model(Model& model, const ExperimentConfig& cfg,
                                             const EvalOptions& opts,
                                             const std::string& csv_path) {
    std::vector<SceneSample> scenes;
    for (int i = 0; i < opts.num_scenes; ++i)
        scenes.push_back(generate_scene(cfg.gen, opts.seed + static_cast<std::uint64_t>(i)));
    std::map<std::string, double> metrics = evaluate_scenes(model, cfg, scenes, opts);
    if (!csv_path.empty()) write_metrics_csv(metrics, csv_path);
    return metrics;
}

void write_metrics_csv(const std::map<std::string, double>& metrics, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("write_metrics_csv: cannot open " + path);
    bool first = true;
    for (const auto& [k, v] : metrics) {
        out << (first ? "" : ",") << k;
        first = false;
    }
    out << "\n";
    first = true;
    for (const auto& [k, v] : metrics) {
        out << (first ? "" : ",") << v;
        first = false;
    }
    out << "\n";
}

}  // namespace hdnet
