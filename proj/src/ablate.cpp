#include "hdnet/ablate.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hdnet/checkpoint.hpp"
#include "hdnet/errors.hpp"
#include "hdnet/eval.hpp"
#include "hdnet/train.hpp"

namespace hdnet {

namespace fs = std::filesystem;

AblateResult run_ablation(const ExperimentConfig& base, const std::vector<std::string>& variants,
                          const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
    fs::create_directories(out_dir);
    AblateResult result;

    for (const std::string& name : variants) {
        AblateSummary summary;
        summary.variant = name;
        std::vector<double> vals, mrpes;
        for (std::uint64_t seed : seeds) {
            ExperimentConfig cfg = base;
            cfg.model.variant = variant_from_name(name);
            cfg.seed = seed;
            cfg.out_dir = (fs::path(out_dir) / (name + "_seed" + std::to_string(seed))).string();

            AblateRow row;
            row.variant = name;
            row.seed = seed;
            row.hash = config_hash(cfg);
            try {
                TrainResult tr = train_model(cfg);
                ExperimentConfig saved;
                auto model = load_checkpoint(tr.final_ckpt, &saved);
                EvalOptions opts;
                opts.num_scenes = 32;
                opts.seed = 0xe5a1;
                opts.metrics = {"mrpe"};
                const auto metrics = evaluate_model(*model, cfg, opts);
                row.val_rel_err = tr.final_val_rel_err;
                row.mrpe = metrics.at("mrpe");
                vals.push_back(row.val_rel_err);
                mrpes.push_back(row.mrpe);
            } catch (const NumericError&) {
                row.diverged = true;
                row.val_rel_err = std::nan("");
                row.mrpe = std::nan("");
                ++summary.diverged_runs;
            }
            result.rows.push_back(std::move(row));
        }
        auto mean_std = [](const std::vector<double>& xs) {
            if (xs.empty()) return std::pair<double, double>{std::nan(""), std::nan("")};
            double m = 0.0;
            for (double x : xs) m += x;
            m /= static_cast<double>(xs.size());
            double s = 0.0;
            for (double x : xs) s += (x - m) * (x - m);
            s = xs.size() > 1 ? std::sqrt(s / static_cast<double>(xs.size() - 1)) : 0.0;
            return std::pair<double, double>{m, s};
        };
        std::tie(summary.mean_val_rel_err, summary.std_val_rel_err) = mean_std(vals);
        std::tie(summary.mean_mrpe, summary.std_mrpe) = mean_std(mrpes);
        result.summaries.push_back(summary);
    }

    std::ofstream rows_csv(fs::path(out_dir) / "ablation.csv");
    rows_csv << "variant,seed,config_hash,val_rel_err,mrpe,diverged\n";
    for (const AblateRow& r : result.rows)
        rows_csv << r.variant << "," << r.seed << "," << r.hash << "," << r.val_rel_err << ","
                 << r.mrpe << "," << (r.diverged ? 1 : 0) << "\n";

    std::ofstream sum_csv(fs::path(out_dir) / "ablation_summary.csv");
    sum_csv << "variant,mean_val_rel_err,std_val_rel_err,mean_mrpe,std_mrpe,diverged_runs\n";
    for (const AblateSummary& s : result.summaries)
        sum_csv << s.variant << "," << s.mean_val_rel_err << "," << s.std_val_rel_err << ","
                << s.mean_mrpe << "," << s.std_mrpe << "," << s.diverged_runs << "\n";
    return result;
}

}  // namespace hdnet
