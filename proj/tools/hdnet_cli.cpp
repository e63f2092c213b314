#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "hdnet/hdnet_c.h"

namespace {

int default_workers() {
    const char* env = std::getenv("HDNET_WORKERS");
    if (!env) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (!end || *end != '\0' || v < 1) {
        std::fprintf(stderr, "HDNET_WORKERS must be a positive integer, got '%s'\n", env);
        std::exit(HDNET_ERR_CONFIG);
    }
    return static_cast<int>(v);
}

int finish(hdnet_status status, const char* err) {
    if (status != HDNET_OK) std::fprintf(stderr, "error: %s\n", err);
    return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hdnet: multi-person camera-space root localization on synthetic scenes"};
    app.require_subcommand(1);
    char err[4096] = {0};

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Render a dataset directory");
    std::string gen_config, gen_out;
    unsigned long long gen_seed = 1;
    int gen_count = 128, gen_workers = default_workers();
    gen->add_option("--config", gen_config, "experiment config JSON")->required();
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", gen_seed, "base scene seed");
    gen->add_option("--count", gen_count, "number of scenes");
    gen->add_option("--workers", gen_workers, "render threads (default $HDNET_WORKERS or 1)");

    // train
    auto* train = app.add_subcommand("train", "Run the training schedule");
    std::string train_config, train_resume, train_out;
    unsigned long long train_seed = 0;
    bool train_has_seed = false;
    train->add_option("--config", train_config, "experiment config JSON")->required();
    train->add_option("--resume", train_resume, "checkpoint to continue from");
    train->add_option("--out", train_out, "override the config out_dir");
    train->add_option("--seed", train_seed, "override the config seed")
        ->each([&](const std::string&) { train_has_seed = true; });

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on generated scenes");
    std::string eval_ckpt, eval_metrics, eval_out;
    unsigned long long eval_seed = 12345;
    int eval_scenes = 64;
    eval->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
    eval->add_option("--scenes", eval_scenes, "number of scenes");
    eval->add_option("--seed", eval_seed, "scene seed");
    eval->add_option("--metrics", eval_metrics, "comma list from {mrpe,ap,pck}; default all");
    eval->add_option("--out", eval_out, "metrics CSV path");

    // grad-check
    auto* grad = app.add_subcommand("grad-check", "Finite-difference audit of the primitives");
    unsigned long long grad_seed = 7;
    std::string grad_report;
    grad->add_option("--seed", grad_seed, "probe seed");
    grad->add_option("--report", grad_report, "write the per-entry report here");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Train and compare model variants");
    std::string ab_config, ab_out;
    std::string ab_variants = "full,direct-regression,no-hm-pooling";
    std::string ab_seeds = "1,2,3";
    ablate->add_option("--config", ab_config, "experiment config JSON")->required();
    ablate->add_option("--out", ab_out, "output directory")->required();
    ablate->add_option("--variants", ab_variants, "comma list of variants");
    ablate->add_option("--seeds", ab_seeds, "comma list of seeds");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        return finish(hdnet_gen_data(gen_config.c_str(), gen_seed, gen_count, gen_out.c_str(),
                                     gen_workers, err, sizeof(err)),
                      err);
    }
    if (train->parsed()) {
        double final_val = 0.0;
        const hdnet_status st = hdnet_train(
            train_config.c_str(), train_resume.empty() ? nullptr : train_resume.c_str(),
            train_out.empty() ? nullptr : train_out.c_str(), train_has_seed ? 1 : 0, train_seed,
            &final_val, err, sizeof(err));
        if (st == HDNET_OK)
            std::printf("final validation median relative depth error: %.6f\n", final_val);
        return finish(st, err);
    }
    if (eval->parsed()) {
        const hdnet_status st =
            hdnet_eval(eval_ckpt.c_str(), eval_scenes, eval_seed,
                       eval_metrics.empty() ? nullptr : eval_metrics.c_str(),
                       eval_out.empty() ? nullptr : eval_out.c_str(), err, sizeof(err));
        if (st == HDNET_OK && eval_out.empty())
            std::printf("evaluation finished (pass --out to keep the CSV)\n");
        return finish(st, err);
    }
    if (grad->parsed()) {
        int failures = 0;
        const hdnet_status st = hdnet_grad_check(
            grad_seed, grad_report.empty() ? nullptr : grad_report.c_str(), &failures, err,
            sizeof(err));
        std::printf("gradient audit: %s (%d failing entr%s)\n",
                    st == HDNET_OK ? "pass" : "FAIL", failures, failures == 1 ? "y" : "ies");
        return finish(st, err);
    }
    if (ablate->parsed()) {
        return finish(hdnet_ablate(ab_config.c_str(), ab_variants.c_str(), ab_seeds.c_str(),
                                   ab_out.c_str(), err, sizeof(err)),
                      err);
    }
    return HDNET_ERR;
}
