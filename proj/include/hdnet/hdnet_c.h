#ifndef HDNET_C_H
#define HDNET_C_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes in the CLI. */
typedef enum {
    HDNET_OK = 0,
    HDNET_ERR = 1,         /* unclassified failure */
    HDNET_ERR_CONFIG = 2,  /* bad configuration or arguments */
    HDNET_ERR_DATA = 3,    /* missing or malformed files */
    HDNET_ERR_NUMERIC = 4  /* non-finite values during optimization */
} hdnet_status;

/* Every command fills `err` (NUL-terminated, truncated to err_len) on failure. */

/* Renders `count` scenes from the generator settings in the JSON config and
 * writes a dataset directory (manifest.json, index.jsonl, images.bin). */
hdnet_status hdnet_gen_data(const char* config_path, unsigned long long seed, int count,
                            const char* out_dir, int workers, char* err, size_t err_len);

/* Runs the config's full training schedule. Optional overrides: resume_ckpt
 * continues a saved trajectory; out_dir and seed replace the config values
 * when non-NULL / non-zero sentinel is given (pass NULL and use_seed=0 to
 * keep the config). On success *out_final_val, when non-NULL, receives the
 * final median relative root-depth error on the validation split. */
hdnet_status hdnet_train(const char* config_path, const char* resume_ckpt, const char* out_dir,
                         int use_seed, unsigned long long seed, double* out_final_val, char* err,
                         size_t err_len);

/* Evaluates a checkpoint on freshly generated scenes. metrics_csv selects
 * metric families as a comma list ("mrpe,ap,pck"); NULL selects all. Results
 * go to out_csv when non-NULL. */
hdnet_status hdnet_eval(const char* ckpt_path, int num_scenes, unsigned long long seed,
                        const char* metrics_csv, const char* out_csv, char* err, size_t err_len);

/* Finite-difference audit of every primitive plus a model composite. Writes
 * a per-entry report to report_path when non-NULL; *out_failures receives
 * the number of failing entries. */
hdnet_status hdnet_grad_check(unsigned long long seed, const char* report_path, int* out_failures,
                              char* err, size_t err_len);

/* Trains and evaluates each (variant, seed) pair from the comma lists, e.g.
 * "full,direct-regression" and "1,2,3", writing ablation.csv and
 * ablation_summary.csv under out_dir. */
hdnet_status hdnet_ablate(const char* config_path, const char* variants_csv,
                          const char* seeds_csv, const char* out_dir, char* err, size_t err_len);

/* --- model handle --- */

typedef struct hdnet_model hdnet_model;

hdnet_status hdnet_model_load(const char* ckpt_path, hdnet_model** out, char* err,
                              size_t err_len);
void hdnet_model_free(hdnet_model* model);
int hdnet_model_input_size(const hdnet_model* model);

/* patch: 3*P*P doubles in [0,1], planar RGB, P = hdnet_model_input_size.
 * bbox_hm: {x0,y0,x1,y1} in heatmap cells, or NULL for no masking.
 * (patch_du, patch_dv) map patch pixels back to full-image pixels.
 * Outputs the camera-space root (mm) and the detection score. */
hdnet_status hdnet_model_predict(hdnet_model* model, const double* patch, int patch_size,
                                 const double* bbox_hm, double fx, double fy, double cx, double cy,
                                 double patch_du, double patch_dv, double out_root_xyz[3],
                                 double* out_score, char* err, size_t err_len);

/* --- stateless helpers --- */

/* Two-hot soft binning of an absolute depth (mm); out_dist holds num_bins. */
hdnet_status hdnet_encode_bins(double depth_mm, double fx, double fy, double alpha, double beta,
                               int num_bins, double* out_dist, char* err, size_t err_len);

/* Expected-bin decoding of a distribution back to absolute depth (mm). */
hdnet_status hdnet_decode_depth(const double* dist, int num_bins, double alpha, double beta,
                                double fx, double fy, double* out_depth_mm, char* err,
                                size_t err_len);

hdnet_status hdnet_back_project(double u, double v, double depth_mm, double fx, double fy,
                                double cx, double cy, double out_xyz[3], char* err,
                                size_t err_len);

#ifdef __cplusplus
}
#endif

#endif /* HDNET_C_H */
