#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdnet/config.hpp"
#include "hdnet/synth.hpp"

namespace hdnet {

// On-disk layout under `dir`:
//   manifest.json   format tag, scene count, seed, full experiment config + hash
//   index.jsonl     one JSON object per scene: camera, per-person annotations,
//                   byte offset of the image in images.bin
//   images.bin      concatenated 3 x S x S uint8 images, row-major RGB planes
// Scene generation is independent per index, so `workers` threads may render
// in parallel; the files are written serially and identically either way.
void export_dataset(const ExperimentConfig& cfg, std::uint64_t seed, int count,
                    const std::string& dir, int workers = 1);

struct Dataset {
    int image_size = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<SceneSample> scenes;  // images dequantized to [0, 1]
};

Dataset load_dataset(const std::string& dir);

}  // namespace hdnet
