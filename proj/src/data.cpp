#include "hdnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "hdnet/errors.hpp"
#include "json.hpp"

namespace hdnet {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json person_to_json(const PersonGT& p) {
    json jp;
    json pose3d = json::array(), pose2d = json::array();
    for (const Vec3& v : p.pose3d) pose3d.push_back({v.x, v.y, v.z});
    for (const auto& uv : p.pose2d) pose2d.push_back({uv[0], uv[1]});
    jp["pose3d"] = pose3d;
    jp["pose2d"] = pose2d;
    jp["bbox"] = {p.bbox.x0, p.bbox.y0, p.bbox.x1, p.bbox.y1};
    jp["root_depth"] = p.root_depth;
    jp["bin_target"] = p.bin_target;
    jp["truncated"] = p.truncated;
    return jp;
}

PersonGT person_from_json(const json& jp) {
    PersonGT p;
    for (const json& v : jp.at("pose3d")) p.pose3d.push_back({v.at(0), v.at(1), v.at(2)});
    for (const json& v : jp.at("pose2d"))
        p.pose2d.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    const json& b = jp.at("bbox");
    p.bbox = {b.at(0), b.at(1), b.at(2), b.at(3)};
    p.root_depth = jp.at("root_depth");
    p.bin_target = jp.at("bin_target").get<std::vector<double>>();
    p.truncated = jp.at("truncated");
    return p;
}

}  // namespace

void export_dataset(const ExperimentConfig& cfg, std::uint64_t seed, int count,
                    const std::string& dir, int workers) {
    if (count < 1) throw ConfigError("export_dataset: count must be at least 1");
    if (workers < 1) throw ConfigError("export_dataset: workers must be at least 1");
    fs::create_directories(dir);
    std::ofstream index(fs::path(dir) / "index.jsonl");
    std::ofstream images(fs::path(dir) / "images.bin", std::ios::binary);
    if (!index || !images) throw DataError("export_dataset: cannot write to " + dir);

    const int bytes_per_image = 3 * cfg.gen.image_size * cfg.gen.image_size;
    std::vector<unsigned char> quantized(bytes_per_image);
    const int block = 64;
    for (int base = 0; base < count; base += block) {
        const int n = std::min(block, count - base);
        std::vector<SceneSample> block_scenes(n);
        auto render = [&](int lo, int hi) {
            for (int k = lo; k < hi; ++k)
                block_scenes[k] =
                    generate_scene(cfg.gen, seed + static_cast<std::uint64_t>(base + k));
        };
        if (workers <= 1 || n == 1) {
            render(0, n);
        } else {
            std::vector<std::thread> pool;
            const int w = std::min(workers, n);
            for (int t = 0; t < w; ++t)
                pool.emplace_back(render, n * t / w, n * (t + 1) / w);
            for (std::thread& th : pool) th.join();
        }
        for (int k = 0; k < n; ++k) {
            const int i = base + k;
            const SceneSample& scene = block_scenes[k];
            for (int b = 0; b < bytes_per_image; ++b)
                quantized[b] = static_cast<unsigned char>(
                    std::lround(std::clamp(scene.image[b], 0.0, 1.0) * 255.0));
            images.write(reinterpret_cast<const char*>(quantized.data()), bytes_per_image);

            json line;
            line["scene"] = i;
            line["seed"] = seed + static_cast<std::uint64_t>(i);
            line["camera"] = {{"fx", scene.camera.fx},
                              {"fy", scene.camera.fy},
                              {"cx", scene.camera.cx},
                              {"cy", scene.camera.cy}};
            line["image_offset"] = static_cast<std::uint64_t>(i) * bytes_per_image;
            json persons = json::array();
            for (const PersonGT& p : scene.persons) persons.push_back(person_to_json(p));
            line["persons"] = persons;
            index << line.dump() << "\n";
        }
    }

    json manifest;
    manifest["format"] = "hdnet-dataset-1";
    manifest["count"] = count;
    manifest["seed"] = seed;
    manifest["image_size"] = cfg.gen.image_size;
    manifest["config"] = json::parse(experiment_config_to_json(cfg));
    manifest["config_hash"] = config_hash(cfg);
    std::ofstream mf(fs::path(dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";
    if (!index || !images || !mf) throw DataError("export_dataset: write failure in " + dir);
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw DataError("load_dataset: cannot open manifest in " + dir);
    json manifest;
    try {
        manifest = json::parse(mf);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("load_dataset: bad manifest: ") + e.what());
    }
    if (manifest.value("format", "") != std::string("hdnet-dataset-1"))
        throw DataError("load_dataset: unsupported format tag");

    Dataset ds;
    ds.image_size = manifest.at("image_size");
    ds.seed = manifest.at("seed");
    ds.config_hash = manifest.value("config_hash", "");
    const int count = manifest.at("count");
    const int bytes_per_image = 3 * ds.image_size * ds.image_size;

    std::ifstream index(fs::path(dir) / "index.jsonl");
    std::ifstream images(fs::path(dir) / "images.bin", std::ios::binary);
    if (!index || !images) throw DataError("load_dataset: missing index or images in " + dir);

    std::string line;
    std::vector<unsigned char> raw(bytes_per_image);
    while (std::getline(index, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(std::string("load_dataset: bad index line: ") + e.what());
        }
        SceneSample scene;
        scene.size = ds.image_size;
        scene.seed = j.at("seed");
        const json& cam = j.at("camera");
        scene.camera = {cam.at("fx"), cam.at("fy"), cam.at("cx"), cam.at("cy")};
        images.seekg(static_cast<std::streamoff>(j.at("image_offset").get<std::uint64_t>()));
        images.read(reinterpret_cast<char*>(raw.data()), bytes_per_image);
        if (!images) throw DataError("load_dataset: truncated images.bin");
        scene.image.resize(bytes_per_image);
        for (int k = 0; k < bytes_per_image; ++k) scene.image[k] = raw[k] / 255.0;
        for (const json& jp : j.at("persons")) scene.persons.push_back(person_from_json(jp));
        ds.scenes.push_back(std::move(scene));
    }
    if (static_cast<int>(ds.scenes.size()) != count)
        throw DataError("load_dataset: scene count does not match manifest");
    return ds;
}

}  // namespace hdnet
