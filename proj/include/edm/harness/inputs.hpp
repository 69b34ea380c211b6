#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edm/core/image_io.hpp"
#include "edm/core/resize.hpp"
#include "edm/data/records.hpp"
#include "edm/density/energy_density.hpp"
#include "edm/depth/depth.hpp"
#include "edm/fusion/features.hpp"
#include "edm/gan/pix2pix.hpp"

// Turns dish records into per-stream model inputs: RGB from disk, depth
// decoded/post-processed/normalized, density from the trained generator (or
// its pre-computed output directory). Everything is mapped into [-1,1] and
// resized to the backbone input side once, then cached.

namespace edm::harness {

using data::DishRecord;
using fusion::Stream;
using nn::Tensor;

inline Tensor rgb_to_signed_tensor(const RgbImage& img) {
    Tensor t({3, img.height, img.width});
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < img.height; ++i)
            for (int j = 0; j < img.width; ++j)
                t.at3(c, i, j) = static_cast<double>(img.at(i, j, c)) / 127.5 - 1.0;
    return t;
}

inline Tensor grid_to_tensor(const Grid<double>& g) {
    Tensor t({1, g.height(), g.width()});
    std::copy(g.begin(), g.end(), t.data());
    return t;
}

struct DepthOptions {
    int dilation_kernel = 5;
    int closing_kernel = 5;
};

class DishInputProvider {
public:
    virtual ~DishInputProvider() = default;
    virtual std::map<Stream, Tensor> inputs(const DishRecord& record,
                                            const std::vector<Stream>& streams) = 0;
    virtual bool has_density_source() const = 0;
};

class FileInputProvider : public DishInputProvider {
public:
    FileInputProvider() = default;

    void set_depth_options(DepthOptions opts) { depth_opts_ = opts; }
    void set_generator(std::shared_ptr<const gan::GeneratorModel> model) { generator_ = std::move(model); }
    void set_generated_dir(std::string dir) { generated_dir_ = std::move(dir); }

    bool has_density_source() const override { return generator_ != nullptr || !generated_dir_.empty(); }

    std::map<Stream, Tensor> inputs(const DishRecord& record,
                                    const std::vector<Stream>& streams) override {
        std::map<Stream, Tensor> out;
        for (Stream s : streams) out[s] = fetch(record, s);
        return out;
    }

    // Pre-flight check used to fail before training starts.
    std::optional<std::string> availability_problem(const DishRecord& record,
                                                    const std::vector<Stream>& streams) const {
        namespace fs = std::filesystem;
        for (Stream s : streams) {
            switch (s) {
                case Stream::Rgb:
                    if (!fs::exists(record.rgb_path))
                        return "rgb file missing for dish " + record.dish_id + ": " + record.rgb_path;
                    break;
                case Stream::Depth:
                    if (record.depth_path.empty() || !fs::exists(record.depth_path))
                        return "depth file missing for dish " + record.dish_id;
                    break;
                case Stream::Density:
                    if (!has_density_source())
                        return "density stream requested but no generator or generated-map "
                               "directory was provided";
                    if (generator_ == nullptr) {
                        if (!fs::exists(generated_path(record)))
                            return "generated density map missing for dish " + record.dish_id + ": " +
                                   generated_path(record);
                    } else if (!fs::exists(record.rgb_path)) {
                        return "rgb file missing for dish " + record.dish_id +
                               " (needed to generate its density map)";
                    }
                    break;
            }
        }
        return std::nullopt;
    }

private:
    std::string generated_path(const DishRecord& record) const {
        return generated_dir_ + "/" + record.dish_id + ".gen.raw";
    }

    Tensor fetch(const DishRecord& record, Stream s) {
        auto key = std::make_pair(record.dish_id, s);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        Tensor t = load(record, s);
        cache_.emplace(key, t);
        return t;
    }

    Tensor load(const DishRecord& record, Stream s) {
        const int side = fusion::kBackboneInputSide;
        switch (s) {
            case Stream::Rgb: {
                Tensor rgb = rgb_to_signed_tensor(io::read_ppm8(record.rgb_path));
                return fusion::resize_tensor_image(rgb, side);
            }
            case Stream::Depth: {
                expect(!record.depth_path.empty(), "dish " + record.dish_id + " has no depth map");
                depth::DepthMap map = depth::decode_depth(record.depth_path);
                map = depth::postprocess_depth(map, depth_opts_.dilation_kernel,
                                               depth_opts_.closing_kernel);
                map = depth::normalize_depth(map);
                return fusion::resize_tensor_image(grid_to_tensor(map.values), side);
            }
            case Stream::Density: {
                expect(has_density_source(),
                       "density stream requested but no generator or generated-map directory set");
                Tensor map;
                if (generator_) {
                    Tensor rgb = rgb_to_signed_tensor(io::read_ppm8(record.rgb_path));
                    map = gan::generate_density_map(*generator_, rgb, /*allow_resize=*/true);
                } else {
                    std::uint32_t rep = 0;
                    Grid<double> g = io::read_float_map(generated_path(record), &rep);
                    expect(rep == static_cast<std::uint32_t>(density::Representation::SignedUnit),
                           generated_path(record) + ": expected a signed-unit density map");
                    map = grid_to_tensor(g);
                }
                return fusion::resize_tensor_image(map, side);
            }
        }
        fail("unknown stream");
    }

    DepthOptions depth_opts_;
    std::shared_ptr<const gan::GeneratorModel> generator_;
    std::string generated_dir_;
    std::map<std::pair<std::string, Stream>, Tensor> cache_;
};

// Serves hand-built tensors; used by tests.
class MemoryInputProvider : public DishInputProvider {
public:
    void put(const std::string& dish_id, Stream s, Tensor t) {
        data_[{dish_id, s}] = std::move(t);
    }
    bool has_density_source() const override { return true; }

    std::map<Stream, Tensor> inputs(const DishRecord& record,
                                    const std::vector<Stream>& streams) override {
        std::map<Stream, Tensor> out;
        for (Stream s : streams) {
            auto it = data_.find({record.dish_id, s});
            expect(it != data_.end(),
                   "MemoryInputProvider: no tensor for dish " + record.dish_id);
            out[s] = it->second;
        }
        return out;
    }

private:
    std::map<std::pair<std::string, Stream>, Tensor> data_;
};

} // namespace edm::harness
