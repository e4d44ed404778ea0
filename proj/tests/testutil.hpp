// Shared helpers for tests: synthetic textured images, throwaway
// directories, tiny datasets on disk.
#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "stegnet/image.hpp"
#include "stegnet/rng.hpp"

namespace testutil {

// Smooth random texture (low-frequency cosines over a random base) plus a
// little noise: enough structure that the embedder has something to blend
// into, without the flatness of pure noise or solid color.
inline stegnet::Image8 synth_image(stegnet::Rng& rng, int w, int h) {
    stegnet::Image8 img(w, h);
    constexpr double kTau = 6.283185307179586;
    for (int c = 0; c < 3; ++c) {
        double base = 0.25 + 0.5 * rng.uniform_f64();
        struct Wave {
            double amp, fx, fy, phase;
        } waves[3];
        for (Wave& wv : waves) {
            wv.amp = 0.05 + 0.13 * rng.uniform_f64();
            wv.fx = (rng.uniform_f64() * 4.0 - 2.0);
            wv.fy = (rng.uniform_f64() * 4.0 - 2.0);
            wv.phase = rng.uniform_f64() * kTau;
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double v = base;
                for (const Wave& wv : waves)
                    v += wv.amp * std::cos(kTau * (wv.fx * x / w + wv.fy * y / h) + wv.phase);
                v += 0.02 * (rng.uniform_f64() - 0.5);
                v = std::min(0.98, std::max(0.02, v));
                img.px(x, y)[c] = uint8_t(v * 255.0 + 0.5);
            }
    }
    return img;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        namespace fs = std::filesystem;
        stegnet::Rng rng(stegnet::mix_seed(uint64_t(reinterpret_cast<uintptr_t>(this)),
                                           uint64_t(::getpid())));
        path_ = (fs::temp_directory_path() /
                 (tag + "-" + std::to_string(rng.next_u64() & 0xFFFFFF)))
                    .string();
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const {
        return (std::filesystem::path(path_) / name).string();
    }

private:
    std::string path_;
};

// Writes n synthetic PNGs named img_0000.png ... into dir.
inline std::vector<std::string> write_dataset(const std::string& dir, int n, int w, int h,
                                              uint64_t seed) {
    std::filesystem::create_directories(dir);
    stegnet::Rng rng(seed);
    std::vector<std::string> paths;
    for (int i = 0; i < n; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "img_%04d.png", i);
        std::string p = (std::filesystem::path(dir) / name).string();
        stegnet::write_png(synth_image(rng, w, h), p);
        paths.push_back(p);
    }
    return paths;
}

} // namespace testutil
