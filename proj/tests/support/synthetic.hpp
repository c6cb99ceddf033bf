#pragma once

// Small labelled image sets with an easy, known structure: class k draws a
// bright stroke whose shape depends on k, plus uniform pixel noise.

#include "kmkc/mnist_io.hpp"

#include <cstdint>
#include <random>

namespace kmkc::synthetic {

inline void draw(std::vector<std::uint8_t>& img, std::size_t side, std::size_t r, std::size_t c) {
    if (r < side && c < side) {
        img[r * side + c] = 255;
    }
}

/// `per_class` images for each of `classes` (<= 4) stroke shapes, side x side.
inline std::pair<ImageSet, LabelSet> strokes(std::size_t classes, std::size_t per_class, std::size_t side,
                                             std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> noise(0, 60);
    std::uniform_int_distribution<int> jitter(-1, 1);
    ImageSet images;
    images.rows = images.cols = side;
    LabelSet labels;
    labels.classes = classes;
    for (std::size_t n = 0; n < per_class; ++n) {
        for (std::size_t k = 0; k < classes; ++k) {
            std::vector<std::uint8_t> img(side * side);
            for (auto& p : img) {
                p = static_cast<std::uint8_t>(noise(gen));
            }
            const std::size_t mid = side / 2 + static_cast<std::size_t>(jitter(gen) + 1) - 1;
            for (std::size_t t = 1; t + 1 < side; ++t) {
                switch (k) {
                    case 0: draw(img, side, mid, t); break;             // horizontal
                    case 1: draw(img, side, t, mid); break;             // vertical
                    case 2: draw(img, side, t, t); break;               // diagonal
                    default: draw(img, side, t, side - 1 - t); break;   // anti-diagonal
                }
            }
            images.pixels.insert(images.pixels.end(), img.begin(), img.end());
            labels.labels.push_back(static_cast<std::uint32_t>(k));
            ++images.count;
        }
    }
    return {images, labels};
}

}  // namespace kmkc::synthetic
