// Copyright 2026 The qdtn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Synthetic letter corpus: capital letters from a 5x7 bitmap font rendered
// into square binary images, plus their upside-down copies.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdtn/image.hpp"
#include "qdtn/image_io.hpp"

namespace qdtn {

namespace detail {

// Seven rows of five cells per glyph, '#' = ink.
using Glyph = std::array<const char*, 7>;

inline const std::array<Glyph, 26>& glyph_table() {
    static const std::array<Glyph, 26> table = {{
        {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"},  // A
        {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."},  // B
        {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."},  // C
        {"###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."},  // D
        {"#####", "#....", "#....", "####.", "#....", "#....", "#####"},  // E
        {"#####", "#....", "#....", "####.", "#....", "#....", "#...."},  // F
        {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"},  // G
        {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"},  // H
        {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."},  // I
        {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."},  // J
        {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"},  // K
        {"#....", "#....", "#....", "#....", "#....", "#....", "#####"},  // L
        {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"},  // M
        {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"},  // N
        {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."},  // O
        {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."},  // P
        {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"},  // Q
        {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"},  // R
        {".####", "#....", "#....", ".###.", "....#", "....#", "####."},  // S
        {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."},  // T
        {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."},  // U
        {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."},  // V
        {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."},  // W
        {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"},  // X
        {"#...#", "#...#", "#...#", ".#.#.", "..#..", "..#..", "..#.."},  // Y
        {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"},  // Z
    }};
    return table;
}

}  // namespace detail

/// True when the glyph cell (row, col) of `letter` is inked.
inline bool glyph_cell(char letter, int row, int col) {
    if (letter < 'A' || letter > 'Z') throw Error("InvalidArgument", std::string("no glyph for '") + letter + "'");
    if (row < 0 || row >= 7 || col < 0 || col >= 5) return false;
    return detail::glyph_table()[static_cast<std::size_t>(letter - 'A')][static_cast<std::size_t>(row)][col] == '#';
}

/// White-on-black rendering of a capital letter in a size x size frame. The
/// glyph sits on a baseline: the bottom margin is twice the top margin, so an
/// upside-down copy differs from the upright one even for symmetric letters.
inline GrayImage render_letter(char letter, int size = 64, bool upside_down = false) {
    if (size < 16) throw Error("InvalidArgument", "letter frame must be at least 16 pixels");
    const int cell = size * 7 / 64 > 0 ? size * 7 / 64 : 1;
    const int glyph_w = 5 * cell, glyph_h = 7 * cell;
    const int left = (size - glyph_w) / 2;
    const int top = (size - glyph_h) / 3;
    GrayImage img(size, size, 0.0);
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 5; ++c)
            if (glyph_cell(letter, r, c))
                for (int y = 0; y < cell; ++y)
                    for (int x = 0; x < cell; ++x) img.at(top + r * cell + y, left + c * cell + x) = 1.0;
    if (upside_down) img.pixels = img.pixels.colwise().reverse().eval();
    return img;
}

struct CorpusEntry {
    std::string id;
    std::string path;
    /// "ClassA" (below the separator) or "ClassB".
    std::string label;
};

inline nlohmann::json to_json(const std::vector<CorpusEntry>& entries) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : entries) j.push_back({{"id", e.id}, {"path", e.path}, {"label", e.label}});
    return j;
}

inline std::vector<CorpusEntry> corpus_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
    std::vector<CorpusEntry> out;
    for (const auto& e : j) {
        CorpusEntry c;
        c.path = e.at("path").get<std::string>();
        if (!base.empty() && std::filesystem::path(c.path).is_relative()) c.path = (base / c.path).string();
        c.label = e.at("label").get<std::string>();
        c.id = e.contains("id") ? e.at("id").get<std::string>() : std::filesystem::path(c.path).stem().string();
        if (c.label != "ClassA" && c.label != "ClassB") throw Error("InvalidArgument", "unknown label " + c.label);
        out.push_back(c);
    }
    return out;
}

/// Upside-down letters are ClassA and upright letters ClassB. Order: the
/// upside-down set first, then the upright set, each alphabetical.
inline std::vector<CorpusEntry> letter_manifest(int letters_per_class) {
    if (letters_per_class < 1 || letters_per_class > 26) throw Error("InvalidArgument", "letters per class must be 1..26");
    std::vector<CorpusEntry> out;
    for (int flip = 1; flip >= 0; --flip)
        for (int i = 0; i < letters_per_class; ++i) {
            const char l = static_cast<char>('A' + i);
            const std::string id = std::string(1, l) + (flip ? "_inverted" : "_upright");
            out.push_back({id, "letter_" + id + ".png", flip ? "ClassA" : "ClassB"});
        }
    return out;
}

/// Writes letter PNGs and manifest.json into `dir`; returns the manifest.
inline std::vector<CorpusEntry> write_letter_corpus(const std::filesystem::path& dir, int letters_per_class = 15,
                                                    int size = 64) {
    std::filesystem::create_directories(dir);
    auto manifest = letter_manifest(letters_per_class);
    for (const auto& e : manifest) {
        const char l = e.id[0];
        save_png(render_letter(l, size, e.label == "ClassA"), (dir / e.path).string());
    }
    std::ofstream(dir / "manifest.json") << to_json(manifest).dump(2) << "\n";
    return manifest;
}

}  // namespace qdtn
