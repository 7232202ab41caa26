#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tubepoints/errors.hpp"
#include "tubepoints/geometry.hpp"
#include "tubepoints/model.hpp"

namespace tp {

struct PgmImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;  // row-major, maxval 255
};

namespace detail {

inline int pgm_next_int(std::istream& in, const std::string& path) {
    // Skips whitespace and '#' comment lines between header tokens.
    for (;;) {
        const int ch = in.peek();
        if (ch == EOF) throw parse_error("pgm: truncated header in " + path);
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(ch)) {
            in.get();
            continue;
        }
        break;
    }
    int value = 0;
    if (!(in >> value)) throw parse_error("pgm: malformed header in " + path);
    return value;
}

}  // namespace detail

inline void write_pgm(const std::string& path, const PgmImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw io_error("write failed: " + path);
}

inline PgmImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw parse_error("pgm: not a P5 file: " + path);
    PgmImage img;
    img.width = detail::pgm_next_int(in, path);
    img.height = detail::pgm_next_int(in, path);
    const int maxval = detail::pgm_next_int(in, path);
    if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 255)
        throw parse_error("pgm: unsupported header (" + std::to_string(img.width) + "x" +
                          std::to_string(img.height) + ", maxval " + std::to_string(maxval) +
                          ") in " + path);
    in.get();  // single whitespace byte after maxval
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw parse_error("pgm: truncated pixel data in " + path);
    return img;
}

// Binary masks are stored as 0/255; reading thresholds at 128 so the
// round trip is lossless.
inline PgmImage mask_to_pgm(const BinaryMask& mask) {
    PgmImage img{mask.height(), mask.width(), {}};
    img.pixels.resize(mask.data().size());
    for (std::size_t i = 0; i < mask.data().size(); ++i)
        img.pixels[i] = mask.data()[i] ? 255 : 0;
    return img;
}

inline BinaryMask pgm_to_mask(const PgmImage& img) {
    BinaryMask mask(img.height, img.width);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        mask.data()[i] = img.pixels[i] >= 128 ? 1 : 0;
    return mask;
}

// Score maps quantize to [0, 255] with round-half-up; the round trip is
// exact to within 1/255.
inline PgmImage scoremap_to_pgm(const ScoreMap& map) {
    PgmImage img{map.height(), map.width(), {}};
    img.pixels.resize(map.data().size());
    for (std::size_t i = 0; i < map.data().size(); ++i) {
        const double v = std::clamp(map.data()[i], 0.0, 1.0);
        img.pixels[i] = static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
    }
    return img;
}

inline ScoreMap pgm_to_scoremap(const PgmImage& img) {
    ScoreMap map(img.height, img.width);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        map.data()[i] = img.pixels[i] / 255.0;
    return map;
}

// JSON-lines point sets: one {"score":..,"x":..,"y":..} object per line.
inline void write_points_jsonl(const std::string& path, const std::vector<ScoredPoint>& points) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    for (const auto& sp : points) {
        nlohmann::json j;
        j["x"] = sp.point.x;
        j["y"] = sp.point.y;
        j["score"] = sp.score;
        out << j.dump() << "\n";
    }
    if (!out) throw io_error("write failed: " + path);
}

inline std::vector<ScoredPoint> read_points_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    std::vector<ScoredPoint> points;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw parse_error("points jsonl: invalid JSON at " + path + ":" +
                              std::to_string(line_no));
        if (!j.contains("x") || !j.contains("y") || !j.contains("score"))
            throw parse_error("points jsonl: missing x/y/score field at " + path + ":" +
                              std::to_string(line_no));
        points.push_back({{j["x"].get<double>(), j["y"].get<double>()},
                          j["score"].get<double>()});
    }
    return points;
}

// Model file: "TPM1" magic, little-endian uint32 JSON header length, the
// JSON header (shape metadata), then all weights as little-endian doubles
// in the order w1, b1, w_obj, b_obj, w_loc, b_loc.
inline void write_model(const std::string& path, const ModelParams& params) {
    nlohmann::json header;
    header["format_version"] = 1;
    header["downsample"] = params.downsample;
    header["points_per_region"] = params.points_per_region;
    header["hidden"] = params.hidden;
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write("TPM1", 4);
    const std::uint32_t len = static_cast<std::uint32_t>(header_text.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto* vec :
         {&params.w1, &params.b1, &params.w_obj, &params.b_obj, &params.w_loc, &params.b_loc})
        out.write(reinterpret_cast<const char*>(vec->data()),
                  static_cast<std::streamsize>(vec->size() * sizeof(double)));
    if (!out) throw io_error("write failed: " + path);
}

inline ModelParams read_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "TPM1", 4) != 0)
        throw parse_error("model: bad magic in " + path);
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    if (in.gcount() != 4) throw parse_error("model: truncated header length in " + path);
    std::string header_text(len, '\0');
    in.read(header_text.data(), len);
    if (in.gcount() != static_cast<std::streamsize>(len))
        throw parse_error("model: truncated header in " + path);
    nlohmann::json header = nlohmann::json::parse(header_text, nullptr, false);
    if (header.is_discarded() || header.value("format_version", 0) != 1)
        throw parse_error("model: unsupported header in " + path);

    ModelParams params;
    params.downsample = header["downsample"].get<int>();
    params.points_per_region = header["points_per_region"].get<int>();
    params.hidden = header["hidden"].get<int>();
    if (params.downsample < 1 || params.points_per_region < 1 || params.hidden < 1)
        throw parse_error("model: invalid shape metadata in " + path);

    const int in_size = params.input_size();
    const int n = params.points_per_region;
    const int h = params.hidden;
    params.w1.resize(static_cast<std::size_t>(h) * in_size);
    params.b1.resize(h);
    params.w_obj.resize(static_cast<std::size_t>(n) * h);
    params.b_obj.resize(n);
    params.w_loc.resize(static_cast<std::size_t>(2 * n) * h);
    params.b_loc.resize(2 * n);
    for (auto* vec :
         {&params.w1, &params.b1, &params.w_obj, &params.b_obj, &params.w_loc, &params.b_loc}) {
        in.read(reinterpret_cast<char*>(vec->data()),
                static_cast<std::streamsize>(vec->size() * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(vec->size() * sizeof(double)))
            throw parse_error("model: truncated weights in " + path);
    }
    return params;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw io_error("write failed: " + path);
}

}  // namespace tp
