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

// PNG and JPEG decoding into grayscale, and 8-bit grayscale PNG encoding.
// Requires linking libpng and libjpeg (the qdtn_imageio CMake target).

#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "qdtn/image.hpp"

namespace qdtn {

namespace detail {

inline GrayImage from_interleaved(const std::vector<unsigned char>& buf, int width, int height, int channels) {
    GrayImage img(width, height);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            const unsigned char* p = &buf[(static_cast<std::size_t>(r) * width + c) * channels];
            img.at(r, c) = channels == 1 ? p[0] / 255.0 : luma(p[0] / 255.0, p[1] / 255.0, p[2] / 255.0);
        }
    return img;
}

inline GrayImage decode_png(const std::string& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw Error("DecodeError", path + ": " + image.message);
    const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
    image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&image);
        throw Error("DecodeError", path + ": " + image.message);
    }
    return from_interleaved(buf, static_cast<int>(image.width), static_cast<int>(image.height), gray ? 1 : 3);
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

inline GrayImage decode_jpeg(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!file) throw Error("DecodeError", path + ": cannot open");
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = [](j_common_ptr c) {
        auto* e = reinterpret_cast<JpegErrorManager*>(c->err);
        (*c->err->format_message)(c, e->message);
        std::longjmp(e->jump, 1);
    };
    // Everything after setjmp that must survive a longjmp lives outside this frame.
    std::vector<unsigned char> buf;
    int width = 0, height = 0, channels = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw Error("DecodeError", path + ": " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    channels = cinfo.output_components;
    buf.resize(static_cast<std::size_t>(width) * height * channels);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = &buf[static_cast<std::size_t>(cinfo.output_scanline) * width * channels];
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return from_interleaved(buf, width, height, channels);
}

}  // namespace detail

/// Decodes a PNG or JPEG file (detected by signature) to grayscale.
inline GrayImage load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("DecodeError", path + ": cannot open");
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char*>(sig), 8);
    if (in.gcount() >= 8 && png_sig_cmp(sig, 0, 8) == 0) return detail::decode_png(path);
    if (in.gcount() >= 3 && sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return detail::decode_jpeg(path);
    throw Error("DecodeError", path + ": not a PNG or JPEG file");
}

/// Raw bytes of a file, for content hashing.
inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", path + ": cannot open");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Writes an 8-bit grayscale PNG, rounding intensities to the nearest level.
inline void save_png(const GrayImage& img, const std::string& path) {
    std::vector<unsigned char> buf(static_cast<std::size_t>(img.width()) * img.height());
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c)
            buf[static_cast<std::size_t>(r) * img.width() + c] =
                static_cast<unsigned char>(std::lround(std::clamp(img.at(r, c), 0.0, 1.0) * 255.0));
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr))
        throw Error("IoError", path + ": " + image.message);
}

}  // namespace qdtn
