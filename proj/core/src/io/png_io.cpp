#include "pfoa/io/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "pfoa/common/error.hpp"

namespace pfoa::io {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_gray(const std::filesystem::path& path, const ImageF64& img, int bit_depth) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot open for write: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng failure writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const int w = img.width(), h = img.height();
    if (bit_depth == 16) {
        std::vector<png_byte> row(static_cast<std::size_t>(w) * 2);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double v = std::clamp(img.at(y, x), 0.0, 1.0);
                const auto u = static_cast<unsigned>(v * 65535.0 + 0.5);
                row[2 * static_cast<std::size_t>(x)] = static_cast<png_byte>(u >> 8);
                row[2 * static_cast<std::size_t>(x) + 1] = static_cast<png_byte>(u & 0xFF);
            }
            png_write_row(png, row.data());
        }
    } else {
        std::vector<png_byte> row(static_cast<std::size_t>(w));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double v = std::clamp(img.at(y, x), 0.0, 1.0);
                row[static_cast<std::size_t>(x)] = static_cast<png_byte>(v * 255.0 + 0.5);
            }
            png_write_row(png, row.data());
        }
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png16(const std::filesystem::path& path, const ImageF64& img) {
    write_gray(path, img, 16);
}

void write_png8(const std::filesystem::path& path, const ImageF64& img) {
    write_gray(path, img, 8);
}

ImageF64 read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open PNG: " + path.string());

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw IoError("not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng failure reading " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("expected grayscale PNG, got color type " + std::to_string(color) + ": " +
                      path.string());
    }
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    const png_size_t rowbytes = png_get_rowbytes(png, info);

    std::vector<png_byte> raw(static_cast<std::size_t>(rowbytes) * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageF64 img(static_cast<int>(h), static_cast<int>(w));
    if (depth == 16) {
        for (png_uint_32 y = 0; y < h; ++y)
            for (png_uint_32 x = 0; x < w; ++x) {
                const png_byte* p = rows[y] + 2 * static_cast<std::size_t>(x);
                const unsigned u = (static_cast<unsigned>(p[0]) << 8) | p[1];
                img.at(static_cast<int>(y), static_cast<int>(x)) = u / 65535.0;
            }
    } else {
        for (png_uint_32 y = 0; y < h; ++y)
            for (png_uint_32 x = 0; x < w; ++x)
                img.at(static_cast<int>(y), static_cast<int>(x)) = rows[y][x] / 255.0;
    }
    return img;
}

}  // namespace pfoa::io
