#include "artauth/data/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

namespace artauth::data {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ImageU8 read_png_file(const std::string& path, std::FILE* fp) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("libpng init failed for '" + path + "'");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DataError("libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("corrupt PNG '" + path + "'");
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    ImageU8 img;
    img.h = static_cast<std::int64_t>(png_get_image_height(png, info));
    img.w = static_cast<std::int64_t>(png_get_image_width(png, info));
    if (img.h <= 0 || img.w <= 0 || png_get_channels(png, info) != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unsupported PNG layout in '" + path + "'");
    }
    img.rgb.resize(static_cast<std::size_t>(img.h * img.w * 3));
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.h));
    for (std::int64_t y = 0; y < img.h; ++y)
        rows[static_cast<std::size_t>(y)] = img.rgb.data() + y * img.w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

ImageU8 read_jpeg_file(const std::string& path, std::FILE* fp) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DataError("corrupt JPEG '" + path + "'");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    ImageU8 img;
    img.h = cinfo.output_height;
    img.w = cinfo.output_width;
    img.rgb.resize(static_cast<std::size_t>(img.h * img.w * 3));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.rgb.data() +
                       static_cast<std::int64_t>(cinfo.output_scanline) * img.w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

}  // namespace

ImageU8 read_image(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("cannot open image '" + path + "'");
    unsigned char magic[8] = {0};
    const std::size_t got = std::fread(magic, 1, sizeof magic, fp.get());
    std::rewind(fp.get());
    if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) return read_png_file(path, fp.get());
    if (got >= 2 && magic[0] == 0xff && magic[1] == 0xd8) return read_jpeg_file(path, fp.get());
    throw DataError("'" + path + "' is not a PNG or JPEG image");
}

void write_png(const std::string& path, const ImageU8& img) {
    if (img.h <= 0 || img.w <= 0 ||
        img.rgb.size() != static_cast<std::size_t>(img.h * img.w * 3))
        throw UsageError("write_png: malformed image buffer");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("cannot open '" + path + "' for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        throw DataError("libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("PNG write failure on '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.w), static_cast<png_uint_32>(img.h),
                 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::int64_t y = 0; y < img.h; ++y) {
        png_write_row(png, const_cast<png_bytep>(img.rgb.data() + y * img.w * 3));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageF to_unit(const ImageU8& img) {
    ImageF out;
    out.h = img.h;
    out.w = img.w;
    out.rgb.resize(img.rgb.size());
    for (std::size_t i = 0; i < img.rgb.size(); ++i)
        out.rgb[i] = static_cast<float>(img.rgb[i]) / 255.0f;
    return out;
}

ImageU8 to_u8(const ImageF& img) {
    ImageU8 out;
    out.h = img.h;
    out.w = img.w;
    out.rgb.resize(img.rgb.size());
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        const float v = img.rgb[i];
        const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        out.rgb[i] = static_cast<std::uint8_t>(std::lround(c * 255.0f));
    }
    return out;
}

void clamp01(ImageF& img) {
    for (auto& v : img.rgb) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
}

}  // namespace artauth::data
