#include "gandetect/codec.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "gandetect/errors.hpp"

namespace gandetect {

namespace {

// libpng and libjpeg report fatal errors through longjmp. Every jump lands in
// the frame that called setjmp, so no C++ destructors are skipped.

struct ErrorText {
    char message[JMSG_LENGTH_MAX > 256 ? JMSG_LENGTH_MAX : 256] = "unknown error";
};

// ---------------------------------------------------------------- PNG

struct PngSource {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t offset;
};

void png_on_error(png_structp png, png_const_charp msg) {
    auto* text = static_cast<ErrorText*>(png_get_error_ptr(png));
    std::snprintf(text->message, sizeof(text->message), "%s", msg);
    png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

void png_read_from_memory(png_structp png, png_bytep out, png_size_t length) {
    auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
    if (src->offset + length > src->size) {
        png_error(png, "unexpected end of PNG stream");
    }
    std::memcpy(out, src->data + src->offset, length);
    src->offset += length;
}

void png_write_to_vector(png_structp png, png_bytep in, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), in, in + length);
}

void png_flush_noop(png_structp) {}

struct PngReadHandle {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadHandle() {
        if (png != nullptr) png_destroy_read_struct(&png, info != nullptr ? &info : nullptr, nullptr);
    }
};

struct PngWriteHandle {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriteHandle() {
        if (png != nullptr) png_destroy_write_struct(&png, info != nullptr ? &info : nullptr);
    }
};

ImageBuffer decode_png(std::span<const std::uint8_t> bytes, const std::string& origin) {
    ErrorText text;
    PngSource source{bytes.data(), bytes.size(), 0};
    PngReadHandle handle;
    handle.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &text, png_on_error, png_on_warning);
    if (handle.png == nullptr) throw DecodeError(origin + ": cannot allocate PNG decoder");
    handle.info = png_create_info_struct(handle.png);
    if (handle.info == nullptr) throw DecodeError(origin + ": cannot allocate PNG info");

    std::vector<std::uint8_t> samples;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int color_type = 0;

    if (setjmp(png_jmpbuf(handle.png))) {
        throw DecodeError(origin + ": " + text.message);
    }

    png_set_read_fn(handle.png, &source, png_read_from_memory);
    png_read_info(handle.png, handle.info);
    png_get_IHDR(handle.png, handle.info, &width, &height, &bit_depth, &color_type, nullptr, nullptr,
                 nullptr);

    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        throw FormatError(origin + ": grayscale PNG rejected, 3 color bands required");
    }
    if (color_type == PNG_COLOR_TYPE_RGB_ALPHA) {
        throw FormatError(origin + ": PNG with alpha band rejected, 3 color bands required");
    }
    if (bit_depth == 16) {
        throw FormatError(origin + ": 16-bit PNG rejected, 8-bit samples required");
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        if (png_get_valid(handle.png, handle.info, PNG_INFO_tRNS) != 0) {
            throw FormatError(origin + ": palette PNG with transparency rejected");
        }
        png_set_palette_to_rgb(handle.png);
    }
    png_set_interlace_handling(handle.png);
    png_read_update_info(handle.png, handle.info);

    if (png_get_rowbytes(handle.png, handle.info) != static_cast<png_size_t>(width) * 3) {
        throw FormatError(origin + ": unexpected PNG row layout");
    }
    if (width < ImageBuffer::kMinSide || height < ImageBuffer::kMinSide) {
        throw FormatError(origin + ": image smaller than 2x2");
    }

    samples.resize(static_cast<std::size_t>(width) * height * 3);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        rows[y] = samples.data() + static_cast<std::size_t>(y) * width * 3;
    }
    png_read_image(handle.png, rows.data());
    png_read_end(handle.png, nullptr);

    return ImageBuffer(static_cast<int>(width), static_cast<int>(height), std::move(samples));
}

// ---------------------------------------------------------------- JPEG

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    ErrorText text;
};

void jpeg_on_error(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, mgr->text.message);
    std::longjmp(mgr->jump, 1);
}

void jpeg_on_message(j_common_ptr) {}

struct JpegDecompressHandle {
    jpeg_decompress_struct cinfo{};
    bool created = false;
    ~JpegDecompressHandle() {
        if (created) jpeg_destroy_decompress(&cinfo);
    }
};

struct JpegCompressHandle {
    jpeg_compress_struct cinfo{};
    bool created = false;
    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    ~JpegCompressHandle() {
        if (created) jpeg_destroy_compress(&cinfo);
        std::free(buffer);
    }
};

ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& origin) {
    JpegErrorManager err;
    JpegDecompressHandle handle;
    std::vector<std::uint8_t> samples;

    handle.cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_on_error;
    err.base.output_message = jpeg_on_message;

    if (setjmp(err.jump)) {
        throw DecodeError(origin + ": " + err.text.message);
    }

    jpeg_create_decompress(&handle.cinfo);
    handle.created = true;
    jpeg_mem_src(&handle.cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&handle.cinfo, TRUE);

    if (handle.cinfo.num_components != 3) {
        throw FormatError(origin + ": JPEG has " + std::to_string(handle.cinfo.num_components) +
                          " components, 3 color bands required");
    }
    handle.cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&handle.cinfo);

    const auto width = handle.cinfo.output_width;
    const auto height = handle.cinfo.output_height;
    if (width < static_cast<JDIMENSION>(ImageBuffer::kMinSide) ||
        height < static_cast<JDIMENSION>(ImageBuffer::kMinSide)) {
        throw FormatError(origin + ": image smaller than 2x2");
    }
    samples.resize(static_cast<std::size_t>(width) * height * 3);
    while (handle.cinfo.output_scanline < height) {
        JSAMPROW row = samples.data() + static_cast<std::size_t>(handle.cinfo.output_scanline) * width * 3;
        jpeg_read_scanlines(&handle.cinfo, &row, 1);
    }
    jpeg_finish_decompress(&handle.cinfo);

    return ImageBuffer(static_cast<int>(width), static_cast<int>(height), std::move(samples));
}

bool has_png_signature(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

bool has_jpeg_signature(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

}  // namespace

ImageBuffer decode_image_bytes(std::span<const std::uint8_t> bytes, const std::string& origin) {
    if (has_png_signature(bytes)) return decode_png(bytes, origin);
    if (has_jpeg_signature(bytes)) return decode_jpeg(bytes, origin);
    throw DecodeError(origin + ": not a PNG or JPEG stream");
}

ImageBuffer decode_image(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_image_bytes(bytes, path.string());
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
    ErrorText text;
    PngWriteHandle handle;
    std::vector<std::uint8_t> out;
    std::vector<png_bytep> rows;

    handle.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &text, png_on_error, png_on_warning);
    if (handle.png == nullptr) throw Error("cannot allocate PNG encoder");
    handle.info = png_create_info_struct(handle.png);
    if (handle.info == nullptr) throw Error("cannot allocate PNG info");

    rows.resize(static_cast<std::size_t>(image.height()));
    auto* base = const_cast<std::uint8_t*>(image.samples().data());
    for (int y = 0; y < image.height(); ++y) {
        rows[y] = base + static_cast<std::size_t>(y) * image.width() * 3;
    }

    if (setjmp(png_jmpbuf(handle.png))) {
        throw Error(std::string("PNG encoding failed: ") + text.message);
    }

    png_set_write_fn(handle.png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(handle.png, handle.info, static_cast<png_uint_32>(image.width()),
                 static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(handle.png, handle.info);
    png_write_image(handle.png, rows.data());
    png_write_end(handle.png, nullptr);
    return out;
}

std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& image, int quality, ChromaSubsampling subsampling) {
    if (quality < 1 || quality > 100) {
        throw DomainError("JPEG quality factor must lie in [1, 100], got " + std::to_string(quality));
    }
    JpegErrorManager err;
    JpegCompressHandle handle;

    handle.cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_on_error;
    err.base.output_message = jpeg_on_message;

    if (setjmp(err.jump)) {
        throw Error(std::string("JPEG encoding failed: ") + err.text.message);
    }

    jpeg_create_compress(&handle.cinfo);
    handle.created = true;
    jpeg_mem_dest(&handle.cinfo, &handle.buffer, &handle.size);

    handle.cinfo.image_width = static_cast<JDIMENSION>(image.width());
    handle.cinfo.image_height = static_cast<JDIMENSION>(image.height());
    handle.cinfo.input_components = 3;
    handle.cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&handle.cinfo);
    jpeg_set_quality(&handle.cinfo, quality, TRUE);
    // Defaults give 2x2 luma sampling (4:2:0); 4:4:4 samples every component at full rate.
    if (subsampling == ChromaSubsampling::k444) {
        for (int c = 0; c < 3; ++c) {
            handle.cinfo.comp_info[c].h_samp_factor = 1;
            handle.cinfo.comp_info[c].v_samp_factor = 1;
        }
    }

    jpeg_start_compress(&handle.cinfo, TRUE);
    auto* base = const_cast<std::uint8_t*>(image.samples().data());
    while (handle.cinfo.next_scanline < handle.cinfo.image_height) {
        JSAMPROW row = base + static_cast<std::size_t>(handle.cinfo.next_scanline) * image.width() * 3;
        jpeg_write_scanlines(&handle.cinfo, &row, 1);
    }
    jpeg_finish_compress(&handle.cinfo);

    return std::vector<std::uint8_t>(handle.buffer, handle.buffer + handle.size);
}

void write_png(const ImageBuffer& image, const std::filesystem::path& path) {
    write_file_bytes(path, encode_png(image));
}

void write_jpeg(const ImageBuffer& image, const std::filesystem::path& path, int quality,
                ChromaSubsampling subsampling) {
    write_file_bytes(path, encode_jpeg(image, quality, subsampling));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError(path.string() + ": cannot open file");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw DecodeError(path.string() + ": read failed");
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace gandetect
