#include "wes/codec.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>
#include <png.h>

#include "wes/error.hpp"

namespace wes {

ImageFormat sniff_image_format(std::span<const uint8_t> bytes) {
  static const uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0) return ImageFormat::Png;
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return ImageFormat::Jpeg;
  }
  return ImageFormat::Unknown;
}

// ---------------------------------------------------------------------------
// PNG via the libpng simplified API.

Image decode_png(std::span<const uint8_t> bytes) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::BadImage, std::string("png: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image img;
  img.rows = png.height;
  img.cols = png.width;
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(ErrorCode::BadImage, std::string("png: ") + png.message);
  }
  return img;
}

std::vector<uint8_t> encode_png(const Image& img) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = img.cols;
  png.height = img.rows;
  png.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoFailure, std::string("png encode: ") + png.message);
  }
  std::vector<uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoFailure, std::string("png encode: ") + png.message);
  }
  out.resize(size);
  return out;
}

// ---------------------------------------------------------------------------
// Baseline JPEG via libjpeg. Errors escape through setjmp, translated into
// exceptions once we are out of C callback land.

namespace {

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  longjmp(err->jump, 1);
}

}  // namespace

Image decode_jpeg(std::span<const uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::DecodeFailure, std::string("jpeg: ") + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  Image img;
  img.rows = cinfo.output_height;
  img.cols = cinfo.output_width;
  img.pixels.resize(img.byte_size());
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.row_ptr(cinfo.output_scanline);
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

std::vector<uint8_t> encode_jpeg(const Image& img, int quality) {
  jpeg_compress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;

  unsigned char* buffer = nullptr;
  unsigned long buffer_size = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (buffer) free(buffer);
    throw Error(ErrorCode::IoFailure, std::string("jpeg encode: ") + jerr.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &buffer_size);

  cinfo.image_width = img.cols;
  cinfo.image_height = img.rows;
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  // stay in RGB (matches the declared photometric interpretation) and skip
  // chroma subsampling; the round trip then stays within +-1 per channel on
  // smooth content
  jpeg_set_colorspace(&cinfo, JCS_RGB);
  jpeg_set_quality(&cinfo, quality, TRUE);
  for (int c = 0; c < cinfo.num_components; ++c) {
    cinfo.comp_info[c].h_samp_factor = 1;
    cinfo.comp_info[c].v_samp_factor = 1;
  }
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(img.row_ptr(cinfo.next_scanline));
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<uint8_t> out(buffer, buffer + buffer_size);
  jpeg_destroy_compress(&cinfo);
  free(buffer);
  return out;
}

Image decode_image(std::span<const uint8_t> bytes) {
  switch (sniff_image_format(bytes)) {
    case ImageFormat::Png: return decode_png(bytes);
    case ImageFormat::Jpeg: return decode_jpeg(bytes);
    case ImageFormat::Unknown: break;
  }
  throw Error(ErrorCode::BadImage, "unrecognized image payload (expected PNG or JPEG)");
}

}  // namespace wes
