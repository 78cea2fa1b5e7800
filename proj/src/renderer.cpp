#include "cms/renderer.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "cms/errors.hpp"
#include "cms/motion.hpp"

namespace cms {

ProjectedImage::ProjectedImage(const CameraIntrinsics& k, std::uint32_t channel_count)
    : intrinsics(k),
      channels(channel_count),
      pixels(static_cast<std::size_t>(k.width) * k.height * channel_count, kFillValue),
      coverage(static_cast<std::size_t>(k.width) * k.height, 0) {}

std::size_t ProjectedImage::covered_count() const {
  return static_cast<std::size_t>(std::count(coverage.begin(), coverage.end(), std::uint8_t{1}));
}

SceneFrame SceneFrame::moved(const MotionParams& motion) const { return {cloud, compose(base_pose, motion)}; }

void render_into(const SceneFrame& frame, const MotionParams& motion, const CameraIntrinsics& k,
                 RenderScratch& scratch, ProjectedImage& out, const kernels::KernelTable& kernels) {
  if (!frame.cloud || frame.cloud->empty()) throw InvalidArgument("render: empty point cloud");
  k.validate();
  const ColoredPointCloud& cloud = *frame.cloud;
  const std::uint32_t channels = cloud.channel_count();
  const std::size_t n = cloud.size();
  const std::size_t pixels = static_cast<std::size_t>(k.width) * k.height;
  if (pixels > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
    throw InvalidArgument("render: image grid too large");

  const MotionParams pose = compose(frame.base_pose, motion);
  const Mat3 rot = rotation_from_axis_angle(pose.rotvec);
  kernels::ProjectionSetup setup;
  setup.rotation = rot.m;
  setup.translation = pose.translation;
  setup.fx = k.fx;
  setup.fy = k.fy;
  setup.cx = k.cx;
  setup.cy = k.cy;
  setup.width = static_cast<std::int32_t>(k.width);
  setup.height = static_cast<std::int32_t>(k.height);
  setup.depth_epsilon = kDepthEpsilon;

  scratch.cells.resize(n);
  scratch.depths.resize(n);
  kernels.project(setup, cloud.xs(), cloud.ys(), cloud.zs(), scratch.cells, scratch.depths);

  // Pass 1: nearest depth per pixel. Pass 2: the lowest index within the tie
  // tolerance of that depth owns the pixel.
  scratch.zmin.assign(pixels, std::numeric_limits<double>::infinity());
  const std::int32_t* cells = scratch.cells.data();
  const double* depths = scratch.depths.data();
  double* zmin = scratch.zmin.data();
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t c = cells[i];
    if (c >= 0 && depths[i] < zmin[c]) zmin[c] = depths[i];
  }
  scratch.owner.assign(pixels, -1);
  std::int32_t* owner = scratch.owner.data();
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t c = cells[i];
    if (c >= 0 && owner[c] < 0 && depths[i] <= zmin[c] + kDepthTieTolerance) owner[c] = static_cast<std::int32_t>(i);
  }

  if (out.intrinsics != k || out.channels != channels || out.pixels.size() != pixels * channels) {
    out = ProjectedImage(k, channels);
  }
  const float* colors = cloud.colors().data();
  float* dst = out.pixels.data();
  std::uint8_t* cov = out.coverage.data();
  for (std::size_t p = 0; p < pixels; ++p) {
    const std::int32_t o = owner[p];
    if (o >= 0) {
      std::memcpy(dst + p * channels, colors + static_cast<std::size_t>(o) * channels, channels * sizeof(float));
      cov[p] = 1;
    } else {
      std::fill_n(dst + p * channels, channels, ProjectedImage::kFillValue);
      cov[p] = 0;
    }
  }
}

ProjectedImage render(const SceneFrame& frame, const MotionParams& motion, const CameraIntrinsics& k) {
  RenderScratch scratch;
  ProjectedImage out;
  render_into(frame, motion, k, scratch, out);
  return out;
}

ProjectedImage relative_project(const SceneFrame& frame, const MotionParams& motion, const CameraIntrinsics& k) {
  return render(frame, motion, k);
}

ColoredPointCloud reexpress(const ColoredPointCloud& cloud, const MotionParams& motion) {
  const Mat3 rot = rotation_from_axis_angle(motion.rotvec);
  ColoredPointCloud out(cloud.channel_count());
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    out.push_back(Point3::from(to_camera_frame(cloud.position(i), rot, motion.translation)), cloud.color(i));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kImageMagic[8] = {'C', 'M', 'S', 'I', 'M', 'G', '0', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

std::vector<std::uint8_t> encode_image_tensor(const ProjectedImage& image) {
  std::vector<std::uint8_t> out(kImageMagic, kImageMagic + 8);
  put_u32(out, image.height());
  put_u32(out, image.width());
  out.reserve(out.size() + image.pixels.size() * 4);
  for (float f : image.pixels) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  return out;
}

ProjectedImage decode_image_tensor(std::span<const std::uint8_t> bytes, const CameraIntrinsics& k) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kImageMagic, 8) != 0)
    throw InvalidArgument("image tensor: bad magic");
  const std::uint32_t h = get_u32(bytes.data() + 8);
  const std::uint32_t w = get_u32(bytes.data() + 12);
  const std::size_t cells = static_cast<std::size_t>(h) * w;
  const std::size_t payload = bytes.size() - 16;
  if (cells == 0 || payload % (cells * 4) != 0 || payload == 0)
    throw InvalidArgument("image tensor: payload size does not match header");
  if (h != k.height || w != k.width) throw InvalidArgument("image tensor: dimensions do not match intrinsics");
  ProjectedImage img(k, static_cast<std::uint32_t>(payload / (cells * 4)));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const std::uint32_t bits = get_u32(bytes.data() + 16 + 4 * i);
    std::memcpy(&img.pixels[i], &bits, 4);
  }
  // Coverage is not serialized; anything different from the fill value is
  // known to be covered.
  for (std::size_t p = 0; p < cells; ++p)
    for (std::uint32_t c = 0; c < img.channels; ++c)
      if (img.pixels[p * img.channels + c] != ProjectedImage::kFillValue) img.coverage[p] = 1;
  return img;
}

void write_image_tensor(const ProjectedImage& image, const std::string& path) {
  const auto bytes = encode_image_tensor(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write image tensor '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_png(const ProjectedImage& image, const std::string& path) {
  const std::uint32_t out_channels = image.channels >= 3 ? 3 : 1;
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw Error("cannot write PNG '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error("libpng failed writing '" + path + "'");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, image.width(), image.height(), 8, out_channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(image.width()) * out_channels);
  for (std::uint32_t r = 0; r < image.height(); ++r) {
    for (std::uint32_t c = 0; c < image.width(); ++c)
      for (std::uint32_t ch = 0; ch < out_channels; ++ch)
        row[static_cast<std::size_t>(c) * out_channels + ch] = quantize_channel(std::clamp(image.at(r, c, ch), 0.0f, 1.0f));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace cms
