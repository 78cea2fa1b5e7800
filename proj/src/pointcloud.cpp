#include "cms/pointcloud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <optional>
#include <sstream>
#include <string_view>

#include "cms/errors.hpp"

namespace cms {

ColoredPointCloud::ColoredPointCloud(std::uint32_t channel_count) : channels_(channel_count) {
  if (channel_count == 0) throw InvalidArgument("point cloud needs at least one color channel");
}

void ColoredPointCloud::reserve(std::size_t n) {
  xs_.reserve(n);
  ys_.reserve(n);
  zs_.reserve(n);
  colors_.reserve(n * channels_);
}

void ColoredPointCloud::push_back(const Point3& p, std::span<const float> color) {
  if (color.size() != channels_) throw InvalidArgument("color channel count mismatch");
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
    throw InvalidArgument("point positions must be finite");
  for (float c : color)
    if (!(c >= 0.0f && c <= 1.0f)) throw InvalidArgument("color channels must lie in [0, 1]");
  xs_.push_back(p.x);
  ys_.push_back(p.y);
  zs_.push_back(p.z);
  colors_.insert(colors_.end(), color.begin(), color.end());
}

// ---------------------------------------------------------------------------
// PLY

namespace {

enum class Scalar { I8, U8, I16, U16, I32, U32, F32, F64 };

std::optional<Scalar> scalar_from_name(std::string_view s) {
  if (s == "char" || s == "int8") return Scalar::I8;
  if (s == "uchar" || s == "uint8") return Scalar::U8;
  if (s == "short" || s == "int16") return Scalar::I16;
  if (s == "ushort" || s == "uint16") return Scalar::U16;
  if (s == "int" || s == "int32") return Scalar::I32;
  if (s == "uint" || s == "uint32") return Scalar::U32;
  if (s == "float" || s == "float32") return Scalar::F32;
  if (s == "double" || s == "float64") return Scalar::F64;
  return std::nullopt;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::I8:
    case Scalar::U8: return 1;
    case Scalar::I16:
    case Scalar::U16: return 2;
    case Scalar::I32:
    case Scalar::U32:
    case Scalar::F32: return 4;
    case Scalar::F64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::F32;
  bool is_list = false;
  Scalar count_type = Scalar::U8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  bool ascii = false;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
  std::size_t line_count = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Header parse_header(std::span<const std::uint8_t> bytes) {
  Header h;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_format = false;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= bytes.size()) return std::nullopt;
    std::size_t end = pos;
    while (end < bytes.size() && bytes[end] != '\n') ++end;
    if (end >= bytes.size()) return std::nullopt;
    std::string_view line(reinterpret_cast<const char*>(bytes.data() + pos), end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return line;
  };

  auto first = next_line();
  if (!first || *first != "ply") throw PlyError(PlyError::Kind::Malformed, 1, "missing 'ply' magic");
  while (true) {
    auto line = next_line();
    if (!line) throw PlyError(PlyError::Kind::Malformed, line_no + 1, "header ended without end_header");
    const auto tok = split_ws(*line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() != 3) throw PlyError(PlyError::Kind::Malformed, line_no, "bad format line");
      if (tok[1] == "ascii")
        h.ascii = true;
      else if (tok[1] == "binary_little_endian")
        h.ascii = false;
      else
        throw PlyError(PlyError::Kind::Malformed, line_no, "unsupported format '" + std::string(tok[1]) + "'");
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw PlyError(PlyError::Kind::Malformed, line_no, "bad element line");
      Element e;
      e.name = std::string(tok[1]);
      const auto r = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
      if (r.ec != std::errc() || r.ptr != tok[2].data() + tok[2].size())
        throw PlyError(PlyError::Kind::Malformed, line_no, "bad element count");
      h.elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (h.elements.empty()) throw PlyError(PlyError::Kind::Malformed, line_no, "property before element");
      Property p;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = scalar_from_name(tok[2]);
        auto it = scalar_from_name(tok[3]);
        if (!ct || !it) throw PlyError(PlyError::Kind::Malformed, line_no, "unknown list type");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
        p.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        auto t = scalar_from_name(tok[1]);
        if (!t) throw PlyError(PlyError::Kind::Malformed, line_no, "unknown property type '" + std::string(tok[1]) + "'");
        p.type = *t;
        p.name = std::string(tok[2]);
      } else {
        throw PlyError(PlyError::Kind::Malformed, line_no, "bad property line");
      }
      h.elements.back().properties.push_back(std::move(p));
    } else {
      throw PlyError(PlyError::Kind::Malformed, line_no, "unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_format) throw PlyError(PlyError::Kind::Malformed, line_no, "missing format line");
  h.body_offset = pos;
  h.line_count = line_no;
  return h;
}

double read_binary(const std::uint8_t* p, Scalar t) {
  switch (t) {
    case Scalar::I8: return static_cast<std::int8_t>(*p);
    case Scalar::U8: return *p;
    case Scalar::I16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case Scalar::U16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case Scalar::I32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    case Scalar::U32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case Scalar::F32: { float v; std::memcpy(&v, p, 4); return v; }
    case Scalar::F64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

// Pulls whitespace-separated tokens from the ASCII body, tracking line numbers.
class TokenStream {
 public:
  TokenStream(std::string_view body, std::size_t first_line) : body_(body), line_(first_line) {}

  std::optional<std::string_view> next() {
    while (pos_ < body_.size() && std::isspace(static_cast<unsigned char>(body_[pos_]))) {
      if (body_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= body_.size()) return std::nullopt;
    std::size_t end = pos_;
    while (end < body_.size() && !std::isspace(static_cast<unsigned char>(body_[end]))) ++end;
    auto tok = body_.substr(pos_, end - pos_);
    pos_ = end;
    return tok;
  }

  std::size_t line() const { return line_; }

 private:
  std::string_view body_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

struct VertexLayout {
  int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1;
};

VertexLayout locate(const Element& vertex) {
  VertexLayout l;
  for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
    const auto& p = vertex.properties[i];
    const int idx = static_cast<int>(i);
    if (p.is_list) continue;
    if (p.name == "x") l.x = idx;
    else if (p.name == "y") l.y = idx;
    else if (p.name == "z") l.z = idx;
    else if (p.name == "red" || p.name == "r") l.r = idx;
    else if (p.name == "green" || p.name == "g") l.g = idx;
    else if (p.name == "blue" || p.name == "b") l.b = idx;
  }
  const char* missing = l.x < 0 ? "x" : l.y < 0 ? "y" : l.z < 0 ? "z" : l.r < 0 ? "red" : l.g < 0 ? "green" : l.b < 0 ? "blue" : nullptr;
  if (missing) throw PlyError(PlyError::Kind::Schema, 0, std::string("vertex element lacks property '") + missing + "'");
  return l;
}

float color_value(double raw, Scalar type) {
  if (type == Scalar::F32 || type == Scalar::F64) return static_cast<float>(raw);
  return static_cast<float>(raw / 255.0);
}

void append_vertex(ColoredPointCloud& cloud, const Element& vertex, const VertexLayout& l,
                   const std::vector<double>& values) {
  const float rgb[3] = {color_value(values[static_cast<std::size_t>(l.r)], vertex.properties[static_cast<std::size_t>(l.r)].type),
                        color_value(values[static_cast<std::size_t>(l.g)], vertex.properties[static_cast<std::size_t>(l.g)].type),
                        color_value(values[static_cast<std::size_t>(l.b)], vertex.properties[static_cast<std::size_t>(l.b)].type)};
  cloud.push_back({values[static_cast<std::size_t>(l.x)], values[static_cast<std::size_t>(l.y)],
                   values[static_cast<std::size_t>(l.z)]},
                  std::span<const float>(rgb, 3));
}

}  // namespace

ColoredPointCloud parse_ply(std::span<const std::uint8_t> bytes) {
  const Header h = parse_header(bytes);
  const auto vit = std::find_if(h.elements.begin(), h.elements.end(), [](const Element& e) { return e.name == "vertex"; });
  if (vit == h.elements.end()) throw PlyError(PlyError::Kind::Schema, 0, "no vertex element");
  const VertexLayout layout = locate(*vit);

  ColoredPointCloud cloud(3);
  cloud.reserve(vit->count);

  if (h.ascii) {
    std::string_view body(reinterpret_cast<const char*>(bytes.data() + h.body_offset), bytes.size() - h.body_offset);
    TokenStream ts(body, h.line_count + 1);
    auto number = [&](const Element& e, std::size_t row) {
      auto tok = ts.next();
      if (!tok)
        throw PlyError(PlyError::Kind::Truncated, 0,
                       "element '" + e.name + "' declares " + std::to_string(e.count) + " rows, found " +
                           std::to_string(row));
      double v = 0.0;
      const auto r = std::from_chars(tok->data(), tok->data() + tok->size(), v);
      if (r.ec != std::errc() || r.ptr != tok->data() + tok->size())
        throw PlyError(PlyError::Kind::Malformed, ts.line(), "bad number '" + std::string(*tok) + "'");
      return v;
    };
    for (const Element& e : h.elements) {
      const bool is_vertex = &e == &*vit;
      std::vector<double> values(e.properties.size());
      for (std::size_t row = 0; row < e.count; ++row) {
        for (std::size_t pi = 0; pi < e.properties.size(); ++pi) {
          const Property& p = e.properties[pi];
          if (p.is_list) {
            const double n = number(e, row);
            if (n < 0) throw PlyError(PlyError::Kind::Malformed, ts.line(), "negative list length");
            for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) number(e, row);
          } else {
            values[pi] = number(e, row);
          }
        }
        if (is_vertex) append_vertex(cloud, e, layout, values);
      }
      if (is_vertex) break;
    }
    return cloud;
  }

  std::size_t pos = h.body_offset;
  auto need = [&](std::size_t n, const Element& e, std::size_t row) {
    if (bytes.size() - pos < n)
      throw PlyError(PlyError::Kind::Truncated, 0,
                     "element '" + e.name + "' declares " + std::to_string(e.count) + " rows, found " +
                         std::to_string(row));
  };
  for (const Element& e : h.elements) {
    const bool is_vertex = &e == &*vit;
    std::vector<double> values(e.properties.size());
    for (std::size_t row = 0; row < e.count; ++row) {
      for (std::size_t pi = 0; pi < e.properties.size(); ++pi) {
        const Property& p = e.properties[pi];
        if (p.is_list) {
          need(scalar_size(p.count_type), e, row);
          const double n = read_binary(bytes.data() + pos, p.count_type);
          pos += scalar_size(p.count_type);
          if (n < 0) throw PlyError(PlyError::Kind::Malformed, 0, "negative list length");
          const std::size_t len = static_cast<std::size_t>(n) * scalar_size(p.type);
          need(len, e, row);
          pos += len;
        } else {
          need(scalar_size(p.type), e, row);
          values[pi] = read_binary(bytes.data() + pos, p.type);
          pos += scalar_size(p.type);
        }
      }
      if (is_vertex) append_vertex(cloud, e, layout, values);
    }
    if (is_vertex) break;
  }
  return cloud;
}

ColoredPointCloud read_ply_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open PLY file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_ply(bytes);
}

std::uint8_t quantize_channel(float value) {
  const double scaled = std::floor(static_cast<double>(value) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

std::vector<std::uint8_t> write_ply(const ColoredPointCloud& cloud) {
  if (cloud.channel_count() != 3) throw InvalidArgument("PLY export needs exactly three color channels");
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size()
         << "\nproperty float x\nproperty float y\nproperty float z\n"
            "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  const std::string hs = header.str();
  std::vector<std::uint8_t> out(hs.begin(), hs.end());
  out.reserve(out.size() + cloud.size() * 15);
  auto put_float = [&](double v) {
    const float f = static_cast<float>(v);
    std::uint8_t b[4];
    std::memcpy(b, &f, 4);
    out.insert(out.end(), b, b + 4);
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3 p = cloud.position(i);
    put_float(p.x);
    put_float(p.y);
    put_float(p.z);
    for (float c : cloud.color(i)) out.push_back(quantize_channel(c));
  }
  return out;
}

void write_ply_file(const ColoredPointCloud& cloud, const std::string& path) {
  const auto bytes = write_ply(cloud);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write PLY file '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// Downsampling

ColoredPointCloud uniform_downsample(const ColoredPointCloud& cloud, std::size_t k) {
  if (k == 0) throw InvalidArgument("uniform_downsample: k must be >= 1");
  ColoredPointCloud out(cloud.channel_count());
  out.reserve((cloud.size() + k - 1) / k);
  for (std::size_t i = 0; i < cloud.size(); i += k) out.push_back(cloud.position(i), cloud.color(i));
  return out;
}

ColoredPointCloud voxel_downsample(const ColoredPointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size))
    throw InvalidArgument("voxel_downsample: voxel size must be positive");

  struct Keyed {
    std::int64_t kz, ky, kx;
    std::size_t index;
  };
  std::vector<Keyed> keyed(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3 p = cloud.position(i);
    keyed[i] = {static_cast<std::int64_t>(std::floor(p.z / voxel_size)),
                static_cast<std::int64_t>(std::floor(p.y / voxel_size)),
                static_cast<std::int64_t>(std::floor(p.x / voxel_size)), i};
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.kz != b.kz) return a.kz < b.kz;
    if (a.ky != b.ky) return a.ky < b.ky;
    if (a.kx != b.kx) return a.kx < b.kx;
    return a.index < b.index;
  });

  const std::uint32_t channels = cloud.channel_count();
  ColoredPointCloud out(channels);
  std::vector<double> color_sum(channels);
  std::vector<float> color(channels);
  std::size_t begin = 0;
  while (begin < keyed.size()) {
    std::size_t end = begin;
    while (end < keyed.size() && keyed[end].kz == keyed[begin].kz && keyed[end].ky == keyed[begin].ky &&
           keyed[end].kx == keyed[begin].kx)
      ++end;
    double sx = 0, sy = 0, sz = 0;
    Point3 lo = cloud.position(keyed[begin].index);
    Point3 hi = lo;
    std::fill(color_sum.begin(), color_sum.end(), 0.0);
    for (std::size_t j = begin; j < end; ++j) {
      const Point3 p = cloud.position(keyed[j].index);
      sx += p.x;
      sy += p.y;
      sz += p.z;
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
      const auto c = cloud.color(keyed[j].index);
      for (std::uint32_t ch = 0; ch < channels; ++ch) color_sum[ch] += c[ch];
    }
    const double n = static_cast<double>(end - begin);
    for (std::uint32_t ch = 0; ch < channels; ++ch)
      color[ch] = std::clamp(static_cast<float>(color_sum[ch] / n), 0.0f, 1.0f);
    // Rounding in the mean can step outside the members' hull; clamp back in.
    out.push_back({std::clamp(sx / n, lo.x, hi.x), std::clamp(sy / n, lo.y, hi.y), std::clamp(sz / n, lo.z, hi.z)},
                  color);
    begin = end;
  }
  return out;
}

ColoredPointCloud two_stage_downsample(const ColoredPointCloud& cloud, std::size_t k, double voxel_size) {
  ColoredPointCloud out = k > 1 ? uniform_downsample(cloud, k) : cloud;
  if (voxel_size > 0.0) out = voxel_downsample(out, voxel_size);
  return out;
}

}  // namespace cms
