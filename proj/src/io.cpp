#include "mdepth/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace mdepth {
namespace {

std::string describe(const fs::path& path) { return "'" + path.string() + "'"; }

std::vector<unsigned char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + describe(path));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + describe(path));
  return out;
}

int quantize(double v, int maxval) {
  return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
}

// PNG ---------------------------------------------------------------------

struct ReadStream {
  const std::vector<unsigned char>* bytes;
  std::size_t pos;
};

void read_callback(png_structp png, png_bytep out, png_size_t n) {
  auto* s = static_cast<ReadStream*>(png_get_io_ptr(png));
  if (s->pos + n > s->bytes->size()) png_error(png, "truncated file");
  std::memcpy(out, s->bytes->data() + s->pos, n);
  s->pos += n;
}

ImageBuffer read_png(const fs::path& path, const std::vector<unsigned char>& bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw InputError("libpng initialisation failed");
  }
  ReadStream stream{&bytes, 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("malformed PNG " + describe(path));
  }
  png_set_read_fn(png, &stream, read_callback);
  png_read_png(png, info, PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_PACKING,
               nullptr);
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int ch = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  png_bytepp rows = png_get_rows(png, info);
  std::vector<double> data(static_cast<std::size_t>(h) * w * ch);
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  std::size_t i = 0;
  for (int r = 0; r < h; ++r) {
    const png_bytep row = rows[r];
    for (int c = 0; c < w * ch; ++c) {
      const int v = depth == 16 ? (row[2 * c] << 8) | row[2 * c + 1] : row[c];
      data[i++] = v / maxval;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (ch != 1 && ch != 3) throw InputError("unsupported PNG channel layout in " + describe(path));
  return ImageBuffer(h, w, ch, std::move(data));
}

void write_callback(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::ofstream*>(png_get_io_ptr(png));
  out->write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void flush_callback(png_structp) {}

// PNM ---------------------------------------------------------------------

ImageBuffer read_pnm(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::size_t pos = 2;
  auto token = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start || v > 1 << 20) throw InputError("malformed PNM header in " + describe(path));
    return v;
  };
  const int ch = bytes[1] == '6' ? 3 : 1;
  const long w = token();
  const long h = token();
  const long maxval = token();
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) throw InputError("bad PNM header in " + describe(path));
  ++pos;  // single whitespace before the raster
  const int bpv = maxval > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(h) * w * ch;
  if (bytes.size() < pos + n * bpv) throw InputError("truncated PNM " + describe(path));
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = bpv == 2 ? (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1] : bytes[pos + i];
    if (v > static_cast<unsigned>(maxval)) throw InputError("PNM sample exceeds maxval in " + describe(path));
    data[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return ImageBuffer(static_cast<int>(h), static_cast<int>(w), ch, std::move(data));
}

// Little-endian scalars ------------------------------------------------------

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

// JSON helpers --------------------------------------------------------------

void expect_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw InputError(std::string(what) + ": expected a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw InputError(std::string(what) + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const Json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw InputError(std::string(what) + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string(what) + ": bad value for '" + key + "': " + e.what());
  }
}

Eigen::Vector3d vec3(const Json& j, const char* key, const char* what) {
  const auto v = get<std::vector<double>>(j, key, what);
  if (v.size() != 3) throw InputError(std::string(what) + ": '" + key + "' needs 3 entries");
  return {v[0], v[1], v[2]};
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

ImageBuffer read_image(const fs::path& path) {
  const std::vector<unsigned char> bytes = slurp(path);
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0) return read_png(path, bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return read_pnm(path, bytes);
  }
  throw InputError("unsupported image format " + describe(path) + " (expected PNG or binary PGM/PPM)");
}

void write_png(const fs::path& path, const ImageBuffer& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("PNG bit depth must be 8 or 16");
  if (img.empty()) throw std::invalid_argument("cannot write an empty image");
  const int w = img.width();
  const int ch = img.channels();
  const int maxval = bit_depth == 16 ? 65535 : 255;
  const std::size_t row_bytes = static_cast<std::size_t>(w) * ch * (bit_depth / 8);
  std::vector<unsigned char> raster(row_bytes * img.height());
  std::size_t i = 0;
  for (double v : img.data()) {
    const int q = quantize(v, maxval);
    if (bit_depth == 16) {
      raster[i++] = static_cast<unsigned char>(q >> 8);
      raster[i++] = static_cast<unsigned char>(q & 0xff);
    } else {
      raster[i++] = static_cast<unsigned char>(q);
    }
  }
  std::vector<png_bytep> rows(img.height());
  for (int r = 0; r < img.height(); ++r) rows[r] = raster.data() + r * row_bytes;
  std::ofstream out = open_out(path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw InputError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw InputError("failed writing PNG " + describe(path));
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_IHDR(png, info, w, img.height(), bit_depth, ch == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  if (!out) throw InputError("failed writing PNG " + describe(path));
}

void write_pnm(const fs::path& path, const ImageBuffer& img) {
  if (img.empty()) throw std::invalid_argument("cannot write an empty image");
  std::string buf = (img.channels() == 3 ? "P6\n" : "P5\n") + std::to_string(img.width()) + " " +
                    std::to_string(img.height()) + "\n255\n";
  for (double v : img.data()) buf.push_back(static_cast<char>(quantize(v, 255)));
  std::ofstream out = open_out(path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw InputError("failed writing " + describe(path));
}

void write_image(const fs::path& path, const ImageBuffer& img) {
  const std::string ext = path.extension().string();
  if (ext == ".png") {
    write_png(path, img);
  } else if (ext == ".ppm" || ext == ".pgm") {
    write_pnm(path, img);
  } else {
    throw InputError("unknown image extension for " + describe(path));
  }
}

void write_float_map(const fs::path& path, const Grid<double>& map) {
  std::string buf(kFloatMapMagic, 8);
  put_u32(buf, static_cast<std::uint32_t>(map.height()));
  put_u32(buf, static_cast<std::uint32_t>(map.width()));
  for (double v : map.values()) {
    std::uint32_t bits;
    const float f = static_cast<float>(v);
    std::memcpy(&bits, &f, 4);
    put_u32(buf, bits);
  }
  std::ofstream out = open_out(path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw InputError("failed writing " + describe(path));
}

Grid<double> read_float_map(const fs::path& path) {
  const std::vector<unsigned char> bytes = slurp(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kFloatMapMagic, 8) != 0) {
    throw InputError(describe(path) + " is not a float map");
  }
  const std::uint32_t h = get_u32(bytes.data() + 8);
  const std::uint32_t w = get_u32(bytes.data() + 12);
  if (h < 1 || w < 1 || bytes.size() != 16 + 4ull * h * w) {
    throw InputError("float map " + describe(path) + " has an inconsistent size");
  }
  Grid<double> map(static_cast<int>(h), static_cast<int>(w), 0.0);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const std::uint32_t bits = get_u32(bytes.data() + 16 + 4 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    map[i] = f;
  }
  return map;
}

Json to_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

Intrinsics intrinsics_from_json(const Json& j) {
  const char* what = "intrinsics";
  expect_keys(j, {"fx", "fy", "cx", "cy", "width", "height"}, what);
  try {
    return make_intrinsics(get<double>(j, "fx", what), get<double>(j, "fy", what), get<double>(j, "cx", what),
                           get<double>(j, "cy", what), get<int>(j, "width", what), get<int>(j, "height", what));
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("intrinsics: ") + e.what());
  }
}

Json to_json(const PoseSE3& pose) {
  return {{"axis_angle", {pose.rotation.x(), pose.rotation.y(), pose.rotation.z()}},
          {"translation", {pose.translation.x(), pose.translation.y(), pose.translation.z()}},
          {"convention", "target_to_support"}};
}

PoseSE3 pose_from_json(const Json& j) {
  const char* what = "pose";
  expect_keys(j, {"axis_angle", "translation", "convention"}, what);
  if (get<std::string>(j, "convention", what) != "target_to_support") {
    throw InputError("pose: convention must be \"target_to_support\"");
  }
  PoseSE3 pose;
  pose.rotation = vec3(j, "axis_angle", what);
  pose.translation = vec3(j, "translation", what);
  if (!pose.rotation.allFinite() || !pose.translation.allFinite()) throw InputError("pose: non-finite entry");
  return pose;
}

Json to_json(const SceneState& state) {
  Json poses = Json::array();
  for (const auto& p : state.poses) poses.push_back(to_json(p));
  return {{"height", state.height()},
          {"width", state.width()},
          {"offsets", state.offsets},
          {"poses", poses},
          {"intrinsics_raw", state.intrinsics_raw},
          {"depth_range", {{"near", state.range.near}, {"far", state.range.far}}},
          {"logits", std::vector<double>(state.logits.values().begin(), state.logits.values().end())}};
}

SceneState scene_state_from_json(const Json& j) {
  const char* what = "scene state";
  expect_keys(j, {"height", "width", "offsets", "poses", "intrinsics_raw", "depth_range", "logits"}, what);
  const int h = get<int>(j, "height", what);
  const int w = get<int>(j, "width", what);
  const auto offsets = get<std::vector<int>>(j, "offsets", what);
  const Json& range_j = j.at("depth_range");
  expect_keys(range_j, {"near", "far"}, "depth_range");
  DepthRange range{get<double>(range_j, "near", "depth_range"), get<double>(range_j, "far", "depth_range")};
  if (h < 1 || w < 1) throw InputError("scene state: bad extent");
  SceneState s;
  try {
    range.validate();
    s = SceneState::initial(h, w, offsets, range);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("scene state: ") + e.what());
  }
  const auto logits = get<std::vector<double>>(j, "logits", what);
  if (logits.size() != s.logits.size()) throw InputError("scene state: logits size does not match height x width");
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) throw InputError("scene state: non-finite logit");
    s.logits[i] = logits[i];
  }
  const Json& poses = j.at("poses");
  if (!poses.is_array() || poses.size() != offsets.size()) throw InputError("scene state: need one pose per offset");
  for (std::size_t i = 0; i < offsets.size(); ++i) s.poses[i] = pose_from_json(poses[i]);
  const auto raw = get<std::vector<double>>(j, "intrinsics_raw", what);
  if (raw.size() != 4) throw InputError("scene state: intrinsics_raw needs 4 entries");
  std::copy(raw.begin(), raw.end(), s.intrinsics_raw.begin());
  return s;
}

Json to_json(const CropSpec& c) {
  return {{"row", c.row},       {"col", c.col},
          {"height", c.height}, {"width", c.width},
          {"out_height", c.out_height}, {"out_width", c.out_width},
          {"ratio", {c.ratio.w, c.ratio.h}}, {"scale", c.scale}};
}

Json to_json(const AugmentRecord& r) {
  Json j;
  j["flip"] = r.flip;
  j["ar_aug"] = r.ar_aug ? to_json(*r.ar_aug) : Json(nullptr);
  if (r.color_jitter) {
    const auto& p = *r.color_jitter;
    j["color_jitter"] = {{"brightness", p.brightness}, {"contrast", p.contrast}, {"saturation", p.saturation},
                         {"hue", p.hue}, {"order", p.order}};
  } else {
    j["color_jitter"] = nullptr;
  }
  if (r.randaugment) {
    Json ops = Json::array();
    for (const auto& op : r.randaugment->ops) ops.push_back({{"op", to_string(op.op)}, {"magnitude", op.magnitude}});
    j["randaugment"] = ops;
  } else {
    j["randaugment"] = nullptr;
  }
  if (r.cutout) {
    const auto& c = *r.cutout;
    j["cutout"] = {{"row", c.row},     {"col", c.col},           {"height", c.height},
                   {"width", c.width}, {"fill", to_string(c.fill)}, {"color", c.color},
                   {"noise_seed", c.noise_seed}};
  } else {
    j["cutout"] = nullptr;
  }
  return j;
}

AugmentRecord augment_record_from_json(const Json& j) {
  const char* what = "augment record";
  expect_keys(j, {"flip", "ar_aug", "color_jitter", "randaugment", "cutout"}, what);
  AugmentRecord r;
  r.flip = get<bool>(j, "flip", what);
  if (j.contains("ar_aug") && !j["ar_aug"].is_null()) {
    const Json& c = j["ar_aug"];
    expect_keys(c, {"row", "col", "height", "width", "out_height", "out_width", "ratio", "scale"}, "ar_aug");
    CropSpec s;
    s.row = get<int>(c, "row", "ar_aug");
    s.col = get<int>(c, "col", "ar_aug");
    s.height = get<int>(c, "height", "ar_aug");
    s.width = get<int>(c, "width", "ar_aug");
    s.out_height = get<int>(c, "out_height", "ar_aug");
    s.out_width = get<int>(c, "out_width", "ar_aug");
    const auto ratio = get<std::vector<int>>(c, "ratio", "ar_aug");
    if (ratio.size() != 2 || ratio[0] < 1 || ratio[1] < 1) throw InputError("ar_aug: ratio needs 2 positive entries");
    s.ratio = {ratio[0], ratio[1]};
    s.scale = get<double>(c, "scale", "ar_aug");
    r.ar_aug = s;
  }
  if (j.contains("color_jitter") && !j["color_jitter"].is_null()) {
    const Json& c = j["color_jitter"];
    expect_keys(c, {"brightness", "contrast", "saturation", "hue", "order"}, "color_jitter");
    ColorJitterParams p;
    p.brightness = get<double>(c, "brightness", "color_jitter");
    p.contrast = get<double>(c, "contrast", "color_jitter");
    p.saturation = get<double>(c, "saturation", "color_jitter");
    p.hue = get<double>(c, "hue", "color_jitter");
    const auto order = get<std::vector<int>>(c, "order", "color_jitter");
    std::array<int, 4> sorted{};
    if (order.size() != 4) throw InputError("color_jitter: order needs 4 entries");
    std::copy(order.begin(), order.end(), p.order.begin());
    std::copy(order.begin(), order.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    if (sorted != std::array<int, 4>{0, 1, 2, 3}) throw InputError("color_jitter: order must permute 0..3");
    r.color_jitter = p;
  }
  if (j.contains("randaugment") && !j["randaugment"].is_null()) {
    RandAugmentParams p;
    for (const Json& o : j["randaugment"]) {
      expect_keys(o, {"op", "magnitude"}, "randaugment");
      const auto op = photo_op_from_string(get<std::string>(o, "op", "randaugment"));
      if (!op) throw InputError("randaugment: unknown op '" + o["op"].get<std::string>() + "'");
      p.ops.push_back({*op, get<double>(o, "magnitude", "randaugment")});
    }
    r.randaugment = p;
  }
  if (j.contains("cutout") && !j["cutout"].is_null()) {
    const Json& c = j["cutout"];
    expect_keys(c, {"row", "col", "height", "width", "fill", "color", "noise_seed"}, "cutout");
    CutoutSpec s;
    s.row = get<int>(c, "row", "cutout");
    s.col = get<int>(c, "col", "cutout");
    s.height = get<int>(c, "height", "cutout");
    s.width = get<int>(c, "width", "cutout");
    const auto fill = fill_mode_from_string(get<std::string>(c, "fill", "cutout"));
    if (!fill) throw InputError("cutout: unknown fill mode");
    s.fill = *fill;
    const auto color = get<std::vector<double>>(c, "color", "cutout");
    if (color.size() != 3) throw InputError("cutout: color needs 3 entries");
    std::copy(color.begin(), color.end(), s.color.begin());
    s.noise_seed = get<std::uint64_t>(c, "noise_seed", "cutout");
    r.cutout = s;
  }
  return r;
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + describe(path));
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("invalid JSON in " + describe(path) + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw InputError("failed writing " + describe(path));
}

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out + "\r\n";
}

std::string format_number(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string buf = csv_row(header);
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::invalid_argument("CSV row width does not match the header");
    buf += csv_row(row);
  }
  std::ofstream out = open_out(path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw InputError("failed writing " + describe(path));
}

std::vector<std::string> loss_trace_header(std::size_t supports) {
  std::vector<std::string> h{"iteration",        "total",       "reconstruction", "smoothness",
                             "smoothness_weight", "automask_coverage", "kept_pixels", "all_masked",
                             "nonfinite_gradients"};
  for (std::size_t s = 0; s < supports; ++s) h.push_back("argmin_" + std::to_string(s));
  return h;
}

std::vector<std::string> loss_trace_row(std::size_t iteration, const LossReport& r) {
  std::vector<std::string> row{std::to_string(iteration),
                               format_number(r.total),
                               format_number(r.reconstruction),
                               format_number(r.smoothness),
                               format_number(r.smoothness_weight),
                               format_number(r.automask_coverage),
                               std::to_string(r.kept_pixels),
                               r.all_masked ? "1" : "0",
                               std::to_string(r.nonfinite_gradients)};
  for (std::size_t n : r.argmin_histogram) row.push_back(std::to_string(n));
  return row;
}

void SequenceManifest::validate() const {
  if (frames.size() < 2) throw InputError("manifest: need at least 2 frames");
  if (target >= static_cast<int>(frames.size())) throw InputError("manifest: target index out of range");
  if (!(frame_rate > 0.0)) throw InputError("manifest: frame_rate must be positive");
  auto exists = [](const fs::path& p) {
    if (!fs::exists(p)) throw InputError("manifest: missing file " + describe(p));
  };
  for (const auto& f : frames) exists(f);
  if (target_depth) exists(*target_depth);
  if (intrinsics) exists(*intrinsics);
}

SequenceManifest read_manifest(const fs::path& path) {
  const Json j = read_json(path);
  const char* what = "manifest";
  expect_keys(j, {"frames", "target", "intrinsics", "target_depth", "frame_rate", "scene_id"}, what);
  const fs::path base = path.parent_path();
  SequenceManifest m;
  for (const auto& f : get<std::vector<std::string>>(j, "frames", what)) m.frames.push_back(resolve(base, f));
  if (j.contains("target")) m.target = get<int>(j, "target", what);
  if (j.contains("intrinsics")) m.intrinsics = resolve(base, get<std::string>(j, "intrinsics", what));
  if (j.contains("target_depth")) m.target_depth = resolve(base, get<std::string>(j, "target_depth", what));
  if (j.contains("frame_rate")) m.frame_rate = get<double>(j, "frame_rate", what);
  if (j.contains("scene_id")) m.scene_id = get<std::string>(j, "scene_id", what);
  m.validate();
  return m;
}

Json to_json(const SequenceManifest& m, const fs::path& relative_to) {
  auto rel = [&](const fs::path& p) { return fs::relative(p, relative_to).generic_string(); };
  Json j;
  j["frames"] = Json::array();
  for (const auto& f : m.frames) j["frames"].push_back(rel(f));
  j["target"] = m.target_index();
  if (m.intrinsics) j["intrinsics"] = rel(*m.intrinsics);
  if (m.target_depth) j["target_depth"] = rel(*m.target_depth);
  j["frame_rate"] = m.frame_rate;
  j["scene_id"] = m.scene_id;
  return j;
}

}  // namespace mdepth
