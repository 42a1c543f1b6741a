#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdepth/augment.hpp"
#include "mdepth/camera.hpp"
#include "mdepth/grid.hpp"
#include "mdepth/image.hpp"
#include "mdepth/objective.hpp"
#include "mdepth/pose.hpp"
#include "mdepth/scene_state.hpp"

namespace mdepth {

namespace fs = std::filesystem;
using Json = nlohmann::json;  // std::map-backed, so dumps are key-sorted

/// Unreadable, malformed or inconsistent input.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Images --------------------------------------------------------------------

/// PNG (8/16-bit gray, gray+alpha, RGB, RGBA; alpha dropped) or binary
/// PGM/PPM (P5/P6, maxval up to 65535), scaled to [0, 1].
ImageBuffer read_image(const fs::path& path);
void write_png(const fs::path& path, const ImageBuffer& img, int bit_depth = 8);
void write_pnm(const fs::path& path, const ImageBuffer& img);
/// Format by extension: .png, .ppm or .pgm.
void write_image(const fs::path& path, const ImageBuffer& img);

// Float maps ----------------------------------------------------------------

inline constexpr char kFloatMapMagic[9] = "MDFMAP01";

/// 8-byte magic, uint32 LE height and width, then row-major float32 LE.
void write_float_map(const fs::path& path, const Grid<double>& map);
Grid<double> read_float_map(const fs::path& path);

// JSON ----------------------------------------------------------------------

Json to_json(const Intrinsics& k);
Intrinsics intrinsics_from_json(const Json& j);
Json to_json(const PoseSE3& pose);
PoseSE3 pose_from_json(const Json& j);
Json to_json(const SceneState& state);
SceneState scene_state_from_json(const Json& j);
Json to_json(const CropSpec& spec);
Json to_json(const AugmentRecord& record);
AugmentRecord augment_record_from_json(const Json& j);

Json read_json(const fs::path& path);
/// Two-space indented, keys sorted, trailing newline.
void write_json(const fs::path& path, const Json& j);

// CSV -----------------------------------------------------------------------

/// RFC 4180: fields holding a comma, quote, CR or LF are quoted, quotes doubled.
std::string csv_field(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);
/// Shortest round-tripping decimal form.
std::string format_number(double v);
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::vector<std::string> loss_trace_header(std::size_t supports);
std::vector<std::string> loss_trace_row(std::size_t iteration, const LossReport& report);

// Sequence manifests ----------------------------------------------------------

/// JSON: {"frames": [...], "target": i, "intrinsics": path, "target_depth": path,
/// "frame_rate": hz, "scene_id": id}. Relative paths resolve against the
/// manifest directory.
struct SequenceManifest {
  std::vector<fs::path> frames;
  int target = -1;  // -1: middle frame
  std::optional<fs::path> intrinsics;
  std::optional<fs::path> target_depth;  // ground-truth float map of the target
  double frame_rate = 10.0;
  std::string scene_id;

  int target_index() const { return target < 0 ? static_cast<int>(frames.size()) / 2 : target; }
  /// Throws InputError unless there are at least 2 frames and every file exists.
  void validate() const;
};

SequenceManifest read_manifest(const fs::path& path);
Json to_json(const SequenceManifest& manifest, const fs::path& relative_to);

}  // namespace mdepth
