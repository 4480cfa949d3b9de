/* Copyright 2026 The drivemt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "drivemt/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "drivemt/error.hpp"
#include "drivemt/image_io.hpp"
#include "text_util.hpp"

namespace drivemt {

std::string to_string(Domain domain) { return domain == Domain::S1 ? "S1" : "S2"; }

Domain parse_domain(const std::string& text) {
  if (text == "S1" || text == "s1") return Domain::S1;
  if (text == "S2" || text == "s2") return Domain::S2;
  throw FormatError("unknown domain '" + text + "' (expected S1 or S2)");
}

std::size_t DatasetManifest::included_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.include; }));
}

std::vector<std::string> DatasetManifest::frame_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries) ids.push_back(frame_id_of(e));
  return ids;
}

std::string frame_id_of(const ManifestEntry& entry) { return entry.relative_path.stem().string(); }

DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  DatasetManifest manifest;
  manifest.base_dir = base_dir;

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = "manifest line " + std::to_string(line_no);

    if (line.front() == '#') {
      const auto fields = detail::split(line, '\t');
      for (const auto& field : fields) {
        const auto eq = field.find('=');
        if (eq == std::string::npos || field.front() != '#') {
          throw FormatError(where + ": malformed header field '" + field + "'");
        }
        const std::string key = field.substr(1, eq - 1);
        const std::string value = field.substr(eq + 1);
        if (key == "dataset_id") {
          manifest.dataset_id = value;
          have_header = true;
        } else if (key == "domain") {
          manifest.domain.value = parse_domain(value);
        } else if (key == "alias") {
          manifest.domain.alias = value;
        } else if (key == "provenance") {
          manifest.provenance = value;
        } else {
          throw FormatError(where + ": unknown header key '" + key + "'");
        }
      }
      continue;
    }

    if (!have_header) throw FormatError(where + ": record before '#dataset_id=' header");
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 3) {
      throw FormatError(where + ": expected 3 tab-separated fields, got " +
                        std::to_string(fields.size()));
    }
    ManifestEntry entry;
    entry.relative_path = fields[0];
    if (fields[0].empty()) throw FormatError(where + ": empty path");
    if (fields[1] != "NA") {
      const auto angle = detail::parse_double(fields[1]);
      if (!angle) throw FormatError(where + ": bad steering value '" + fields[1] + "'");
      entry.steering_degrees = *angle;
    }
    if (fields[2] == "1") {
      entry.include = true;
    } else if (fields[2] == "0") {
      entry.include = false;
    } else {
      throw FormatError(where + ": include flag must be 0 or 1");
    }
    const auto id = frame_id_of(entry);
    if (!seen.insert(id).second) throw FormatError(where + ": duplicate frame id '" + id + "'");
    manifest.entries.push_back(std::move(entry));
  }
  if (!have_header) throw FormatError("manifest has no '#dataset_id=' header");
  return manifest;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open manifest: " + path.string());
  try {
    return parse_manifest(in, path.parent_path());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_manifest(std::ostream& out, const DatasetManifest& manifest) {
  out << "#dataset_id=" << manifest.dataset_id << "\t#domain=" << to_string(manifest.domain.value)
      << "\t#alias=" << manifest.domain.alias << '\n';
  if (!manifest.provenance.empty()) out << "#provenance=" << manifest.provenance << '\n';
  for (const auto& e : manifest.entries) {
    out << e.relative_path.generic_string() << '\t'
        << (e.steering_degrees ? detail::format_double(*e.steering_degrees) : std::string("NA"))
        << '\t' << (e.include ? '1' : '0') << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write manifest: " + path.string());
  write_manifest(out, manifest);
}

std::set<std::string> read_exclusion_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open exclusion list: " + path.string());
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    ids.insert(line);
  }
  return ids;
}

std::size_t kept_frame_count(std::size_t total_frames, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("stride must be >= 1");
  return (total_frames + stride - 1) / stride;
}

std::size_t stride_for_budget(std::size_t total_frames, std::size_t budget) {
  if (budget == 0) throw std::invalid_argument("frame budget must be >= 1");
  return std::max<std::size_t>(1, (total_frames + budget - 1) / budget);
}

std::size_t extract_frames(const std::filesystem::path& video_path, std::size_t stride,
                           const std::function<void(std::size_t, const Image&)>& sink) {
  if (stride == 0) throw std::invalid_argument("stride must be >= 1");
  std::size_t kept = 0;
  const std::size_t decoded = decode_video(video_path, [&](std::size_t i, const Image& frame) {
    if (i % stride != 0) return;
    sink(i, frame);
    ++kept;
  });
  if (decoded == 0) throw EmptyInputError("no decodable frames in " + video_path.string());
  return kept;
}

std::vector<Image> extract_frames(const std::filesystem::path& video_path, std::size_t stride) {
  std::vector<Image> frames;
  extract_frames(video_path, stride,
                 [&](std::size_t, const Image& frame) { frames.push_back(frame); });
  return frames;
}

Image normalize_frame(const Image& raw, int height, int width) {
  if (raw.channels() != 3) {
    throw FormatError("expected a 3-channel image, got " + std::to_string(raw.channels()) +
                      " channels");
  }
  if (raw.height() <= 0 || raw.width() <= 0) throw FormatError("empty image");

  // Largest centred window with the target aspect ratio, compared in integers
  // so an already-conforming image is never cropped.
  int crop_h = raw.height();
  int crop_w = raw.width();
  const long long lhs = static_cast<long long>(raw.width()) * height;
  const long long rhs = static_cast<long long>(raw.height()) * width;
  if (lhs > rhs) {
    crop_w = static_cast<int>((static_cast<long long>(raw.height()) * width + height / 2) / height);
  } else if (lhs < rhs) {
    crop_h = static_cast<int>((static_cast<long long>(raw.width()) * height + width / 2) / width);
  }
  crop_w = std::clamp(crop_w, 1, raw.width());
  crop_h = std::clamp(crop_h, 1, raw.height());

  Image window = (crop_h == raw.height() && crop_w == raw.width())
                     ? raw
                     : crop(raw, (raw.height() - crop_h) / 2, (raw.width() - crop_w) / 2, crop_h,
                            crop_w);
  Image out = resize_bilinear(window, height, width);
  clamp_unit(out);
  return out;
}

FilterResult filter_frames(const DatasetManifest& manifest,
                           const std::set<std::string>& exclusion_list) {
  FilterResult result{manifest, {}};
  std::set<std::string> matched;
  for (auto& entry : result.manifest.entries) {
    const auto id = frame_id_of(entry);
    if (exclusion_list.count(id)) {
      entry.include = false;
      matched.insert(id);
    }
  }
  for (const auto& id : exclusion_list) {
    if (!matched.count(id)) result.unknown_ids.push_back(id);
  }
  return result;
}

FilterResult filter_frames(const DatasetManifest& manifest,
                           const std::function<bool(const std::string&, const Image&)>& exclude) {
  FilterResult result{manifest, {}};
  for (auto& entry : result.manifest.entries) {
    if (!entry.include) continue;
    const auto path = manifest.base_dir / entry.relative_path;
    if (exclude(frame_id_of(entry), normalize_frame(read_image(path)))) entry.include = false;
  }
  return result;
}

FrameStream::FrameStream(DatasetManifest manifest, int height, int width)
    : manifest_(std::move(manifest)), height_(height), width_(width) {
  for (std::size_t i = 0; i < manifest_.entries.size(); ++i) {
    if (!manifest_.entries[i].include) continue;
    included_.push_back(i);
    ids_.push_back(frame_id_of(manifest_.entries[i]));
  }
}

FrameRecord FrameStream::load(std::size_t i) const {
  const std::size_t entry_index = included_.at(i);
  const auto& entry = manifest_.entries[entry_index];
  const auto path = std::filesystem::absolute(manifest_.base_dir / entry.relative_path);
  FrameRecord record;
  record.frame_id = ids_[i];
  record.source_id = manifest_.dataset_id;
  record.steering_degrees = entry.steering_degrees;
  record.sequence_index = entry_index;
  record.source_path = path;
  if (!std::filesystem::exists(path)) {
    throw IngestionError("frame '" + record.frame_id + "': missing file " + path.string());
  }
  try {
    record.image = normalize_frame(read_image(path), height_, width_);
  } catch (const DataError& e) {
    throw IngestionError("frame '" + record.frame_id + "' (" + path.string() + "): " + e.what());
  }
  return record;
}

std::vector<FrameRecord> load_stream(const DatasetManifest& manifest) {
  for (const auto& entry : manifest.entries) {
    if (!entry.include) continue;
    const auto path = manifest.base_dir / entry.relative_path;
    if (!std::filesystem::exists(path)) {
      throw IngestionError("frame '" + frame_id_of(entry) + "': missing file " + path.string());
    }
  }
  FrameStream stream(manifest);
  std::vector<FrameRecord> records;
  records.reserve(stream.size());
  for (auto record : stream) records.push_back(std::move(record));
  return records;
}

}  // namespace drivemt
