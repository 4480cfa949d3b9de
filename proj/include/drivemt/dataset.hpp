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

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "drivemt/image.hpp"

namespace drivemt {

inline constexpr int kFrameHeight = 240;
inline constexpr int kFrameWidth = 320;
inline constexpr int kFrameChannels = 3;

enum class Domain { S1, S2 };

// One of the two visual domains of a translation job, with a readable alias
// such as "fine" or "snowy".
struct DomainTag {
  Domain value = Domain::S1;
  std::string alias;

  friend bool operator==(const DomainTag&, const DomainTag&) = default;
};

std::string to_string(Domain domain);
Domain parse_domain(const std::string& text);
inline int index_of(Domain d) { return d == Domain::S1 ? 0 : 1; }
inline Domain other(Domain d) { return d == Domain::S1 ? Domain::S2 : Domain::S1; }

struct FrameRecord {
  std::string frame_id;
  std::string source_id;
  Image image;
  std::optional<double> steering_degrees;
  std::size_t sequence_index = 0;
  // Absolute file the image was decoded from; empty once the pixels have been
  // transformed in memory.
  std::filesystem::path source_path;
};

struct ManifestEntry {
  std::filesystem::path relative_path;
  std::optional<double> steering_degrees;
  bool include = true;
};

// Line-oriented frame list. Entry order is sequence order; frame ids are the
// file stems of the relative paths.
struct DatasetManifest {
  std::string dataset_id;
  DomainTag domain;
  std::string provenance;
  // Directory relative paths are resolved against (the manifest's directory
  // when read from disk).
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;

  std::size_t included_count() const;
  std::vector<std::string> frame_ids() const;
};

std::string frame_id_of(const ManifestEntry& entry);

// Throws FormatError on malformed lines or duplicate frame ids.
DatasetManifest read_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
void write_manifest(std::ostream& out, const DatasetManifest& manifest);

// Ids one per line; blank lines and lines starting with '#' are skipped.
std::set<std::string> read_exclusion_list(const std::filesystem::path& path);

// Number of frames kept by a stride: frame 0 and every stride-th after it.
std::size_t kept_frame_count(std::size_t total_frames, std::size_t stride);

// Smallest stride keeping at most `budget` frames, ceil(total / budget).
std::size_t stride_for_budget(std::size_t total_frames, std::size_t budget);

// Decodes a video and keeps frames 0, stride, 2*stride, ... Throws
// IngestionError when the file cannot be opened and EmptyInputError when it
// holds no decodable frame.
std::vector<Image> extract_frames(const std::filesystem::path& video_path, std::size_t stride);

// Streaming form of extract_frames for long videos; `sink` receives the
// source frame index of each kept frame. Returns the number kept.
std::size_t extract_frames(const std::filesystem::path& video_path, std::size_t stride,
                           const std::function<void(std::size_t, const Image&)>& sink);

// Centre-crops to the 3:4 target aspect ratio, bilinearly resizes to
// height x width and clamps to [0, 1]. Non-3-channel input is a FormatError.
Image normalize_frame(const Image& raw, int height = kFrameHeight, int width = kFrameWidth);

struct FilterResult {
  DatasetManifest manifest;
  // Excluded ids that matched no entry.
  std::vector<std::string> unknown_ids;
};

FilterResult filter_frames(const DatasetManifest& manifest,
                           const std::set<std::string>& exclusion_list);

// Predicate form of filtering: entries for which `exclude(frame_id, image)`
// returns true are marked excluded. Images are decoded and normalized first.
FilterResult filter_frames(const DatasetManifest& manifest,
                           const std::function<bool(const std::string&, const Image&)>& exclude);

// Lazily decoded, normalized view over the included entries of a manifest.
class FrameStream {
 public:
  explicit FrameStream(DatasetManifest manifest, int height = kFrameHeight,
                       int width = kFrameWidth);

  std::size_t size() const { return included_.size(); }
  const DatasetManifest& manifest() const { return manifest_; }

  // Decodes the i-th included frame. Throws IngestionError naming the frame
  // id and path when the file is missing or unreadable.
  FrameRecord load(std::size_t i) const;
  const std::string& frame_id(std::size_t i) const { return ids_[i]; }

  class iterator {
   public:
    using value_type = FrameRecord;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(const FrameStream* stream, std::size_t i) : stream_(stream), i_(i) {}
    FrameRecord operator*() const { return stream_->load(i_); }
    iterator& operator++() {
      ++i_;
      return *this;
    }
    iterator operator++(int) {
      auto copy = *this;
      ++i_;
      return copy;
    }
    bool operator==(const iterator& other) const { return i_ == other.i_; }

   private:
    const FrameStream* stream_ = nullptr;
    std::size_t i_ = 0;
  };

  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, included_.size()}; }

 private:
  DatasetManifest manifest_;
  int height_;
  int width_;
  std::vector<std::size_t> included_;
  std::vector<std::string> ids_;
};

// Checks that every included path exists, then decodes all included frames in
// manifest order.
std::vector<FrameRecord> load_stream(const DatasetManifest& manifest);

}  // namespace drivemt
