// Copyright 2026 The fpbits Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "fpbits/binary_io.hpp"
#include "fpbits/synth.hpp"
#include "fpbits/template_io.hpp"

namespace fpbits {

// A dataset directory holds <subject>_<impression>.fpt minutia templates,
// each with a same-named .pgm image.

inline void save_dataset(const std::filesystem::path& dir, std::span<const Sample> samples) {
  std::filesystem::create_directories(dir);
  for (const Sample& s : samples) {
    const std::string stem = s.minutiae.subject_id + "_" + s.minutiae.impression_id;
    write_file_atomic(dir / (stem + ".fpt"), serialize_text_template(s.minutiae));
    write_file_atomic(dir / (stem + ".pgm"), write_pgm(s.image));
  }
}

inline Sample load_sample(const std::filesystem::path& fpt) {
  const auto text = read_file(fpt);
  Sample s;
  s.minutiae = parse_text_template(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
  const std::string stem = fpt.stem().string();
  const auto cut = stem.rfind('_');
  if (cut == std::string::npos || cut == 0 || cut + 1 == stem.size()) {
    throw Error(ErrorCode::IoError, "template name must be <subject>_<impression>.fpt: " + fpt.string());
  }
  s.minutiae.subject_id = stem.substr(0, cut);
  s.minutiae.impression_id = stem.substr(cut + 1);
  auto pgm = fpt;
  pgm.replace_extension(".pgm");
  s.image = read_pgm(read_file(pgm));
  return s;
}

/// All templates in dir, sorted by file name.
inline std::vector<Sample> load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".fpt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Sample> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_sample(f));
  return out;
}

}  // namespace fpbits
