// Copyright 2026 The tvis Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tvis/common.h"

#include <charconv>
#include <iostream>
#include <mutex>

namespace tvis {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](const std::string& msg) {
    std::cerr << "warning: " << msg << "\n";
  };
  return s;
}

int parse_positive(std::string_view part, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(),
                                   value);
  if (ec != std::errc() || ptr != part.data() + part.size() || value < 2) {
    throw InputError("invalid patch dimensions '" + std::string(whole) +
                     "' (expected e.g. 25x71x71, each >= 2)");
  }
  return value;
}

}  // namespace

PatchDims parse_patch_dims(std::string_view text) {
  const size_t first = text.find('x');
  const size_t second =
      first == std::string_view::npos ? first : text.find('x', first + 1);
  if (second == std::string_view::npos) {
    throw InputError("invalid patch dimensions '" + std::string(text) +
                     "' (expected e.g. 25x71x71)");
  }
  PatchDims d;
  d.t = parse_positive(text.substr(0, first), text);
  d.h = parse_positive(text.substr(first + 1, second - first - 1), text);
  d.v = parse_positive(text.substr(second + 1), text);
  return d;
}

std::string format_patch_dims(const PatchDims& dims) {
  return std::to_string(dims.t) + "x" + std::to_string(dims.h) + "x" +
         std::to_string(dims.v);
}

void set_warning_sink(WarningSink s) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  sink() = std::move(s);
}

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink()) sink()(message);
}

}  // namespace tvis
