// Copyright 2026 The EMR4D Authors
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

// 8-bit PNG and binary PPM/PGM reading and writing.

#pragma once

#include <string>

#include "emr4d/lf_core.hpp"

namespace emr4d {

/// Reads PNG (any bit depth and colour type, alpha dropped) or binary
/// PPM/PGM, chosen by the file's magic bytes. Gray input is expanded to RGB.
RgbImage read_image(const std::string& path);
/// PNG unless the extension is .ppm.
void write_image(const std::string& path, const RgbImage& img);
/// PNG unless the extension is .pgm.
void write_image(const std::string& path, const Plane& gray);

RgbImage read_png(const std::string& path);
void write_png(const std::string& path, const RgbImage& img);
void write_png(const std::string& path, const Plane& gray);

RgbImage read_pnm(const std::string& path);
void write_ppm(const std::string& path, const RgbImage& img);
void write_pgm(const std::string& path, const Plane& gray);

}  // namespace emr4d
