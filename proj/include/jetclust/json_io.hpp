// Copyright 2026 The jetclust Authors.
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

#include <string>

#include "json.hpp"

namespace jetclust {

// Compact JSON with every floating-point value printed using 17
// significant digits, so doubles survive a text round trip bit-exactly.
std::string dump_json(const nlohmann::json& j);

// "%.17g" formatting used for CSV output.
std::string format_double(double v);

}  // namespace jetclust
