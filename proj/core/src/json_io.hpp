// Copyright 2026 The rpres Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "rpres/error.hpp"
#include "rpres/partition.hpp"

namespace rpres::detail {

using json = nlohmann::ordered_json;

inline json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("invalid JSON: ") + e.what());
    }
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": invalid JSON: " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

inline json partition_json(const GridPartition& p) {
    return json{{"dim", p.dim()}, {"lows", p.lows()}, {"highs", p.highs()}, {"cells", p.cells()}};
}

inline GridPartition partition_from(const json& j) {
    try {
        GridPartition p(j.at("lows").get<std::vector<double>>(),
                        j.at("highs").get<std::vector<double>>(),
                        j.at("cells").get<std::vector<std::size_t>>());
        if (j.contains("dim") && j.at("dim").get<std::size_t>() != p.dim()) {
            throw ArgumentError("partition JSON: dim disagrees with lows/highs/cells");
        }
        return p;
    } catch (const json::exception& e) {
        throw IoError(std::string("partition JSON: ") + e.what());
    }
}

}  // namespace rpres::detail
