#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rvc/lsystem.hpp"

namespace rvc {

/// Concept files are JSON objects:
///
///     {"axiom": "F", "angle_deg": 60, "f_rule": "G-G+F+G-G", "g_rule": "G"}
///
/// Missing axiom and g_rule default to "F" and "G".
std::string concept_to_json(const LSystem& l);
/// Throws ParseError.
LSystem concept_from_json(std::string_view text);

LSystem load_concept(const std::filesystem::path& path);
void save_concept(const std::filesystem::path& path, const LSystem& l);

}  // namespace rvc
