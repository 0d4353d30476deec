#include "rvc/concept_io.hpp"

#include <json.hpp>

#include "rvc/error.hpp"
#include "rvc/image_io.hpp"

namespace rvc {

std::string concept_to_json(const LSystem& l) {
  nlohmann::ordered_json j;
  j["axiom"] = l.axiom.str();
  j["angle_deg"] = l.angle_deg;
  j["f_rule"] = l.f_rule.str();
  j["g_rule"] = l.g_rule.str();
  return j.dump();
}

LSystem concept_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("concept: ") + e.what());
  }
  if (!j.is_object() || !j.contains("f_rule") || !j.contains("angle_deg")) {
    throw ParseError("concept needs at least f_rule and angle_deg");
  }
  try {
    LSystem l;
    l.axiom = SymbolString(j.value("axiom", std::string("F")));
    l.angle_deg = j.at("angle_deg").get<double>();
    l.f_rule = SymbolString(j.at("f_rule").get<std::string>());
    l.g_rule = SymbolString(j.value("g_rule", std::string("G")));
    return l;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("concept: ") + e.what());
  }
}

LSystem load_concept(const std::filesystem::path& path) { return concept_from_json(read_file(path)); }

void save_concept(const std::filesystem::path& path, const LSystem& l) {
  write_file(path, concept_to_json(l) + "\n");
}

}  // namespace rvc
