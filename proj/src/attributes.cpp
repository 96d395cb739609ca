#include "tortrust/attributes.hpp"

#include <array>
#include <sstream>
#include <utility>

#include "detail.hpp"
#include "tortrust/error.hpp"

namespace tortrust {

namespace {

constexpr std::array<std::pair<DataType, std::string_view>, 8> kDataTypeNames{{
    {DataType::String, "string"},
    {DataType::Integer, "integer"},
    {DataType::Real, "real"},
    {DataType::CoordinatePair, "coordinate-pair"},
    {DataType::StringSet, "string-set"},
    {DataType::PredicateText, "predicate-text"},
    {DataType::BudgetSpec, "budget-spec"},
    {DataType::CeSpec, "ce-spec"},
}};


}  // namespace

std::string_view to_string(DataType t) {
    for (const auto& [type, name] : kDataTypeNames)
        if (type == t) return name;
    return "string";
}

std::optional<DataType> parse_data_type(std::string_view s) {
    for (const auto& [type, name] : kDataTypeNames)
        if (name == s) return type;
    return std::nullopt;
}

bool conforms(const AttrValue& value, DataType type) {
    switch (type) {
        case DataType::String:
        case DataType::PredicateText:
        case DataType::BudgetSpec:
        case DataType::CeSpec:
            return std::holds_alternative<std::string>(value);
        case DataType::Integer:
            return std::holds_alternative<std::int64_t>(value);
        case DataType::Real:
            return std::holds_alternative<double>(value) || std::holds_alternative<std::int64_t>(value);
        case DataType::CoordinatePair:
            return std::holds_alternative<Coordinate>(value);
        case DataType::StringSet:
            return std::holds_alternative<StringSet>(value);
    }
    return false;
}

std::string_view value_kind(const AttrValue& value) {
    return std::visit(detail::overloaded{
                          [](const std::string&) { return std::string_view("string"); },
                          [](std::int64_t) { return std::string_view("integer"); },
                          [](double) { return std::string_view("real"); },
                          [](const Coordinate&) { return std::string_view("coordinate-pair"); },
                          [](const StringSet&) { return std::string_view("string-set"); },
                      },
                      value);
}

std::string describe(const AttrValue& value) { return attr_to_json(value).dump(); }

Json attr_to_json(const AttrValue& value) {
    return std::visit(detail::overloaded{
                          [](const std::string& s) { return Json(s); },
                          [](std::int64_t i) { return Json(i); },
                          [](double d) { return Json(d); },
                          [](const Coordinate& c) { return Json{{"lat", c.lat}, {"lon", c.lon}}; },
                          [](const StringSet& s) {
                              Json a = Json::array();
                              for (const auto& e : s) a.push_back(e);
                              return a;
                          },
                      },
                      value);
}

AttrValue attr_from_json(const Json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_object() && j.size() == 2 && j.contains("lat") && j.contains("lon") && j["lat"].is_number() &&
        j["lon"].is_number())
        return Coordinate{j["lat"].get<double>(), j["lon"].get<double>()};
    if (j.is_array()) {
        StringSet s;
        for (const auto& e : j) {
            if (!e.is_string()) throw ParseError("string-set elements must be strings: " + j.dump());
            s.insert(e.get<std::string>());
        }
        return s;
    }
    throw ParseError("unsupported attribute value: " + j.dump());
}

Json attributes_to_json(const AttributeMap& attrs) {
    Json o = Json::object();
    for (const auto& [k, v] : attrs) o[k] = attr_to_json(v);
    return o;
}

AttributeMap attributes_from_json(const Json& j) {
    AttributeMap m;
    if (j.is_null()) return m;
    if (!j.is_object()) throw ParseError("attributes must be an object");
    for (const auto& [k, v] : j.items()) m.emplace(k, attr_from_json(v));
    return m;
}

}  // namespace tortrust
