#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

namespace tortrust {

using Json = nlohmann::json;

enum class DataType {
    String,
    Integer,
    Real,
    CoordinatePair,
    StringSet,
    PredicateText,
    BudgetSpec,
    CeSpec,
};

std::string_view to_string(DataType t);
std::optional<DataType> parse_data_type(std::string_view s);

struct Coordinate {
    double lat = 0.0;
    double lon = 0.0;
    bool operator==(const Coordinate&) const = default;
};

using StringSet = std::set<std::string>;

/// Attribute value as stored on instances and relationships. Predicate text,
/// budget specs and CE specs are carried as strings.
using AttrValue = std::variant<std::string, std::int64_t, double, Coordinate, StringSet>;
using AttributeMap = std::map<std::string, AttrValue>;

/// True if `value` is a valid representation of `type`. Integers are accepted
/// where reals are declared.
bool conforms(const AttrValue& value, DataType type);

std::string_view value_kind(const AttrValue& value);
std::string describe(const AttrValue& value);

Json attr_to_json(const AttrValue& value);
/// JSON strings, integers, floats, {"lat","lon"} objects and string arrays.
AttrValue attr_from_json(const Json& j);

Json attributes_to_json(const AttributeMap& attrs);
AttributeMap attributes_from_json(const Json& j);

}  // namespace tortrust
