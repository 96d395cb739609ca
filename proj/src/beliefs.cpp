#include "tortrust/beliefs.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "detail.hpp"
#include "tortrust/error.hpp"
#include "tortrust/io.hpp"

namespace tortrust {

using detail::overloaded;

namespace {

constexpr std::array<std::string_view, 5> kSymbols{"SC", "LC", "U", "LT", "ST"};
constexpr std::array<std::string_view, 5> kReservedTags{"abs", "bu1", "bu2", "ce1", "ce2"};

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

/// Byte offsets of the elements of the array stored under `key` in the
/// top-level object. `text` must already be valid JSON.
std::vector<std::size_t> element_offsets(std::string_view text, std::string_view key) {
    std::size_t i = 0;
    auto ws = [&] {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
    };
    auto skip_string = [&] {
        ++i;
        while (i < text.size() && text[i] != '"') i += text[i] == '\\' ? 2 : 1;
        ++i;
    };
    auto skip_value = [&] {
        ws();
        if (i >= text.size()) return;
        if (text[i] == '"') {
            skip_string();
            return;
        }
        if (text[i] == '[' || text[i] == '{') {
            int depth = 0;
            do {
                if (text[i] == '"') {
                    skip_string();
                    continue;
                }
                if (text[i] == '[' || text[i] == '{') ++depth;
                if (text[i] == ']' || text[i] == '}') --depth;
                ++i;
            } while (depth > 0 && i < text.size());
            return;
        }
        while (i < text.size() && text[i] != ',' && text[i] != '}' && text[i] != ']') ++i;
    };

    std::vector<std::size_t> out;
    ws();
    if (i >= text.size() || text[i] != '{') return out;
    ++i;
    for (;;) {
        ws();
        if (i >= text.size() || text[i] != '"') return out;
        const std::size_t start = i + 1;
        skip_string();
        const std::string_view name = text.substr(start, i - start - 1);
        ws();
        ++i;  // ':'
        ws();
        if (name == key && i < text.size() && text[i] == '[') {
            ++i;
            for (;;) {
                ws();
                if (i >= text.size() || text[i] == ']') return out;
                out.push_back(i);
                skip_value();
                ws();
                if (i < text.size() && text[i] == ',') ++i;
            }
        }
        skip_value();
        ws();
        if (i < text.size() && text[i] == ',') ++i;
    }
}

class TupleReader {
public:
    TupleReader(const Json& tuple, std::string_view what) : tuple_(tuple), what_(what) {
        if (!tuple.is_array() || tuple.empty()) throw SemanticError(std::string(what) + " must be a non-empty array");
    }

    const std::string& tag() const { return string(0, "tag"); }

    void arity(std::size_t lo, std::size_t hi) const {
        if (tuple_.size() < lo || tuple_.size() > hi) {
            std::string want = lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi);
            throw SemanticError("'" + tag() + "' " + std::string(what_) + " needs " + want + " fields, found " +
                                std::to_string(tuple_.size()));
        }
    }

    const std::string& string(std::size_t i, std::string_view field) const {
        const Json& v = tuple_.at(i);
        if (!v.is_string()) throw SemanticError(std::string(field) + " must be a string");
        return v.get_ref<const std::string&>();
    }

    std::string nonempty(std::size_t i, std::string_view field) const {
        const std::string& s = string(i, field);
        if (s.empty()) throw SemanticError(std::string(field) + " must not be empty");
        return s;
    }

    std::int64_t integer(std::size_t i, std::string_view field) const {
        const Json& v = tuple_.at(i);
        if (!v.is_number_integer()) throw SemanticError(std::string(field) + " must be an integer");
        return v.get<std::int64_t>();
    }

    Predicate predicate(std::size_t i) const {
        const std::string& text = string(i, "predicate");
        try {
            return parse_predicate(text);
        } catch (const ParseError& e) {
            throw SemanticError("in predicate \"" + text + "\": " + e.what());
        }
    }

    Level level(std::size_t i) const {
        const Json& v = tuple_.at(i);
        if (v.is_string()) {
            auto t = parse_trust_value(v.get_ref<const std::string&>());
            if (!t) throw SemanticError("unknown trust value '" + v.get<std::string>() + "'");
            return *t;
        }
        if (v.is_number()) return v.get<double>();
        throw SemanticError("trust level must be a trust symbol or a probability");
    }

    const Json& at(std::size_t i) const { return tuple_.at(i); }

private:
    const Json& tuple_;
    std::string_view what_;
};

Json level_to_json(const Level& l) {
    return std::visit(overloaded{[](TrustValue v) { return Json(std::string(to_string(v))); },
                                 [](double p) { return Json(p); }},
                      l);
}

void check_level(const Level& l) {
    if (const auto* p = std::get_if<double>(&l); p && !is_probability(*p))
        throw SemanticError("probability out of range [0, 1]: " + std::to_string(*p));
}

std::vector<AttributeDef> attribute_defs(const Json& j, Requirement req) {
    std::vector<AttributeDef> out;
    if (j.is_null()) return out;
    if (!j.is_object()) throw SemanticError("attribute structure must be an object or null");
    for (const auto& [name, type] : j.items()) {
        if (!type.is_string()) throw SemanticError("data type of attribute '" + name + "' must be a string");
        auto dt = parse_data_type(type.get_ref<const std::string&>());
        if (!dt) throw SemanticError("unknown data type '" + type.get<std::string>() + "'");
        out.push_back(AttributeDef{name, *dt, Label::User, req});
    }
    return out;
}

Json attribute_defs_to_json(const std::vector<AttributeDef>& defs) {
    if (defs.empty()) return nullptr;
    Json out = Json::object();
    for (const auto& d : defs) out[d.name] = std::string(to_string(d.data_type));
    return out;
}

StructuralBelief structural_from_json(const Json& j) {
    TupleReader r(j, "structural belief");
    const std::string& tag = r.tag();
    if (tag == "ut") {
        r.arity(2, 4);
        NovelType t;
        t.name = r.nonempty(1, "type name");
        if (j.size() > 2) t.required = attribute_defs(j[2], Requirement::Required);
        if (j.size() > 3) t.optional = attribute_defs(j[3], Requirement::Optional);
        std::set<std::string> seen;
        for (const auto* list : {&t.required, &t.optional})
            for (const auto& d : *list)
                if (!seen.insert(d.name).second)
                    throw SemanticError("attribute '" + d.name + "' declared twice in type " + t.name);
        return t;
    }
    if (tag == "inst") {
        // (T, D, n, P, C): the trailing P and C are accepted and ignored.
        r.arity(4, 6);
        AddInstance a;
        a.type_name = r.nonempty(1, "type name");
        if (!j[2].is_null() && !j[2].is_object()) throw SemanticError("instance data must be an object");
        try {
            a.data = attributes_from_json(j[2]);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw SemanticError(std::string("bad instance data: ") + e.what());
        }
        a.id = r.nonempty(3, "instance id");
        return a;
    }
    if (tag == "rm_inst") {
        r.arity(2, 2);
        return RemoveInstance{r.nonempty(1, "instance id")};
    }
    if (tag == "rel" || tag == "rm_rel") {
        r.arity(3, 3);
        NodeId p = r.nonempty(1, "parent id");
        NodeId c = r.nonempty(2, "child id");
        if (tag == "rel") return AddRelationship{std::move(p), std::move(c)};
        return RemoveRelationship{std::move(p), std::move(c)};
    }
    if (tag == "attr") {
        r.arity(4, 4);
        SetAttribute s;
        s.id = r.nonempty(1, "instance id");
        s.name = r.nonempty(2, "attribute name");
        s.value = attr_from_json(j[3]);
        return s;
    }
    throw SemanticError("unknown structural belief tag '" + tag + "'");
}

Json structural_to_json(const StructuralBelief& b) {
    return std::visit(
        overloaded{
            [](const NovelType& t) {
                return Json::array({"ut", t.name, attribute_defs_to_json(t.required), attribute_defs_to_json(t.optional)});
            },
            [](const AddInstance& a) { return Json::array({"inst", a.type_name, attributes_to_json(a.data), a.id}); },
            [](const RemoveInstance& r) { return Json::array({"rm_inst", r.id}); },
            [](const AddRelationship& r) { return Json::array({"rel", r.parent, r.child}); },
            [](const RemoveRelationship& r) { return Json::array({"rm_rel", r.parent, r.child}); },
            [](const SetAttribute& s) { return Json::array({"attr", s.id, s.name, attr_to_json(s.value)}); },
        },
        b);
}

TrustScale scale_from_json(const Json& j) {
    TrustScale s;
    if (j.is_null()) return s;
    if (!j.is_object()) throw SemanticError("scale must be an object");
    auto fill = [](const Json& obj, std::array<double, 5>& out, std::string_view where) {
        for (const auto& [key, value] : obj.items()) {
            if (key == "ce" && where == "scale") continue;
            auto t = parse_trust_value(key);
            if (!t) throw SemanticError("unknown trust value '" + key + "' in " + std::string(where));
            if (!value.is_number() || !is_probability(value.get<double>()))
                throw SemanticError("scale entry " + key + " must be a probability in [0, 1]");
            out[static_cast<std::size_t>(*t)] = value.get<double>();
        }
    };
    fill(j, s.mapping, "scale");
    // Unset CE entries follow the main mapping.
    s.ce_mapping = s.mapping;
    if (j.contains("ce")) {
        if (!j["ce"].is_object()) throw SemanticError("scale.ce must be an object");
        fill(j["ce"], s.ce_mapping, "scale.ce");
    }
    return s;
}

Json scale_to_json(const TrustScale& s) {
    Json out = Json::object();
    Json ce = Json::object();
    for (std::size_t i = 0; i < kSymbols.size(); ++i) {
        out[std::string(kSymbols[i])] = s.mapping[i];
        ce[std::string(kSymbols[i])] = s.ce_mapping[i];
    }
    out["ce"] = std::move(ce);
    return out;
}

[[noreturn]] void rethrow_at(std::string_view text, const std::vector<std::size_t>& offsets, std::size_t index,
                             std::string_view section, const std::exception& e) {
    std::string message = std::string(section) + "[" + std::to_string(index) + "]: " + e.what();
    if (index < offsets.size()) {
        auto [line, col] = line_column(text, offsets[index]);
        throw ParseError(message, line, col);
    }
    throw ParseError(message);
}

BeliefDocument document_from_json(const Json& j, std::string_view text) {
    if (!j.is_object()) throw ParseError("belief document must be a JSON object", 1, 1);
    for (const auto& [key, value] : j.items())
        if (key != "scale" && key != "structural" && key != "trust")
            throw ParseError("unknown top-level key '" + key + "'");

    BeliefDocument doc;
    try {
        doc.scale = scale_from_json(j.value("scale", Json()));
    } catch (const SemanticError& e) {
        throw ParseError(e.what());
    }

    auto section = [&](const char* name, auto&& each) {
        if (!j.contains(name)) return;
        const Json& list = j[name];
        if (!list.is_array()) throw ParseError(std::string(name) + " must be an array");
        const auto offsets = text.empty() ? std::vector<std::size_t>{} : element_offsets(text, name);
        for (std::size_t i = 0; i < list.size(); ++i) {
            try {
                each(list[i]);
            } catch (const ParseError&) {
                throw;
            } catch (const Error& e) {
                rethrow_at(text, offsets, i, name, e);
            } catch (const nlohmann::json::exception& e) {
                rethrow_at(text, offsets, i, name, e);
            }
        }
    };

    std::set<std::string> novel;
    section("structural", [&](const Json& t) {
        StructuralBelief b = structural_from_json(t);
        if (const auto* nt = std::get_if<NovelType>(&b); nt && !novel.insert(nt->name).second)
            throw SemanticError("novel type '" + nt->name + "' declared twice");
        doc.structural.push_back(std::move(b));
    });
    section("trust", [&](const Json& t) { doc.trust.push_back(trust_belief_from_json(t)); });
    return doc;
}

}  // namespace

std::string_view to_string(TrustValue v) { return kSymbols[static_cast<std::size_t>(v)]; }

std::optional<TrustValue> parse_trust_value(std::string_view s) {
    for (std::size_t i = 0; i < kSymbols.size(); ++i)
        if (kSymbols[i] == s) return static_cast<TrustValue>(i);
    return std::nullopt;
}

double resolve(const Level& level, const TrustScale& scale) {
    return std::visit(overloaded{[&](TrustValue v) { return scale.p(v); }, [](double p) { return p; }}, level);
}

double resolve_ce(const Level& level, const TrustScale& scale) {
    return std::visit(overloaded{[&](TrustValue v) { return scale.ce(v); }, [](double p) { return p; }}, level);
}

void validate_trust_belief(const TrustBelief& b) {
    std::visit(overloaded{
                   [](const RelativeBelief& r) {
                       if (r.tag.empty()) throw SemanticError("relative belief tag must not be empty");
                       if (std::find(kReservedTags.begin(), kReservedTags.end(), r.tag) != kReservedTags.end())
                           throw SemanticError("tag '" + r.tag + "' is reserved and cannot name a relative belief");
                       check_level(r.value);
                   },
                   [](const AbsoluteBelief& a) { check_level(a.value); },
                   [](const TypeBudget& t) {
                       if (t.instance.empty()) throw SemanticError("budget instance must not be empty");
                       if (t.type_name.empty()) throw SemanticError("budget type must not be empty");
                   },
                   [](const AllBudget& t) {
                       if (t.instance.empty()) throw SemanticError("budget instance must not be empty");
                   },
                   [](const PredicateCe& c) {
                       if (c.instance.empty()) throw SemanticError("CE instance must not be empty");
                       check_level(c.value);
                   },
                   [](const TopCe& c) {
                       if (c.instance.empty()) throw SemanticError("CE instance must not be empty");
                       check_level(c.value);
                   },
               },
               b);
}

TrustBelief trust_belief_from_json(const Json& j) {
    TupleReader r(j, "trust belief");
    const std::string& tag = r.tag();
    TrustBelief out;
    if (tag == "abs") {
        r.arity(3, 3);
        out = AbsoluteBelief{r.predicate(1), r.level(2)};
    } else if (tag == "bu1") {
        r.arity(4, 4);
        out = TypeBudget{r.string(1, "instance id"), r.string(2, "type name"), r.integer(3, "budget")};
    } else if (tag == "bu2") {
        r.arity(4, 4);
        if (r.string(2, "budget scope") != "all") throw SemanticError("bu2 scope must be \"all\"");
        out = AllBudget{r.string(1, "instance id"), r.integer(3, "budget")};
    } else if (tag == "ce1") {
        r.arity(4, 4);
        out = PredicateCe{r.string(1, "instance id"), r.predicate(2), r.level(3)};
    } else if (tag == "ce2") {
        r.arity(4, 4);
        const std::string& scope = r.string(2, "CE scope");
        if (scope != "top" && scope != "\xE2\x8A\xA4") throw SemanticError("ce2 scope must be \"top\"");
        out = TopCe{r.string(1, "instance id"), r.level(3)};
    } else {
        r.arity(3, 3);
        out = RelativeBelief{tag, r.predicate(1), r.level(2)};
    }
    validate_trust_belief(out);
    return out;
}

Json to_json(const TrustBelief& b) {
    return std::visit(
        overloaded{
            [](const RelativeBelief& r) { return Json::array({r.tag, to_string(r.predicate), level_to_json(r.value)}); },
            [](const AbsoluteBelief& a) { return Json::array({"abs", to_string(a.predicate), level_to_json(a.value)}); },
            [](const TypeBudget& t) { return Json::array({"bu1", t.instance, t.type_name, t.k}); },
            [](const AllBudget& t) { return Json::array({"bu2", t.instance, "all", t.k}); },
            [](const PredicateCe& c) {
                return Json::array({"ce1", c.instance, to_string(c.predicate), level_to_json(c.value)});
            },
            [](const TopCe& c) { return Json::array({"ce2", c.instance, "top", level_to_json(c.value)}); },
        },
        b);
}

BeliefDocument parse_belief_document(std::string_view text) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
    return document_from_json(parse_json(text), text);
}

BeliefDocument belief_document_from_json(const Json& j) { return document_from_json(j, {}); }

Json to_json(const BeliefDocument& doc) {
    Json out = Json::object();
    out["scale"] = scale_to_json(doc.scale);
    Json structural = Json::array();
    for (const auto& b : doc.structural) structural.push_back(structural_to_json(b));
    Json trust = Json::array();
    for (const auto& b : doc.trust) trust.push_back(to_json(b));
    out["structural"] = std::move(structural);
    out["trust"] = std::move(trust);
    return out;
}

std::string serialize(const BeliefDocument& doc) {
    // One tuple per line keeps error positions meaningful.
    const Json j = to_json(doc);
    std::string out = "{\n\t\"scale\": " + j["scale"].dump() + ",\n";
    auto list = [&](const char* name, bool last) {
        const Json& items = j[name];
        out += "\t\"" + std::string(name) + "\": [";
        for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ",\n\t\t" : "\n\t\t") + items[i].dump();
        out += items.empty() ? "]" : "\n\t]";
        out += last ? "\n" : ",\n";
    };
    list("structural", false);
    list("trust", true);
    return out + "}\n";
}

double the_man_family_probability(double uptime, double p_fam_max, double p_fam_min) {
    if (!is_probability(uptime)) throw SemanticError("uptime must be in [0, 1]");
    if (!is_probability(p_fam_max) || !is_probability(p_fam_min) || p_fam_min > p_fam_max)
        throw SemanticError("family probabilities must satisfy 0 <= min <= max <= 1");
    return p_fam_max - (p_fam_max - p_fam_min) * uptime;
}

BeliefDocument build_the_man(const World& w, double p_org, double p_fam_max, double p_fam_min) {
    if (!is_probability(p_org)) throw SemanticError("p_org must be in [0, 1]");
    BeliefDocument doc;
    for (const auto& inst : w.instances()) {
        if (inst.type_name != types::RelayFamily) continue;
        auto it = inst.attributes.find(std::string(attrs::Uptime));
        if (it == inst.attributes.end()) throw SemanticError("relay family " + inst.id + " has no uptime attribute");
        double u = 0.0;
        if (const auto* d = std::get_if<double>(&it->second)) u = *d;
        else if (const auto* i = std::get_if<std::int64_t>(&it->second)) u = static_cast<double>(*i);
        else throw SemanticError("uptime of relay family " + inst.id + " is not a number");
        if (!is_probability(u)) throw SemanticError("uptime of relay family " + inst.id + " is outside [0, 1]");
        doc.trust.push_back(AbsoluteBelief{Predicate(pred::IdIn{{inst.id}}),
                                           the_man_family_probability(u, p_fam_max, p_fam_min)});
    }
    doc.trust.push_back(AbsoluteBelief{Predicate(pred::TypeTest{std::string(types::AsOrganization)}), p_org});
    doc.trust.push_back(AbsoluteBelief{Predicate(pred::TypeTest{std::string(types::IxpOrganization)}), p_org});
    return doc;
}

}  // namespace tortrust
