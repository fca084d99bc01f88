#include <algorithm>
#include <cstring>

#include "fimcraft/syntax.hpp"

namespace fimcraft {

namespace {

constexpr std::array<std::string_view, 9> kCategoryNames = {
    "random_span",   "call_expression",
    "function_definition_full", "class_definition",
    "function_parameters", "function_definition_with_prefix",
    "if_statement",  "try_catch",
    "assignment",
};

// Shipped defaults; config/taxonomy.json mirrors this table.
constexpr const char* kDefaultTaxonomy = R"json({
  "python": {
    "kinds": {
      "call": "call_expression",
      "function_definition": ["function_definition_full", "function_definition_with_prefix"],
      "class_definition": "class_definition",
      "parameters": "function_parameters",
      "if_statement": "if_statement",
      "try_statement": "try_catch",
      "assignment": "assignment",
      "augmented_assignment": "assignment"
    },
    "identifier_kinds": ["identifier"]
  },
  "javascript": {
    "kinds": {
      "call_expression": "call_expression",
      "function_declaration": ["function_definition_full", "function_definition_with_prefix"],
      "generator_function_declaration": ["function_definition_full", "function_definition_with_prefix"],
      "function_expression": ["function_definition_full", "function_definition_with_prefix"],
      "method_definition": ["function_definition_full", "function_definition_with_prefix"],
      "arrow_function": ["function_definition_full", "function_definition_with_prefix"],
      "class_declaration": "class_definition",
      "class": "class_definition",
      "formal_parameters": "function_parameters",
      "if_statement": "if_statement",
      "try_statement": "try_catch",
      "assignment_expression": "assignment",
      "augmented_assignment_expression": "assignment",
      "variable_declarator[value]": "assignment"
    },
    "identifier_kinds": ["identifier", "property_identifier", "shorthand_property_identifier",
                         "shorthand_property_identifier_pattern", "private_property_identifier"]
  },
  "typescript": {
    "kinds": {
      "call_expression": "call_expression",
      "function_declaration": ["function_definition_full", "function_definition_with_prefix"],
      "generator_function_declaration": ["function_definition_full", "function_definition_with_prefix"],
      "function_expression": ["function_definition_full", "function_definition_with_prefix"],
      "method_definition": ["function_definition_full", "function_definition_with_prefix"],
      "arrow_function": ["function_definition_full", "function_definition_with_prefix"],
      "class_declaration": "class_definition",
      "abstract_class_declaration": "class_definition",
      "class": "class_definition",
      "formal_parameters": "function_parameters",
      "if_statement": "if_statement",
      "try_statement": "try_catch",
      "assignment_expression": "assignment",
      "augmented_assignment_expression": "assignment",
      "variable_declarator[value]": "assignment"
    },
    "identifier_kinds": ["identifier", "property_identifier", "shorthand_property_identifier",
                         "shorthand_property_identifier_pattern", "private_property_identifier",
                         "type_identifier"]
  },
  "tsx": {
    "kinds": {
      "call_expression": "call_expression",
      "function_declaration": ["function_definition_full", "function_definition_with_prefix"],
      "generator_function_declaration": ["function_definition_full", "function_definition_with_prefix"],
      "function_expression": ["function_definition_full", "function_definition_with_prefix"],
      "method_definition": ["function_definition_full", "function_definition_with_prefix"],
      "arrow_function": ["function_definition_full", "function_definition_with_prefix"],
      "class_declaration": "class_definition",
      "abstract_class_declaration": "class_definition",
      "class": "class_definition",
      "formal_parameters": "function_parameters",
      "if_statement": "if_statement",
      "try_statement": "try_catch",
      "assignment_expression": "assignment",
      "augmented_assignment_expression": "assignment",
      "variable_declarator[value]": "assignment"
    },
    "identifier_kinds": ["identifier", "property_identifier", "shorthand_property_identifier",
                         "shorthand_property_identifier_pattern", "private_property_identifier",
                         "type_identifier"]
  }
})json";

CurriculumCategory parse_category(const nlohmann::json& value)
{
    auto name = value.get<std::string>();
    auto category = category_from_string(name);
    if (!category) {
        throw Error(ErrorCode::invalid_config, "unknown curriculum category: " + name);
    }
    if (*category == CurriculumCategory::random_span) {
        throw Error(ErrorCode::invalid_config, "random_span cannot be mapped from a grammar kind");
    }
    return *category;
}

}  // namespace

std::string_view to_string(CurriculumCategory category)
{
    return kCategoryNames[static_cast<std::size_t>(category)];
}

std::optional<CurriculumCategory> category_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
        if (kCategoryNames[i] == name) return static_cast<CurriculumCategory>(i);
    }
    return std::nullopt;
}

std::vector<CurriculumCategory> LanguageTaxonomy::categories_of(TSNode node) const
{
    const char* kind = ts_node_type(node);
    for (const auto& rule : rules) {
        if (rule.kind != kind) continue;
        if (!rule.required_field.empty()) {
            TSNode field = ts_node_child_by_field_name(node, rule.required_field.data(),
                                                       static_cast<uint32_t>(rule.required_field.size()));
            if (ts_node_is_null(field)) continue;
        }
        return rule.categories;
    }
    return {};
}

bool LanguageTaxonomy::is_identifier(TSNode node) const
{
    return ts_node_child_count(node) == 0 && identifier_kinds.contains(ts_node_type(node));
}

Taxonomy Taxonomy::defaults()
{
    static const Taxonomy shipped = from_json(nlohmann::json::parse(kDefaultTaxonomy));
    return shipped;
}

Taxonomy Taxonomy::from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::invalid_config, "taxonomy must be an object keyed by language");
    }
    Taxonomy taxonomy;
    for (const auto& [language, body] : j.items()) {
        LanguageTaxonomy lt;
        for (const auto& [key, value] : body.items()) {
            if (key == "kinds") {
                for (const auto& [kind_key, target] : value.items()) {
                    KindRule rule;
                    auto bracket = kind_key.find('[');
                    if (bracket != std::string::npos) {
                        if (kind_key.back() != ']') {
                            throw Error(ErrorCode::invalid_config, "malformed kind key: " + kind_key);
                        }
                        rule.kind = kind_key.substr(0, bracket);
                        rule.required_field = kind_key.substr(bracket + 1, kind_key.size() - bracket - 2);
                    } else {
                        rule.kind = kind_key;
                    }
                    if (target.is_array()) {
                        for (const auto& c : target) rule.categories.push_back(parse_category(c));
                    } else {
                        rule.categories.push_back(parse_category(target));
                    }
                    if (rule.categories.empty()) {
                        throw Error(ErrorCode::invalid_config, "kind maps to no category: " + kind_key);
                    }
                    lt.rules.push_back(std::move(rule));
                }
            } else if (key == "identifier_kinds") {
                for (const auto& k : value) lt.identifier_kinds.insert(k.get<std::string>());
            } else {
                throw Error(ErrorCode::invalid_config, "unknown taxonomy key: " + key);
            }
        }
        // Conditional rules are checked before unconditional ones for the same kind.
        std::stable_sort(lt.rules.begin(), lt.rules.end(), [](const KindRule& a, const KindRule& b) {
            return !a.required_field.empty() && b.required_field.empty();
        });
        taxonomy.languages_.emplace(language, std::move(lt));
    }
    return taxonomy;
}

nlohmann::json Taxonomy::to_json() const
{
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [language, lt] : languages_) {
        nlohmann::json kinds = nlohmann::json::object();
        for (const auto& rule : lt.rules) {
            auto key = rule.required_field.empty() ? rule.kind : rule.kind + "[" + rule.required_field + "]";
            if (rule.categories.size() == 1) {
                kinds[key] = std::string(to_string(rule.categories.front()));
            } else {
                nlohmann::json list = nlohmann::json::array();
                for (auto c : rule.categories) list.push_back(std::string(to_string(c)));
                kinds[key] = list;
            }
        }
        out[language] = {{"kinds", kinds}, {"identifier_kinds", lt.identifier_kinds}};
    }
    return out;
}

const LanguageTaxonomy* Taxonomy::find(std::string_view language) const
{
    auto it = languages_.find(language);
    return it == languages_.end() ? nullptr : &it->second;
}

}  // namespace fimcraft
