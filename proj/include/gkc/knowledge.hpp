#pragma once

// Fixture-backed annotation stores: gene annotations, drug annotations, the
// HGNC alias table, and the drug class map. All four files are JSONL with
// explicit field names; strict mode rejects unknown fields and enforces the
// registry cardinalities (271 genes, 64 drugs, 27 classes).

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gkc/common.hpp"

namespace gkc {

struct DrugAnnotation {
    std::string drug_id;
    std::string name;
    std::string category;  // anti_cancer | supportive
    std::string description;
    std::string mechanism_of_action;
    std::string indication;
    std::string pharmacodynamics;
    std::string toxicity;
};

struct GeneAnnotation {
    std::string hgnc_symbol;
    std::string function_summary;
    std::vector<std::string> kegg_pathways;
    std::vector<std::string> go_biological_processes;
    std::vector<std::string> go_molecular_functions;
};

struct AliasTable {
    // alias (uppercased) -> canonical symbol; contains identity rows for
    // every canonical symbol.
    std::map<std::string, std::string> map;

    /// Case-insensitive lookup; empty optional when the alias is unknown.
    const std::string* find(const std::string& raw) const {
        auto it = map.find(to_upper(trim(raw)));
        return it == map.end() ? nullptr : &it->second;
    }
};

struct DrugClass {
    std::string class_id;
    std::string display_name;
    std::vector<std::string> drugs;
};

struct DrugClassMap {
    std::map<std::string, DrugClass> classes;        // class_id -> class
    std::map<std::string, std::string> drug_to_class;  // drug_id -> class_id
};

struct KnowledgePaths {
    std::string genes;
    std::string drugs;
    std::string aliases;
    std::string classes;

    /// All four files resolved against a fixture directory.
    static KnowledgePaths in_dir(const std::string& dir) {
        return {dir + "/genes.ann", dir + "/drugs.ann", dir + "/aliases.map",
                dir + "/classes.map"};
    }
};

struct KnowledgeBase {
    std::map<std::string, GeneAnnotation> genes;
    std::map<std::string, DrugAnnotation> drugs;
    AliasTable aliases;
    DrugClassMap classes;
    std::set<std::string> panel;

    bool in_panel(const std::string& symbol) const { return panel.count(symbol) > 0; }
};

namespace detail {

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<nlohmann::json> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": not a JSON object");
        }
        rows.push_back(std::move(j));
    }
    return rows;
}

inline void check_fields(const nlohmann::json& row, const std::set<std::string>& required,
                         const std::set<std::string>& optional, bool strict,
                         const std::string& where) {
    for (const auto& f : required) {
        if (!row.contains(f)) throw SchemaError(where + ": missing field '" + f + "'");
    }
    if (!strict) return;
    for (auto it = row.begin(); it != row.end(); ++it) {
        if (!required.count(it.key()) && !optional.count(it.key())) {
            throw SchemaError(where + ": unknown field '" + it.key() + "'");
        }
    }
}

inline std::vector<std::string> dedup_preserve_order(const std::vector<std::string>& in) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& s : in) {
        if (seen.insert(s).second) out.push_back(s);
    }
    return out;
}

}  // namespace detail

/// Loads and fully validates the four fixture files. In strict mode the
/// registry cardinalities are enforced and unknown fields rejected.
inline KnowledgeBase load_knowledge_base(const KnowledgePaths& paths, bool strict = true) {
    KnowledgeBase kb;

    for (const auto& row : detail::read_jsonl(paths.genes)) {
        detail::check_fields(row,
                             {"hgnc_symbol", "function_summary", "kegg_pathways",
                              "go_biological_processes", "go_molecular_functions"},
                             {}, strict, paths.genes);
        GeneAnnotation g;
        g.hgnc_symbol = to_upper(trim(row.at("hgnc_symbol").get<std::string>()));
        g.function_summary = row.at("function_summary").get<std::string>();
        g.kegg_pathways = detail::dedup_preserve_order(
            row.at("kegg_pathways").get<std::vector<std::string>>());
        g.go_biological_processes = detail::dedup_preserve_order(
            row.at("go_biological_processes").get<std::vector<std::string>>());
        g.go_molecular_functions = detail::dedup_preserve_order(
            row.at("go_molecular_functions").get<std::vector<std::string>>());
        if (kb.genes.count(g.hgnc_symbol)) {
            throw CardinalityError(paths.genes + ": duplicate gene " + g.hgnc_symbol);
        }
        kb.panel.insert(g.hgnc_symbol);
        kb.genes.emplace(g.hgnc_symbol, std::move(g));
    }

    for (const auto& row : detail::read_jsonl(paths.drugs)) {
        detail::check_fields(row,
                             {"drug_id", "name", "category", "description",
                              "mechanism_of_action", "indication", "pharmacodynamics",
                              "toxicity"},
                             {}, strict, paths.drugs);
        DrugAnnotation d;
        d.drug_id = row.at("drug_id").get<std::string>();
        d.name = row.at("name").get<std::string>();
        d.category = row.at("category").get<std::string>();
        d.description = row.at("description").get<std::string>();
        d.mechanism_of_action = row.at("mechanism_of_action").get<std::string>();
        d.indication = row.at("indication").get<std::string>();
        d.pharmacodynamics = row.at("pharmacodynamics").get<std::string>();
        d.toxicity = row.at("toxicity").get<std::string>();
        if (d.category != "anti_cancer" && d.category != "supportive") {
            throw SchemaError(paths.drugs + ": bad category for " + d.drug_id);
        }
        if (kb.drugs.count(d.drug_id)) {
            throw CardinalityError(paths.drugs + ": duplicate drug " + d.drug_id);
        }
        kb.drugs.emplace(d.drug_id, std::move(d));
    }

    // Identity rows first, then file aliases; conflicts are load-time errors.
    for (const auto& sym : kb.panel) kb.aliases.map.emplace(sym, sym);
    for (const auto& row : detail::read_jsonl(paths.aliases)) {
        detail::check_fields(row, {"alias", "canonical"}, {}, strict, paths.aliases);
        std::string alias = to_upper(trim(row.at("alias").get<std::string>()));
        std::string canon = to_upper(trim(row.at("canonical").get<std::string>()));
        if (!kb.panel.count(canon)) {
            throw SchemaError(paths.aliases + ": canonical '" + canon + "' not in panel");
        }
        auto [it, inserted] = kb.aliases.map.emplace(alias, canon);
        if (!inserted && it->second != canon) {
            throw AmbiguousAliasError(paths.aliases + ": alias '" + alias +
                                      "' maps to both " + it->second + " and " + canon);
        }
    }

    for (const auto& row : detail::read_jsonl(paths.classes)) {
        detail::check_fields(row, {"class_id", "display_name", "drugs"}, {}, strict,
                             paths.classes);
        DrugClass c;
        c.class_id = row.at("class_id").get<std::string>();
        c.display_name = row.at("display_name").get<std::string>();
        c.drugs = row.at("drugs").get<std::vector<std::string>>();
        if (kb.classes.classes.count(c.class_id)) {
            throw CardinalityError(paths.classes + ": duplicate class " + c.class_id);
        }
        for (const auto& id : c.drugs) {
            if (!kb.drugs.count(id)) {
                throw SchemaError(paths.classes + ": class " + c.class_id +
                                  " references unknown drug " + id);
            }
            auto [it, inserted] = kb.classes.drug_to_class.emplace(id, c.class_id);
            if (!inserted) {
                throw CardinalityError(paths.classes + ": drug " + id +
                                       " assigned to classes " + it->second + " and " +
                                       c.class_id);
            }
        }
        kb.classes.classes.emplace(c.class_id, std::move(c));
    }

    if (strict) {
        if (kb.panel.size() != 271) {
            throw CardinalityError("gene panel has " + std::to_string(kb.panel.size()) +
                                   " symbols, expected 271");
        }
        if (kb.drugs.size() != 64) {
            throw CardinalityError("drug registry has " + std::to_string(kb.drugs.size()) +
                                   " drugs, expected 64");
        }
        if (kb.classes.classes.size() != 27) {
            throw CardinalityError("class registry has " +
                                   std::to_string(kb.classes.classes.size()) +
                                   " classes, expected 27");
        }
        std::size_t anti = 0;
        for (const auto& [id, d] : kb.drugs) anti += d.category == "anti_cancer";
        if (anti != 38) {
            throw CardinalityError("expected 38 anti-cancer drugs, got " +
                                   std::to_string(anti));
        }
        // Partition: every registry drug covered by exactly one class.
        for (const auto& [id, d] : kb.drugs) {
            if (!kb.classes.drug_to_class.count(id)) {
                throw CardinalityError("drug " + id + " not assigned to any class");
            }
        }
    }
    return kb;
}

/// Normalizes a raw gene symbol to its canonical HGNC form. Exact canonical
/// match (after trim + case fold) wins; otherwise the alias table decides.
inline std::string normalize_gene_symbol(const std::string& raw, const AliasTable& aliases) {
    std::string key = to_upper(trim(raw));
    if (key.empty()) throw UnknownSymbolError("empty gene symbol");
    if (const std::string* canon = aliases.find(key)) return *canon;
    throw UnknownSymbolError("unknown gene symbol '" + raw + "'");
}

inline const std::string& resolve_drug_class(const std::string& drug_id,
                                             const DrugClassMap& classes) {
    auto it = classes.drug_to_class.find(drug_id);
    if (it == classes.drug_to_class.end()) {
        throw UnknownDrugError("unknown drug id '" + drug_id + "'");
    }
    return it->second;
}

}  // namespace gkc
