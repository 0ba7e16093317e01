#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsens/hypergraph.hpp"
#include "tsens/relation.hpp"

namespace tsens {

/** One relation of a dataset manifest: where its CSV lives and, when the
 *  multiplicity column is not the conventional "__cnt", its name. */
struct ManifestEntry {
    std::string name;
    std::filesystem::path path;
    std::optional<std::string> cnt_column;
};

struct Manifest {
    std::vector<ManifestEntry> relations;
};

/** Whole file as a string; DataError with the path on failure. */
std::string read_text_file(const std::filesystem::path& path);

/** Parses `{"relations": [{"name": ..., "path": ..., "cnt": ...?}, ...]}`.
 *  Relative paths resolve against `base_dir` (normally the manifest's own
 *  directory). */
Manifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir);

/** Loads every manifest relation into one database. */
Database load_database(const Manifest& manifest);

/** Parses one relation from CSV. The header row names the attributes; a
 *  column named by `cnt_column` (or "__cnt" when unset) holds tuple
 *  multiplicities, which must be positive integers. Rows without a count
 *  column count once; duplicate rows merge by summing. Quoted fields
 *  follow the usual CSV rules ("" escapes a quote; separators and
 *  newlines are allowed inside quotes). */
Relation read_csv(const std::string& text, const std::string& name,
                  const std::optional<std::string>& cnt_column, ValueDict& dict);

/** The relation as CSV with a trailing "__cnt" column, rows in canonical
 *  order. */
std::string write_csv(const Relation& relation, const ValueDict& dict);

/** Writes every relation as `<name>.csv` plus a `manifest.json` into
 *  `dir` (created if needed). */
void export_database(const Database& db, const std::filesystem::path& dir);

/** Parses a decomposition file: a JSON list of nodes
 *  `{"atoms": ["R1", ...], "parent": index-or-null}`. */
std::vector<GhdNodeSpec> parse_ghd(const std::string& json_text);

}  // namespace tsens
