#include "tsens/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tsens {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& what) {
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) throw DataError(what + " is not valid JSON");
    return parsed;
}

/** Splits CSV text into records of fields. Handles quoted fields with ""
 *  escapes, embedded separators/newlines, and CRLF endings. */
std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                const std::string& name) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool any = false;  // the current record has content (guards a trailing newline)

    std::size_t i = 0;
    // Skip a UTF-8 byte-order mark if present.
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;

    auto end_field = [&]() {
        record.push_back(std::move(field));
        field.clear();
        any = true;
    };
    auto end_record = [&]() {
        end_field();
        records.push_back(std::move(record));
        record.clear();
        any = false;
    };

    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                any = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;  // part of CRLF; the '\n' closes the record
            case '\n':
                end_record();
                break;
            default:
                field.push_back(c);
        }
    }
    if (quoted)
        throw DataError("relation '" + name + "': unterminated quoted field in CSV");
    if (any || !field.empty() || !record.empty()) end_record();
    return records;
}

std::string csv_escape(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw DataError("error reading '" + path.string() + "'");
    return std::move(buf).str();
}

Manifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir) {
    const json doc = parse_json(json_text, "manifest");
    if (!doc.is_object() || !doc.contains("relations") || !doc["relations"].is_array())
        throw DataError("manifest must be an object with a 'relations' array");

    Manifest manifest;
    std::set<std::string> seen;
    for (const auto& entry : doc["relations"]) {
        if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string() ||
            !entry.contains("path") || !entry["path"].is_string())
            throw DataError("each manifest relation needs string 'name' and 'path' fields");
        ManifestEntry e;
        e.name = entry["name"].get<std::string>();
        if (e.name.empty()) throw DataError("manifest relation with empty name");
        if (!seen.insert(e.name).second)
            throw DataError("manifest lists relation '" + e.name + "' twice");
        std::filesystem::path p = entry["path"].get<std::string>();
        e.path = p.is_absolute() ? p : base_dir / p;
        if (entry.contains("cnt")) {
            if (!entry["cnt"].is_string())
                throw DataError("manifest 'cnt' for relation '" + e.name +
                                "' must be a column name");
            e.cnt_column = entry["cnt"].get<std::string>();
        }
        manifest.relations.push_back(std::move(e));
    }
    return manifest;
}

Database load_database(const Manifest& manifest) {
    Database db;
    for (const auto& entry : manifest.relations)
        db.add(read_csv(read_text_file(entry.path), entry.name, entry.cnt_column, db.dict()));
    return db;
}

Relation read_csv(const std::string& text, const std::string& name,
                  const std::optional<std::string>& cnt_column, ValueDict& dict) {
    const auto records = parse_csv(text, name);
    if (records.empty())
        throw DataError("relation '" + name + "': CSV has no header row");

    const auto& header = records.front();
    std::optional<std::size_t> cnt_idx;
    std::vector<std::string> attrs;
    std::vector<std::size_t> attr_cols;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const bool is_cnt = cnt_column ? header[i] == *cnt_column : header[i] == "__cnt";
        if (is_cnt) {
            if (cnt_idx)
                throw DataError("relation '" + name + "': duplicate count column '" +
                                header[i] + "'");
            cnt_idx = i;
        } else {
            attrs.push_back(header[i]);
            attr_cols.push_back(i);
        }
    }
    if (cnt_column && !cnt_idx)
        throw DataError("relation '" + name + "': count column '" + *cnt_column +
                        "' not in the CSV header");
    if (attrs.empty())
        throw DataError("relation '" + name + "': no attribute columns");
    std::set<std::string> distinct(attrs.begin(), attrs.end());
    if (distinct.size() != attrs.size())
        throw DataError("relation '" + name + "': duplicate attribute in the CSV header");

    std::vector<RawRow> raws;
    raws.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() != header.size())
            throw DataError("relation '" + name + "' row " + std::to_string(r + 1) + ": " +
                            std::to_string(rec.size()) + " fields, header has " +
                            std::to_string(header.size()));
        RawRow raw;
        raw.values.reserve(attrs.size());
        for (std::size_t c : attr_cols) raw.values.push_back(dict.intern(rec[c]));
        if (cnt_idx) {
            Count cnt;
            try {
                cnt = Count::from_decimal(rec[*cnt_idx]);
            } catch (const DataError& e) {
                throw DataError("relation '" + name + "' row " + std::to_string(r + 1) +
                                ": " + e.what());
            }
            if (cnt.is_zero())
                throw DataError("relation '" + name + "' row " + std::to_string(r + 1) +
                                ": count must be positive");
            raw.cnt = cnt;
        }
        raws.push_back(std::move(raw));
    }
    return Relation::canonicalize(name, attrs, raws);
}

std::string write_csv(const Relation& relation, const ValueDict& dict) {
    std::string out;
    for (const auto& attr : relation.schema()) {
        out += csv_escape(attr);
        out += ',';
    }
    out += "__cnt\n";
    for (const auto& [row, cnt] : relation.rows()) {
        for (ValueId id : row) {
            out += csv_escape(dict.resolve(id));
            out += ',';
        }
        out += cnt.to_string();
        out += '\n';
    }
    return out;
}

void export_database(const Database& db, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());

    json relations = json::array();
    for (const auto& name : db.names()) {
        const std::string file = name + ".csv";
        std::ofstream out(dir / file, std::ios::binary);
        if (!out) throw DataError("cannot write '" + (dir / file).string() + "'");
        out << write_csv(db.relation(name), db.dict());
        if (!out) throw DataError("error writing '" + (dir / file).string() + "'");
        relations.push_back({{"name", name}, {"path", file}, {"cnt", "__cnt"}});
    }
    json manifest{{"relations", relations}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw DataError("cannot write '" + (dir / "manifest.json").string() + "'");
    out << manifest.dump(2) << '\n';
}

std::vector<GhdNodeSpec> parse_ghd(const std::string& json_text) {
    const json doc = parse_json(json_text, "decomposition");
    if (!doc.is_array()) throw DataError("decomposition must be a JSON list of nodes");

    std::vector<GhdNodeSpec> nodes;
    for (const auto& entry : doc) {
        if (!entry.is_object() || !entry.contains("atoms") || !entry["atoms"].is_array())
            throw DataError("each decomposition node needs an 'atoms' list");
        GhdNodeSpec node;
        for (const auto& a : entry["atoms"]) {
            if (!a.is_string())
                throw DataError("decomposition atom names must be strings");
            node.atoms.push_back(a.get<std::string>());
        }
        if (entry.contains("parent") && !entry["parent"].is_null()) {
            if (!entry["parent"].is_number_integer())
                throw DataError("decomposition 'parent' must be a node index or null");
            node.parent = entry["parent"].get<int>();
        }
        nodes.push_back(std::move(node));
    }
    return nodes;
}

}  // namespace tsens
