#include "support/generators.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <utility>

namespace tsens::testgen {

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

/** One body atom plus its rendered selection block ("[A = 'v1']" or ""). */
struct AtomSpec {
    std::string relation;
    std::vector<std::string> attrs;
    std::string selection_text;
};

std::string maybe_selection(std::mt19937_64& rng, const std::vector<std::string>& attrs,
                            std::size_t percent) {
    if (pick(rng, 100) >= percent) return "";
    const std::string& attr = attrs[pick(rng, attrs.size())];
    const char* op = pick(rng, 2) == 0 ? " = '" : " != '";
    // Literals range one value past the data domain, so some selections
    // mention a value no relation contains.
    return "[" + attr + op + "v" + std::to_string(pick(rng, 5)) + "']";
}

/** Fills every atom's relation with random rows and parses the assembled
 *  query text, so generated instances take the same path as user input. */
Instance assemble(std::mt19937_64& rng, const std::vector<AtomSpec>& atoms,
                  std::size_t max_rows, std::size_t domain) {
    Instance inst;
    std::string text = "q() :- ";
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const AtomSpec& spec = atoms[i];
        if (i > 0) text += ", ";
        text += spec.relation + "(";
        for (std::size_t j = 0; j < spec.attrs.size(); ++j) {
            if (j > 0) text += ", ";
            text += spec.attrs[j];
        }
        text += ")" + spec.selection_text;

        // Half the time the stored columns carry their own names, so the
        // positional binding of columns to query attributes is exercised.
        std::vector<std::string> schema = spec.attrs;
        if (pick(rng, 2) == 0) {
            schema.clear();
            for (std::size_t j = 0; j < spec.attrs.size(); ++j)
                schema.push_back("c" + std::to_string(j));
        }

        const std::size_t target = pick(rng, max_rows + 1);
        std::set<std::vector<std::string>> seen;
        std::vector<std::pair<std::vector<std::string>, Count>> rows;
        for (std::size_t t = 0; t < 4 * target && rows.size() < target; ++t) {
            std::vector<std::string> vals;
            vals.reserve(spec.attrs.size());
            for (std::size_t j = 0; j < spec.attrs.size(); ++j)
                vals.push_back("v" + std::to_string(pick(rng, domain)));
            if (seen.insert(vals).second) rows.emplace_back(vals, Count(1 + pick(rng, 3)));
        }
        inst.db.add_from_strings(spec.relation, schema, rows);
    }
    text += " .";
    inst.query = parse_query(text);
    return inst;
}

}  // namespace

Instance chain_fixture() {
    Instance inst;
    inst.db.add_from_strings("R1", {"A", "B"},
                             {{{"a1", "b1"}, 1}, {{"a2", "b1"}, 1}, {{"a3", "b2"}, 1}});
    inst.db.add_from_strings("R2", {"B", "C"}, {{{"b1", "c1"}, 1}});
    inst.db.add_from_strings("R3", {"C", "D"},
                             {{{"c1", "d1"}, 1}, {{"c1", "d2"}, 1}, {{"c2", "d1"}, 1}});
    inst.query = parse_query("q(A, B, C, D) :- R1(A, B), R2(B, C), R3(C, D) .");
    return inst;
}

Instance random_acyclic_instance(std::mt19937_64& rng) {
    const std::size_t m = 1 + pick(rng, 4);

    std::vector<std::string> names = {"Ra", "Rb", "Rc", "Rd"};
    std::shuffle(names.begin(), names.end(), rng);
    names.resize(m);

    // A random parent tree over the atoms; an occasional parentless atom
    // yields a disconnected query.
    std::vector<int> parent(m, -1);
    for (std::size_t i = 1; i < m; ++i)
        parent[i] = pick(rng, 100) < 15 ? -1 : static_cast<int>(pick(rng, i));

    std::vector<std::vector<std::string>> attrs(m);
    for (std::size_t i = 0; i < m; ++i)
        if (pick(rng, 100) < 60) attrs[i].push_back("P" + std::to_string(i));
    for (std::size_t i = 1; i < m; ++i) {
        if (parent[i] < 0) continue;
        const std::size_t k = 1 + pick(rng, 2);
        for (std::size_t j = 0; j < k; ++j) {
            std::string shared = "S" + std::to_string(i) + "_" + std::to_string(j);
            attrs[i].push_back(shared);
            attrs[static_cast<std::size_t>(parent[i])].push_back(shared);
        }
    }
    std::vector<AtomSpec> specs(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (attrs[i].empty()) attrs[i].push_back("P" + std::to_string(i));
        std::shuffle(attrs[i].begin(), attrs[i].end(), rng);
        specs[i] = {names[i], attrs[i], maybe_selection(rng, attrs[i], 25)};
    }
    return assemble(rng, specs, 6, 4);
}

Instance random_path_instance(std::mt19937_64& rng) {
    const std::size_t m = 1 + pick(rng, 5);

    std::vector<std::string> names = {"Ra", "Rb", "Rc", "Rd", "Re"};
    std::shuffle(names.begin(), names.end(), rng);
    names.resize(m);

    std::vector<std::vector<std::string>> attrs(m);
    for (std::size_t i = 0; i < m; ++i)
        if (pick(rng, 100) < 50) attrs[i].push_back("P" + std::to_string(i));
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const std::size_t k = 1 + pick(rng, 2);
        for (std::size_t j = 0; j < k; ++j) {
            std::string shared = "C" + std::to_string(i) + "_" + std::to_string(j);
            attrs[i].push_back(shared);
            attrs[i + 1].push_back(shared);
        }
    }
    std::vector<AtomSpec> specs(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (attrs[i].empty()) attrs[i].push_back("P" + std::to_string(i));
        std::shuffle(attrs[i].begin(), attrs[i].end(), rng);
        specs[i] = {names[i], attrs[i], maybe_selection(rng, attrs[i], 25)};
    }
    return assemble(rng, specs, 8, 4);
}

Instance random_cyclic_instance(std::mt19937_64& rng, std::vector<GhdNodeSpec>& ghd) {
    const std::size_t shape = pick(rng, 3);
    std::vector<AtomSpec> specs;
    if (shape == 0) {  // triangle
        specs = {{"R1", {"A", "B"}, ""}, {"R2", {"B", "C"}, ""}, {"R3", {"C", "A"}, ""}};
        if (pick(rng, 2) == 0)
            ghd = {{{"R1", "R2", "R3"}, std::nullopt}};
        else
            ghd = {{{"R1", "R2"}, std::nullopt}, {{"R3"}, 0}};
    } else if (shape == 1) {  // four-cycle
        specs = {{"R1", {"A", "B"}, ""},
                 {"R2", {"B", "C"}, ""},
                 {"R3", {"C", "D"}, ""},
                 {"R4", {"D", "A"}, ""}};
        if (pick(rng, 2) == 0)
            ghd = {{{"R1", "R2", "R3", "R4"}, std::nullopt}};
        else
            ghd = {{{"R1", "R2"}, std::nullopt}, {{"R3", "R4"}, 0}};
    } else {  // star: acyclic overall, but the child projections form a cycle
        specs = {{"R1", {"A", "B", "C"}, ""},
                 {"R2", {"A", "B"}, ""},
                 {"R3", {"B", "C"}, ""},
                 {"R4", {"C", "A"}, ""}};
        if (pick(rng, 2) == 0)
            ghd = {{{"R1", "R2", "R3", "R4"}, std::nullopt}};
        else
            ghd = {{{"R1"}, std::nullopt}, {{"R2"}, 0}, {{"R3"}, 0}, {{"R4"}, 0}};
    }
    for (auto& spec : specs) spec.selection_text = maybe_selection(rng, spec.attrs, 20);
    return assemble(rng, specs, 6, 4);
}

Cnf random_cnf(std::mt19937_64& rng, std::size_t max_vars) {
    Cnf cnf;
    cnf.num_vars = 3 + pick(rng, max_vars - 2);
    const std::size_t n_clauses = 3 + pick(rng, 6);
    for (std::size_t c = 0; c < n_clauses; ++c) {
        const std::size_t len = 1 + pick(rng, 3);
        std::array<int, 3> clause{};
        int last = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            if (j < len) {
                int var = 1 + static_cast<int>(pick(rng, cnf.num_vars));
                last = pick(rng, 2) == 0 ? var : -var;
            }
            clause[j] = last;
        }
        cnf.clauses.push_back(clause);
    }
    return cnf;
}

std::string to_dimacs(const Cnf& cnf) {
    std::string out = "c generated formula\np cnf " + std::to_string(cnf.num_vars) + " " +
                      std::to_string(cnf.clauses.size()) + "\n";
    for (const auto& clause : cnf.clauses)
        out += std::to_string(clause[0]) + " " + std::to_string(clause[1]) + " " +
               std::to_string(clause[2]) + " 0\n";
    return out;
}

}  // namespace tsens::testgen
