#include "tsens/query.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace tsens {

const Atom& ConjunctiveQuery::atom_for(const std::string& relation) const {
    for (const auto& a : atoms)
        if (a.relation == relation) return a;
    throw QueryError("relation '" + relation + "' does not appear in query '" + name + "'");
}

bool ConjunctiveQuery::uses(const std::string& relation) const {
    for (const auto& a : atoms)
        if (a.relation == relation) return true;
    return false;
}

std::vector<std::string> ConjunctiveQuery::all_attrs() const {
    std::set<std::string> seen;
    for (const auto& a : atoms) seen.insert(a.attrs.begin(), a.attrs.end());
    return {seen.begin(), seen.end()};
}

namespace {

/** Hand-rolled recursive-descent parser with line/column tracking. The
 *  grammar is small enough that this stays simpler (and gives better
 *  errors) than a generated parser. */
class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    ConjunctiveQuery parse() {
        ConjunctiveQuery q;
        q.name = expect_ident("query name");
        expect('(');
        skip_ws();
        if (!peek_is(')')) {
            // Head attributes are syntax-checked but otherwise ignored.
            expect_ident("attribute");
            while (accept(',')) expect_ident("attribute");
        }
        expect(')');
        expect(':');
        expect('-');
        q.atoms.push_back(parse_atom());
        while (accept(',')) q.atoms.push_back(parse_atom());
        expect('.');
        skip_ws();
        if (pos_ < text_.size()) fail("trailing input after '.'");
        check_semantics(q);
        return q;
    }

private:
    Atom parse_atom() {
        Atom atom;
        std::size_t at_line = line_, at_col = col_;
        skip_ws();
        at_line = line_;
        at_col = col_;
        atom.relation = expect_ident("relation name");
        expect('(');
        atom.attrs.push_back(expect_ident("attribute"));
        while (accept(',')) atom.attrs.push_back(expect_ident("attribute"));
        expect(')');
        std::set<std::string> distinct(atom.attrs.begin(), atom.attrs.end());
        if (distinct.size() != atom.attrs.size())
            fail_at("duplicate attribute in atom '" + atom.relation + "'", at_line, at_col);
        if (accept('[')) {
            atom.selections.push_back(parse_selection(atom));
            while (accept(',')) atom.selections.push_back(parse_selection(atom));
            expect(']');
        }
        return atom;
    }

    Selection parse_selection(const Atom& atom) {
        skip_ws();
        std::size_t at_line = line_, at_col = col_;
        Selection sel;
        sel.attr = expect_ident("attribute");
        if (!atom.has_attr(sel.attr))
            fail_at("selection on attribute '" + sel.attr + "' not present in atom '" +
                        atom.relation + "'",
                    at_line, at_col);
        skip_ws();
        if (accept('!')) {
            expect('=');
            sel.op = Selection::Op::Ne;
        } else if (accept('=')) {
            sel.op = Selection::Op::Eq;
        } else {
            fail("expected '=' or '!=' in selection");
        }
        sel.literal = expect_string();
        return sel;
    }

    void check_semantics(const ConjunctiveQuery& q) {
        std::set<std::string> seen;
        for (const auto& a : q.atoms)
            if (!seen.insert(a.relation).second) throw SelfJoinUnsupported(a.relation);
    }

    // --- lexing ----------------------------------------------------------

    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    bool peek_is(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool accept(char c) {
        if (!peek_is(c)) return false;
        advance();
        return true;
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != c) {
            std::string found = pos_ >= text_.size() ? "end of input"
                                                     : "'" + std::string(1, text_[pos_]) + "'";
            fail("expected '" + std::string(1, c) + "', found " + found);
        }
        advance();
    }

    static bool ident_start(char c) {
        return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
    }
    static bool ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    }

    std::string expect_ident(const std::string& what) {
        skip_ws();
        if (pos_ >= text_.size() || !ident_start(text_[pos_])) fail("expected " + what);
        std::string out;
        while (pos_ < text_.size() && ident_char(text_[pos_])) {
            out.push_back(text_[pos_]);
            advance();
        }
        return out;
    }

    std::string expect_string() {
        skip_ws();
        std::size_t at_line = line_, at_col = col_;
        if (pos_ >= text_.size() || text_[pos_] != '\'') fail("expected quoted literal");
        advance();
        std::string out;
        while (true) {
            if (pos_ >= text_.size()) fail_at("unterminated literal", at_line, at_col);
            char c = text_[pos_];
            advance();
            if (c == '\'') {
                // '' inside a literal is an escaped single quote.
                if (pos_ < text_.size() && text_[pos_] == '\'') {
                    out.push_back('\'');
                    advance();
                    continue;
                }
                return out;
            }
            out.push_back(c);
        }
    }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    [[noreturn]] void fail(const std::string& msg) { fail_at(msg, line_, col_); }

    [[noreturn]] void fail_at(const std::string& msg, std::size_t line, std::size_t col) {
        throw ParseError(line, col, msg);
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

}  // namespace

ConjunctiveQuery parse_query(const std::string& text) {
    Parser p(text);
    return p.parse();  // the grammar guarantees at least one body atom
}

}  // namespace tsens
