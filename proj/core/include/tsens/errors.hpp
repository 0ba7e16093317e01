#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsens {

/** Root of the library's error hierarchy. Carries a stable machine-readable
 *  kind string (used by the CLI to pick exit codes and JSON error types). */
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    /** Stable identifier, e.g. "parse", "overflow". */
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/** A multiplicity computation exceeded the 128-bit unsigned range.
 *  Counts grow multiplicatively along join paths; wrap-around would silently
 *  corrupt sensitivities, so overflow is always a hard error. */
class CountOverflow : public Error {
public:
    explicit CountOverflow(const std::string& message)
        : Error("overflow", message) {}
};

/** An intermediate relation grew past the configured row budget
 *  (see memory_budget_rows()). Raised instead of thrashing. */
class MemoryBudgetExceeded : public Error {
public:
    MemoryBudgetExceeded(std::size_t rows, std::size_t budget)
        : Error("memory_budget",
                "intermediate relation exceeds the memory budget (" +
                    std::to_string(rows) + " rows, budget " +
                    std::to_string(budget) +
                    "; override with TSENS_MEM_ROWS)") {}
};

/** Query-text parse failure with position information. */
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message)
        : Error("parse", "line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ": " + message),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/** A relation name appears in more than one atom. Self-joins are outside
 *  the supported query class and always rejected up front. */
class SelfJoinUnsupported : public Error {
public:
    explicit SelfJoinUnsupported(const std::string& relation)
        : Error("self_join", "relation '" + relation +
                                 "' appears more than once; self-joins are "
                                 "not supported") {}
};

/** Structurally invalid query/database combination (unknown relation,
 *  arity mismatch, bad attribute reference, ...). */
class QueryError : public Error {
public:
    explicit QueryError(const std::string& message) : Error("query", message) {}
};

/** An operation that requires an acyclic query was given a cyclic one.
 *  The message names the residual hyperedges as the cyclicity proof. */
class CyclicQuery : public Error {
public:
    explicit CyclicQuery(const std::string& message) : Error("cyclic", message) {}
};

/** ls_path was given a query whose sharing structure is not a chain. */
class NotAPathQuery : public Error {
public:
    explicit NotAPathQuery(const std::string& message)
        : Error("not_a_path", message) {}
};

/** A user-supplied generalized hypertree decomposition failed validation. */
class GhdError : public Error {
public:
    explicit GhdError(const std::string& message) : Error("ghd", message) {}
};

/** CSV / manifest / CNF ingestion failure. */
class DataError : public Error {
public:
    explicit DataError(const std::string& message) : Error("data", message) {}
};

/** Invalid configuration value (DP budgets, top-k parameter, ...). */
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config", message) {}
};

}  // namespace tsens
