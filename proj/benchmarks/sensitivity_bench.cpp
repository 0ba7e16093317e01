// Microbenchmarks for the join and sensitivity kernels on synthetic data
// shapes: matching chains (the near-linear case), fan-out stars (large
// counts, small tables), and the raw join operator.

#include <benchmark/benchmark.h>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tsens/dp.hpp"
#include "tsens/query.hpp"
#include "tsens/relation.hpp"
#include "tsens/sensitivity.hpp"

namespace {

using namespace tsens;

using StringRows = std::vector<std::pair<std::vector<std::string>, Count>>;

/** Five relations R1(A0,A1) ... R5(A4,A5), each a perfect matching of
 *  `rows` tuples, so every sweep table stays at `rows` entries. */
Database matching_chain(std::size_t rows) {
    Database db;
    for (int r = 1; r <= 5; ++r) {
        StringRows data;
        data.reserve(rows);
        for (std::size_t j = 0; j < rows; ++j)
            data.push_back({{"x" + std::to_string(r - 1) + "_" + std::to_string(j),
                             "x" + std::to_string(r) + "_" + std::to_string(j)},
                            Count(1)});
        db.add_from_strings("R" + std::to_string(r),
                            {"A" + std::to_string(r - 1), "A" + std::to_string(r)}, data);
    }
    return db;
}

const ConjunctiveQuery& chain_query() {
    static const ConjunctiveQuery query =
        parse_query("q() :- R1(A0, A1), R2(A1, A2), R3(A2, A3), R4(A3, A4), R5(A4, A5) .");
    return query;
}

/** Four relations sharing the hub attribute B over `hubs` values, `rows`
 *  tuples each: the join count explodes combinatorially while every pass
 *  table stays at `hubs` entries — the case enumeration cannot touch. */
Database fanout_star(std::size_t rows, std::size_t hubs) {
    Database db;
    const std::vector<std::string> leaves = {"A", "C", "D", "E"};
    for (std::size_t r = 0; r < 4; ++r) {
        StringRows data;
        data.reserve(rows);
        for (std::size_t j = 0; j < rows; ++j)
            data.push_back({{leaves[r] + std::to_string(j), "b" + std::to_string(j % hubs)},
                            Count(1)});
        db.add_from_strings("R" + std::to_string(r + 1),
                            {leaves[r] + "x", "B"}, data);
    }
    return db;
}

const ConjunctiveQuery& star_query() {
    static const ConjunctiveQuery query =
        parse_query("q() :- R1(Ax, B), R2(Cx, B), R3(Dx, B), R4(Ex, B) .");
    return query;
}

void BM_cnt_join(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    const std::size_t join_values = rows / 4;
    Database db;
    StringRows left, right;
    for (std::size_t j = 0; j < rows; ++j) {
        left.push_back({{"a" + std::to_string(j), "b" + std::to_string(j % join_values)},
                        Count(1)});
        right.push_back({{"b" + std::to_string(j % join_values), "c" + std::to_string(j)},
                         Count(1)});
    }
    db.add_from_strings("L", {"A", "B"}, left);
    db.add_from_strings("R", {"B", "C"}, right);

    for (auto _ : state) {
        benchmark::DoNotOptimize(cnt_join(db.relation("L"), db.relation("R")));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_cnt_join)->RangeMultiplier(4)->Range(1 << 10, 1 << 16);

void BM_ls_path_chain(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    const Database db = matching_chain(rows);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ls_path(db, chain_query()));
    }
    state.SetComplexityN(static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_ls_path_chain)
    ->RangeMultiplier(4)
    ->Range(1 << 10, 1 << 16)
    ->Complexity(benchmark::oNLogN);

void BM_ls_acyclic_star(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    const Database db = fanout_star(rows, /*hubs=*/64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ls_acyclic(db, star_query()));
    }
    state.SetComplexityN(static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_ls_acyclic_star)
    ->RangeMultiplier(4)
    ->Range(1 << 10, 1 << 16)
    ->Complexity(benchmark::oNLogN);

void BM_tsens_dp_star(benchmark::State& state) {
    // The star keeps every per-tuple table at `hubs` entries; a matching
    // chain would make them quadratic in the cut domains, which measures
    // table materialization rather than the private-answer pipeline.
    const auto rows = static_cast<std::size_t>(state.range(0));
    const Database db = fanout_star(rows, /*hubs=*/64);
    DpConfig config;
    config.primary_private = "R3";
    config.ell = 4;
    config.seed = 42;
    for (auto _ : state) {
        benchmark::DoNotOptimize(tsens_dp(db, star_query(), config));
    }
    state.SetComplexityN(static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_tsens_dp_star)
    ->RangeMultiplier(4)
    ->Range(1 << 10, 1 << 14)
    ->Complexity(benchmark::oNLogN);

}  // namespace

int main(int argc, char** argv) {
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
