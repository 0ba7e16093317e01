#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsens/hypergraph.hpp"
#include "tsens/query.hpp"
#include "tsens/relation.hpp"
#include "tsens/sensitivity.hpp"

namespace tsens {

/** Deterministic splitmix64 generator: 64-bit state, each draw hashes the
 *  advanced counter. The stream depends only on the seed, never on
 *  platform or library version, so seeded runs are reproducible
 *  byte-for-byte. */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /** Uniform double strictly inside (0, 1). */
    double next_unit_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

private:
    std::uint64_t state_;
};

/** One Laplace(0, scale) draw by inverse CDF. Throws ConfigError unless
 *  scale > 0. */
double laplace_sample(double scale, Rng& rng);

struct DpConfig {
    double epsilon = 1.0;          // total privacy budget
    double epsilon_tsens = 0.5;    // slice spent learning the threshold
    double threshold_split = 0.5;  // fraction of epsilon_tsens for the
                                   // reference estimate; the rest drives the
                                   // sparse-vector stopping test
    std::uint64_t ell = 1;         // largest threshold considered
    std::string primary_private;   // relation whose tuples are protected
    std::uint64_t seed = 0;
    bool test_mode = false;        // zero noise, exact integer comparisons

    /** Throws ConfigError on out-of-range values. */
    void validate() const;
};

struct DpBudget {
    double epsilon_estimate = 0;  // reference answer inside threshold learning
    double epsilon_svt = 0;       // sparse-vector comparisons
    double epsilon_answer = 0;    // released count
};

struct DpAnswer {
    double value = 0;             // released noisy count, clamped at 0
    std::uint64_t tau = 0;        // learned truncation threshold
    Count raw_truncated = Count(0);  // exact truncated answer (diagnostic;
                                     // not part of the private release)
    DpBudget budget;
};

/** Drops every tuple (all copies) of the protected relation whose
 *  sensitivity under `tables` exceeds tau. Tuples failing the atom's
 *  selections have sensitivity 0 and are always kept. Other relations
 *  pass through untouched. */
Database truncate(const Database& db, const ConjunctiveQuery& query,
                  const std::vector<MultiplicityTable>& tables,
                  const std::string& primary_private, Count tau);

/** Picks the smallest threshold in {1, ..., ell} whose truncated answer
 *  is (noisily) at least the ell-truncated answer, via one sparse-vector
 *  sweep; falls back to ell itself. In test mode the comparison is exact
 *  on the integer counts. */
std::uint64_t learn_threshold(const Database& db, const ConjunctiveQuery& query,
                              const std::vector<MultiplicityTable>& tables,
                              const DpConfig& config, Rng& rng, const JoinTree* tree = nullptr);

/** The full mechanism: compute sensitivities, learn a threshold, truncate,
 *  and release the count with Laplace noise scaled to threshold/budget.
 *  Pass `tree` for queries needing an explicit decomposition. */
DpAnswer tsens_dp(const Database& db, const ConjunctiveQuery& query, const DpConfig& config,
                  const JoinTree* tree = nullptr);

}  // namespace tsens
