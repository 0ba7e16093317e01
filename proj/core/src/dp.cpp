#include "tsens/dp.hpp"

#include <algorithm>
#include <cmath>

namespace tsens {

double laplace_sample(double scale, Rng& rng) {
    if (!(scale > 0)) throw ConfigError("Laplace scale must be positive");
    const double p = rng.next_unit_open() - 0.5;
    if (p == 0) return 0;
    // Inverse CDF: sgn(p) * -scale * ln(1 - 2|p|); log1p keeps precision
    // near p = 0.
    const double magnitude = -scale * std::log1p(-2.0 * std::fabs(p));
    return p < 0 ? -magnitude : magnitude;
}

void DpConfig::validate() const {
    if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
    if (!(epsilon_tsens > 0) || !(epsilon_tsens < epsilon))
        throw ConfigError("epsilon_tsens must lie strictly between 0 and epsilon");
    if (!(threshold_split > 0) || !(threshold_split < 1))
        throw ConfigError("threshold_split must lie strictly between 0 and 1");
    if (ell < 1) throw ConfigError("ell must be at least 1");
    if (primary_private.empty()) throw ConfigError("primary_private relation must be named");
}

Database truncate(const Database& db, const ConjunctiveQuery& query,
                  const std::vector<MultiplicityTable>& tables,
                  const std::string& primary_private, Count tau) {
    const Atom& atom = query.atom_for(primary_private);
    const Relation& rel = db.relation(primary_private);
    if (rel.schema().size() != atom.attrs.size())
        throw QueryError("atom '" + primary_private + "' does not match the relation's arity");

    std::vector<RawRow> kept;
    std::vector<std::string> values(atom.attrs.size());
    for (const auto& [row, cnt] : rel.rows()) {
        for (std::size_t i = 0; i < row.size(); ++i) values[i] = db.dict().resolve(row[i]);
        if (tuple_sensitivity(db, query, tables, primary_private, values) <= tau)
            kept.push_back({row, cnt});
    }
    Database out = db;
    out.replace(Relation::canonicalize(rel.name(), rel.schema(), kept));
    return out;
}

std::uint64_t learn_threshold(const Database& db, const ConjunctiveQuery& query,
                              const std::vector<MultiplicityTable>& tables,
                              const DpConfig& config, Rng& rng, const JoinTree* tree) {
    config.validate();
    if (config.ell == 1) return 1;

    const Count reference =
        count_query(truncate(db, query, tables, config.primary_private, Count(config.ell)),
                    query, tree);

    const double eps_estimate = config.epsilon_tsens * config.threshold_split;
    const double eps_svt = config.epsilon_tsens - eps_estimate;

    // Draw order is part of the reproducibility contract: the reference
    // noise first, then the sparse-vector threshold, then one comparison
    // draw per candidate until the sweep stops.
    double noisy_reference = 0, rho = 0;
    if (!config.test_mode) {
        noisy_reference = reference.to_double() +
                          laplace_sample(static_cast<double>(config.ell) / eps_estimate, rng);
        rho = laplace_sample(2.0 / eps_svt, rng);
    }

    for (std::uint64_t tau = 1; tau < config.ell; ++tau) {
        const Count answer = count_query(
            truncate(db, query, tables, config.primary_private, Count(tau)), query, tree);
        if (config.test_mode) {
            // Noise-free: stop at the first threshold already matching the
            // reference answer exactly.
            if (answer >= reference) return tau;
        } else {
            const double gap = (answer.to_double() - noisy_reference) / static_cast<double>(tau);
            if (gap + laplace_sample(4.0 / eps_svt, rng) > rho) return tau;
        }
    }
    return config.ell;
}

DpAnswer tsens_dp(const Database& db, const ConjunctiveQuery& query, const DpConfig& config,
                  const JoinTree* tree) {
    config.validate();
    if (!query.uses(config.primary_private))
        throw QueryError("primary-private relation '" + config.primary_private +
                         "' does not appear in the query");

    const SensitivityReport report =
        tree ? ls_general(db, query, *tree) : ls_acyclic(db, query);

    Rng rng(config.seed);
    DpAnswer answer;
    answer.tau = learn_threshold(db, query, report.tables, config, rng, tree);
    answer.budget.epsilon_estimate = config.epsilon_tsens * config.threshold_split;
    answer.budget.epsilon_svt = config.epsilon_tsens - answer.budget.epsilon_estimate;
    answer.budget.epsilon_answer = config.epsilon - config.epsilon_tsens;

    const Database truncated =
        truncate(db, query, report.tables, config.primary_private, Count(answer.tau));
    answer.raw_truncated = count_query(truncated, query, tree);

    double noisy = answer.raw_truncated.to_double();
    if (!config.test_mode)
        noisy += laplace_sample(static_cast<double>(answer.tau) / answer.budget.epsilon_answer,
                                rng);
    answer.value = std::max(0.0, noisy);
    return answer;
}

}  // namespace tsens
