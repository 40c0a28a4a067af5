#include "coreselect/quota.hpp"

#include "coreselect/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coreselect {

bool QuotaStrategy::uses(Metric m) const {
    return std::any_of(components.begin(), components.end(),
                       [m](const StrategyComponent& c) { return c.metric == m; });
}

void QuotaStrategy::validate() const {
    if (components.empty() || components.size() > 3)
        throw ConfigError("quota strategy '" + name + "' must have 1 to 3 components");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw ConfigError("quota strategy epsilon must be a positive finite number");
}

QuotaStrategy catalog_strategy(int number, double epsilon) {
    constexpr StrategyComponent den{Metric::density, Orientation::lower_gets_more};
    constexpr StrategyComponent irs{Metric::irs, Orientation::higher_gets_more};
    constexpr StrategyComponent tr{Metric::transferability, Orientation::higher_gets_more};
    constexpr StrategyComponent ttr{Metric::text_transferability, Orientation::higher_gets_more};

    QuotaStrategy s;
    s.name = std::to_string(number);
    s.epsilon = epsilon;
    switch (number) {
    case 1: s.components = {den}; break;
    case 2: s.components = {irs}; break;
    case 3: s.components = {tr}; break;
    case 4: s.components = {ttr}; break;
    case 5: s.components = {den, irs}; break;
    case 6: s.components = {tr, irs}; break;
    case 7: s.components = {ttr, irs}; break;
    case 8: s.components = {tr, den}; break;
    case 9: s.components = {ttr, den}; break;
    case 10: s.components = {tr, den, irs}; break;
    case 11: s.components = {ttr, den, irs}; break;
    default: throw ConfigError("quota strategy number must be 1..11, got " + std::to_string(number));
    }
    return s;
}

QuotaStrategy parse_strategy(std::string_view s, double epsilon) {
    if (!s.empty() && (s.front() == 's' || s.front() == 'S')) s.remove_prefix(1);
    int number = 0;
    for (char ch : s) {
        if (ch < '0' || ch > '9' || number > 100)
            throw ConfigError("unknown quota strategy '" + std::string(s) + "'");
        number = number * 10 + (ch - '0');
    }
    if (s.empty()) throw ConfigError("empty quota strategy");
    return catalog_strategy(number, epsilon);
}

std::vector<double> score_clusters(const std::vector<ClusterScores>& raw, const QuotaStrategy& strategy) {
    strategy.validate();
    std::size_t k = 0;
    std::vector<double> acc;
    for (const auto& comp : strategy.components) {
        auto it = std::find_if(raw.begin(), raw.end(),
                               [&](const ClusterScores& s) { return s.metric == comp.metric; });
        if (it == raw.end())
            throw InvalidArgument("quota strategy needs metric '" + std::string(to_string(comp.metric)) +
                                  "' which was not computed");
        const auto& v = it->values;
        if (acc.empty()) {
            k = v.size();
            if (k == 0) throw InvalidArgument("score_clusters: no clusters");
            acc.assign(k, 0.0);
        } else if (v.size() != k) {
            throw InvalidArgument("score_clusters: metric '" + std::string(to_string(comp.metric)) +
                                  "' has " + std::to_string(v.size()) + " values, expected " + std::to_string(k));
        }
        const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
        const double lo = *lo_it;
        const double hi = *hi_it;
        const bool constant = hi - lo <= 1e-12 * std::max(1.0, std::abs(hi));
        for (std::size_t c = 0; c < k; ++c) {
            double x = constant ? 0.5 : (v[c] - lo) / (hi - lo);
            if (comp.orientation == Orientation::lower_gets_more) x = 1.0 - x;
            acc[c] += x;
        }
    }
    const auto m = static_cast<double>(strategy.components.size());
    for (auto& a : acc) a = a / m + strategy.epsilon;
    return acc;
}

QuotaPlan allocate_quotas(const std::vector<double>& scores, const std::vector<std::size_t>& sizes,
                          std::size_t budget) {
    const std::size_t k = scores.size();
    if (sizes.size() != k)
        throw InvalidArgument("allocate_quotas: " + std::to_string(scores.size()) + " scores for " +
                              std::to_string(sizes.size()) + " clusters");
    if (budget == 0) throw InvalidArgument("allocate_quotas: budget must be positive");
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (budget > total)
        throw InvalidArgument("allocate_quotas: budget " + std::to_string(budget) + " exceeds N=" +
                              std::to_string(total));
    for (double s : scores)
        if (!(s > 0.0) || !std::isfinite(s))
            throw InvalidArgument("allocate_quotas: scores must be positive and finite");

    QuotaPlan plan;
    plan.budget = budget;
    plan.weights.resize(k);
    for (std::size_t c = 0; c < k; ++c) plan.weights[c] = static_cast<double>(sizes[c]) * scores[c];
    plan.quotas.assign(k, 0);

    std::vector<bool> capped(k, false);
    std::size_t remaining = budget;
    for (;;) {
        if (remaining == 0) {
            for (std::size_t c = 0; c < k; ++c)
                if (!capped[c]) plan.quotas[c] = 0;
            break;
        }
        double wsum = 0.0;
        for (std::size_t c = 0; c < k; ++c)
            if (!capped[c]) wsum += plan.weights[c];
        if (!(wsum > 0.0)) throw InvalidArgument("allocate_quotas: no weight left to apportion");

        std::vector<double> remainder(k, -1.0);
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (capped[c]) continue;
            const double real = static_cast<double>(remaining) * plan.weights[c] / wsum;
            const double fl = std::floor(real);
            plan.quotas[c] = static_cast<std::size_t>(fl);
            remainder[c] = real - fl;
            assigned += plan.quotas[c];
        }
        // Rounding in the real shares can leave the floors a unit off in
        // either direction; settle the leftover by remainder order.
        std::vector<std::size_t> order;
        for (std::size_t c = 0; c < k; ++c)
            if (!capped[c]) order.push_back(c);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
        for (std::size_t i = 0; assigned < remaining; i = (i + 1) % order.size()) {
            ++plan.quotas[order[i]];
            ++assigned;
        }
        for (std::size_t i = order.size(); assigned > remaining;) {
            i = (i == 0 ? order.size() : i) - 1;
            if (plan.quotas[order[i]] > 0) {
                --plan.quotas[order[i]];
                --assigned;
            }
        }

        bool any_capped = false;
        for (std::size_t c = 0; c < k; ++c) {
            if (!capped[c] && plan.quotas[c] > sizes[c]) {
                capped[c] = true;
                plan.quotas[c] = sizes[c];
                remaining -= sizes[c];
                any_capped = true;
            }
        }
        if (!any_capped) break;
    }
    return plan;
}

} // namespace coreselect
