#pragma once

#include "coreselect/metrics.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace coreselect {

enum class Orientation { higher_gets_more, lower_gets_more };

struct StrategyComponent {
    Metric metric = Metric::density;
    Orientation orientation = Orientation::higher_gets_more;
};

struct QuotaStrategy {
    std::string name;
    std::vector<StrategyComponent> components;
    double epsilon = 0.1;

    bool uses(Metric m) const;
    void validate() const;
};

/// The eleven catalogued strategies, numbered 1..11:
///  1 density  2 irs  3 transferability  4 text transferability
///  5 density+irs  6 transferability+irs  7 text transferability+irs
///  8 transferability+density  9 text transferability+density
///  10 transferability+density+irs  11 text transferability+density+irs
/// Density is always lower_gets_more; the others higher_gets_more.
QuotaStrategy catalog_strategy(int number, double epsilon = 0.1);

/// Accepts "1".."11" or "s1".."s11".
QuotaStrategy parse_strategy(std::string_view s, double epsilon = 0.1);

struct QuotaPlan {
    std::size_t budget = 0;
    std::vector<std::size_t> quotas;
    std::vector<double> weights;
};

/// Min-max normalize each component across clusters (a constant metric maps
/// to 0.5), flip lower_gets_more components, average, add epsilon.
std::vector<double> score_clusters(const std::vector<ClusterScores>& raw, const QuotaStrategy& strategy);

/// Largest-remainder apportionment of `budget` in proportion to
/// sizes[c] * scores[c]; clusters whose share exceeds their size are capped
/// and the rest re-apportioned among the uncapped ones. Remainder ties go to
/// the lower cluster index.
QuotaPlan allocate_quotas(const std::vector<double>& scores, const std::vector<std::size_t>& sizes,
                          std::size_t budget);

} // namespace coreselect
