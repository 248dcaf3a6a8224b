// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cdrflow/common.hpp"

namespace cdrflow {

// Ordered breaks with one more label than breaks, e.g. (-2, 2, 8) ->
// {low, average, high, very_high}. classify() is monotone in the value.
struct level_thresholds {
    std::vector<double> breaks;
    std::vector<std::string> labels;

    void validate() const {
        if (labels.size() != breaks.size() + 1)
            throw config_error(errc::bad_config, "thresholds need breaks+1 labels");
        for (size_t i = 1; i < breaks.size(); ++i)
            if (!(breaks[i - 1] < breaks[i]))
                throw config_error(errc::bad_config, "threshold breaks must increase strictly");
    }

    const std::string& classify(double v) const {
        size_t i = 0;
        while (i < breaks.size() && v > breaks[i]) ++i;
        return labels[i];
    }

    static level_thresholds downtown() {
        return {{-2.0, 2.0, 8.0}, {"low", "average", "high", "very_high"}};
    }
    static level_thresholds heroes_square() {
        return {{-1.0, 1.0, 2.5}, {"low", "average", "high", "very_high"}};
    }
};

} // namespace cdrflow
