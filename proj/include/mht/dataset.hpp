#pragma once

// Censored duration records: observed duration t* = min(T, C), completion
// indicator d = 1{T <= C}, covariate row x.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mht {

struct Observation {
    double duration = 0.0;  // weeks, > 0
    bool complete = true;   // true: event observed; false: right-censored
    std::vector<double> covariates;
};

struct Dataset {
    std::vector<Observation> observations;
    std::vector<std::string> covariate_names;

    std::size_t size() const { return observations.size(); }
    std::size_t covariate_dim() const { return covariate_names.size(); }

    void validate() const {
        if (observations.empty()) throw std::invalid_argument("Dataset: empty");
        for (std::size_t n = 0; n < observations.size(); ++n) {
            const auto& o = observations[n];
            if (!(o.duration > 0.0)) {
                throw std::invalid_argument("Dataset: nonpositive duration at row " +
                                            std::to_string(n));
            }
            if (o.covariates.size() != covariate_names.size()) {
                throw std::invalid_argument("Dataset: covariate dimension mismatch at row " +
                                            std::to_string(n));
            }
        }
    }
};

}  // namespace mht
