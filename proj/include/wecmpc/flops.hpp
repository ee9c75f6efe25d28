#pragma once

#include "wecmpc/linalg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wecmpc {

struct FlopEntry {
    std::string name;
    std::uint64_t multiplications = 0;
};

/// Multiplication counts of one controller step, per operation.
struct FlopLedger {
    std::vector<FlopEntry> entries;

    [[nodiscard]] std::uint64_t total() const noexcept;
    /// Throws InvalidParameterError for an unknown name.
    [[nodiscard]] std::uint64_t at(const std::string& name) const;
};

/// d~ = Dtil [x; W]: 2N(n+N), G1 xi: 9N^2, G2 z: 6N^2, G3 d~: 6N^2, G4 xi: 2N^2.
FlopLedger count_step_flops(Index N, Index n);

/// (25 T_p^2 / OP)^(1/3): the shortest period at which one 25 N^2 step fits.
double rt_min_period(double T_p, double OP);

}  // namespace wecmpc
