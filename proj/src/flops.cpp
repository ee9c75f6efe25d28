#include "wecmpc/flops.hpp"

#include "wecmpc/errors.hpp"

#include <cmath>

namespace wecmpc {

std::uint64_t FlopLedger::total() const noexcept {
    std::uint64_t acc = 0;
    for (const auto& e : entries) {
        acc += e.multiplications;
    }
    return acc;
}

std::uint64_t FlopLedger::at(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) {
            return e.multiplications;
        }
    }
    throw InvalidParameterError("flop ledger: no entry named '" + name + "'");
}

FlopLedger count_step_flops(Index N, Index n) {
    if (N < 1 || n < 1) {
        throw InvalidParameterError("count_step_flops: N and n must be >= 1");
    }
    const auto uN = static_cast<std::uint64_t>(N);
    const auto un = static_cast<std::uint64_t>(n);
    const std::uint64_t n2 = uN * uN;
    FlopLedger ledger;
    ledger.entries = {
        {"offset", 2 * uN * (un + uN)},
        {"G1_xi", 9 * n2},
        {"G2_z", 6 * n2},
        {"G3_d", 6 * n2},
        {"G4_xi", 2 * n2},
    };
    return ledger;
}

double rt_min_period(double T_p, double OP) {
    if (!(T_p > 0.0) || !(OP > 0.0)) {
        throw InvalidParameterError("rt_min_period: T_p and OP must be positive");
    }
    return std::cbrt(25.0 * T_p * T_p / OP);
}

}  // namespace wecmpc
