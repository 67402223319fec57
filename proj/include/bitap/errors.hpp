#pragma once

#include <stdexcept>
#include <string>

namespace bitap {

// Error taxonomy. The CLI maps each class to a process exit code:
//   usage_error       -> 2  (bad arguments, dimension/cap violations, invalid brackets)
//   convergence_error -> 3  (iteration budgets exhausted, diverging dynamics)
//   numerical_error   -> 4  (pole proximity, singular systems, non-finite values)
struct bitap_error : std::runtime_error {
    explicit bitap_error(const std::string& what) : std::runtime_error(what) {}
};

struct usage_error : bitap_error {
    static constexpr int exit_code = 2;
    explicit usage_error(const std::string& what) : bitap_error(what) {}
};

struct convergence_error : bitap_error {
    static constexpr int exit_code = 3;
    explicit convergence_error(const std::string& what) : bitap_error(what) {}
};

struct numerical_error : bitap_error {
    static constexpr int exit_code = 4;
    explicit numerical_error(const std::string& what) : bitap_error(what) {}
};

} // namespace bitap
