#pragma once

#include <stdexcept>
#include <string>

namespace backbone {

// Raised on malformed or inconsistent caller input. The CLI maps this to
// exit code 2; all other exceptions map to 1.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace backbone
