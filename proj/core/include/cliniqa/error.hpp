#pragma once

#include <stdexcept>
#include <string>

namespace cliniqa {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cliniqa
