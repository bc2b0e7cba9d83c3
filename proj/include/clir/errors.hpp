#pragma once

#include <stdexcept>
#include <string>

namespace clir {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimError : Error { using Error::Error; };
struct DupError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct NormError : Error { using Error::Error; };
struct SizeError : Error { using Error::Error; };
struct ArityError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct SpecError : Error { using Error::Error; };
struct ConsistencyError : Error { using Error::Error; };

} // namespace clir
