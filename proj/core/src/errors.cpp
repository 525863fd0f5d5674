#include "fixq/errors.hpp"

namespace fixq {

int exit_code_for(const Error& e) noexcept {
    if (dynamic_cast<const FormatError*>(&e) != nullptr) return kExitFormat;
    if (dynamic_cast<const NumericError*>(&e) != nullptr) return kExitNumeric;
    return kExitContract;
}

}  // namespace fixq
