#include "agefluct/errors.hpp"

namespace agefluct {

ReplicateError::ReplicateError(std::uint64_t replicate, const std::string& what)
    : Error("replicate " + std::to_string(replicate) + ": " + what), replicate_(replicate) {}

}  // namespace agefluct
