#include "rvc/error.hpp"

namespace rvc {

CapExceeded::CapExceeded(std::size_t length, std::size_t cap, int depth)
    : Error("symbol string of length " + std::to_string(length) + " exceeds cap " +
            std::to_string(cap) + (depth >= 0 ? " at depth " + std::to_string(depth) : "")),
      length_(length),
      cap_(cap),
      depth_(depth) {}

RejectionLimitExceeded::RejectionLimitExceeded(std::size_t attempts, std::string failing_constraint)
    : Error("no sample satisfied the constraints after " + std::to_string(attempts) +
            " attempts (most frequent failure: " + failing_constraint + ")"),
      constraint_(std::move(failing_constraint)) {}

}  // namespace rvc
