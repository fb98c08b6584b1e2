#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lsv {

/// Contract violation or unsupported input. Every module throws this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The depth-first traversal visited more nodes than allowed.
class NodeCapExceeded : public Error {
 public:
  explicit NodeCapExceeded(std::uint64_t cap)
      : Error("node cap exceeded: more than " + std::to_string(cap) + " nodes visited") {}
};

}  // namespace lsv
