#pragma once

#include <cstddef>
#include <string>

#include "groundwork/script.hpp"

namespace groundwork::script {

/// Base of functions, builtins, bound methods and modules held in Value::object().
struct NamedObject {
  virtual ~NamedObject() = default;
  std::string name;
};

struct ExceptionObject : NamedObject {
  std::string message;
};

/// Per-thread container budget. Every container creation and every bulk
/// element copy is charged against it while an interpreter call is active.
struct AllocBudget {
  std::size_t used = 0;
  std::size_t limit = static_cast<std::size_t>(-1);
};

AllocBudget& alloc_budget();
void charge(std::size_t units);

[[noreturn]] void raise(const std::string& py_type, const std::string& message);

}  // namespace groundwork::script
