#pragma once

#include <string>

#include "nsar/factlang.hpp"

namespace refeval {

/// Independently written evaluator for the restricted code subset: it parses
/// straight to lazily-invoked closures instead of an AST and shares no code
/// with the production interpreter. Used purely as a conformance oracle.
struct Result {
    std::string status;  // ok | parse_error | unsupported_construct | runtime_error
    std::string value;   // repr of the answer when status == ok
};

Result evaluate(const std::string& source, const nsar::FactSet& facts);

}  // namespace refeval
