#pragma once

#include <stdexcept>
#include <string>

namespace horseshoe {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotIrreducible : Error {
    NotIrreducible() : Error("matrix is not irreducible") {}
};
struct NotChaotic : Error {
    NotChaotic() : Error("matrix is reducible or minimal") {}
};
struct NoConvergence : Error {
    using Error::Error;
};
struct BudgetExceeded : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct OutOfRange : Error {
    using Error::Error;
};
struct InvalidBlocks : Error {
    using Error::Error;
};
// Malformed input (bad JSON, missing keys, wrong types).
struct SchemaError : Error {
    using Error::Error;
};
// Schema problem located by a JSON pointer into the parsed document.
struct SchemaPathError : SchemaError {
    SchemaPathError(std::string ptr, const std::string& msg) : SchemaError(msg), pointer(std::move(ptr)) {}
    std::string pointer;
};
// Well-formed input that violates a model invariant.
struct InvariantError : Error {
    using Error::Error;
};

}  // namespace horseshoe
