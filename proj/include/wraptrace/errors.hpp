#pragma once

#include <stdexcept>
#include <string>

namespace wraptrace {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input text that does not match the expected grammar (hex, log lines,
// registry/roots/scenario files).
struct ParseError : Error {
    using Error::Error;
};

// A log whose topic0 matches the Transfer signature but whose ABI shape is
// wrong. Distinct from "not a transfer", which is not an error.
struct MalformedLogError : Error {
    using Error::Error;
};

// (block_number, log_index) regressed or repeated in a stream that must be
// strictly sorted.
struct OrderingError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Network failure that survived the retry budget.
struct RpcError : Error {
    using Error::Error;
};

// Provider rejected a single-block request; the range cannot be subdivided
// any further.
struct ProviderLimitError : Error {
    using Error::Error;
};

// Provider answered, but not with anything we can interpret.
struct MalformedResponseError : Error {
    using Error::Error;
};

// Cache directory contents disagree with the checkpoint (checksum mismatch,
// overlapping segments, unparseable files).
struct CacheError : Error {
    using Error::Error;
};

// Requested range is not fully covered by cached segments.
struct CoverageError : Error {
    using Error::Error;
};

struct DuplicateEdgeError : Error {
    using Error::Error;
};

struct UnreachableParentError : Error {
    using Error::Error;
};

struct CycleError : Error {
    using Error::Error;
};

// composed_share over an empty (root, bucket) cell.
struct NoDataError : Error {
    using Error::Error;
};

struct InfeasibleScenarioError : Error {
    using Error::Error;
};

}  // namespace wraptrace
