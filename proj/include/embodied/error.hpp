#pragma once

#include <stdexcept>
#include <string>

namespace embodied {

// Base for every error the library raises; subcommands map these to exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- dataset_io ---
struct BadMagic : Error {
    explicit BadMagic(const std::string& msg) : Error("BadMagic: " + msg) {}
};
struct Truncated : Error {
    explicit Truncated(const std::string& msg) : Error("Truncated: " + msg) {}
};
struct TrailingBytes : Error {
    explicit TrailingBytes(const std::string& msg) : Error("TrailingBytes: " + msg) {}
};
struct LabelOutOfRange : Error {
    explicit LabelOutOfRange(const std::string& msg) : Error("LabelOutOfRange: " + msg) {}
};
struct SizeTooLarge : Error {
    explicit SizeTooLarge(const std::string& msg) : Error("SizeTooLarge: " + msg) {}
};
struct DataMissing : Error {
    explicit DataMissing(const std::string& msg) : Error("DataMissing: " + msg) {}
};

// --- tensors / layers ---
struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& msg) : Error("ShapeMismatch: " + msg) {}
};
struct MissingForwardState : Error {
    explicit MissingForwardState(const std::string& msg) : Error("MissingForwardState: " + msg) {}
};

// --- embodiment ---
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error("ParseError: " + msg) {}
};
struct RangeViolation : Error {
    explicit RangeViolation(const std::string& msg) : Error("RangeViolation: " + msg) {}
};
struct DuplicateCode : Error {
    explicit DuplicateCode(const std::string& msg) : Error("DuplicateCode: " + msg) {}
};
struct MissingDigit : Error {
    explicit MissingDigit(const std::string& msg) : Error("MissingDigit: " + msg) {}
};
struct DidNotConverge : Error {
    explicit DidNotConverge(const std::string& msg) : Error("DidNotConverge: " + msg) {}
};

// --- models ---
struct MissingPretrainedLink : Error {
    explicit MissingPretrainedLink(const std::string& msg) : Error("MissingPretrainedLink: " + msg) {}
};

// --- training / experiments ---
struct EmptyDataset : Error {
    explicit EmptyDataset(const std::string& msg) : Error("EmptyDataset: " + msg) {}
};
struct NonPositiveSize : Error {
    explicit NonPositiveSize(const std::string& msg) : Error("NonPositiveSize: " + msg) {}
};
struct ConfigInvalid : Error {
    explicit ConfigInvalid(const std::string& msg) : Error("ConfigInvalid: " + msg) {}
};
struct DegenerateSample : Error {
    explicit DegenerateSample(const std::string& msg) : Error("DegenerateSample: " + msg) {}
};
struct IncompleteGrid : Error {
    explicit IncompleteGrid(const std::string& msg) : Error("IncompleteGrid: " + msg) {}
};

} // namespace embodied
