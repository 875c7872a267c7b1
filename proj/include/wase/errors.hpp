#pragma once

#include <stdexcept>
#include <string>

namespace wase {

// Base class for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor extents do not line up (names both shapes in the message).
class ShapeError : public Error {
public:
    using Error::Error;
};

// A data invariant was violated; message names the record id.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A corpus or config file could not be parsed; message names file and line.
class ParseError : public Error {
public:
    using Error::Error;
};

// A token, tag, label or edge type outside the closed vocabularies.
class VocabularyError : public Error {
public:
    using Error::Error;
};

class ChecksumError : public Error {
public:
    using Error::Error;
};

class VersionError : public Error {
public:
    using Error::Error;
};

// Training loss became non-finite.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// Exhaustive matcher asked to handle an instance above its size cap.
class SizeLimitError : public Error {
public:
    using Error::Error;
};

}  // namespace wase
