#pragma once

#include <stdexcept>
#include <string>

namespace svc {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A tensor argument had the wrong rank or dimensions.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// A scalar argument or configuration value was out of range.
class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// A streaming call was made with less input than the operation needs.
class InsufficientInputError : public Error {
public:
    explicit InsufficientInputError(const std::string& msg) : Error(msg) {}
};

// An internal invariant failed; indicates a bug, not bad user input.
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Base for failures while reading a model container.
class LoadError : public Error {
public:
    explicit LoadError(const std::string& msg) : Error(msg) {}
};

class BadMagicError : public LoadError {
public:
    explicit BadMagicError(const std::string& msg) : LoadError(msg) {}
};

class BadVersionError : public LoadError {
public:
    explicit BadVersionError(const std::string& msg) : LoadError(msg) {}
};

class TruncatedFileError : public LoadError {
public:
    explicit TruncatedFileError(const std::string& msg) : LoadError(msg) {}
};

class MissingTensorError : public LoadError {
public:
    explicit MissingTensorError(const std::string& msg) : LoadError(msg) {}
};

class UnknownTensorError : public LoadError {
public:
    explicit UnknownTensorError(const std::string& msg) : LoadError(msg) {}
};

}  // namespace svc
