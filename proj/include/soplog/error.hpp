#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace soplog {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Text input that does not match a grammar. Line and column are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
          line_(line), column_(column), message_(msg) {}

    int line() const { return line_; }
    int column() const { return column_; }
    const std::string& bare_message() const { return message_; }

private:
    int line_;
    int column_;
    std::string message_;
};

class StructureError : public Error {
public:
    using Error::Error;
};

class FormulaError : public Error {
public:
    using Error::Error;
};

class CaptureError : public FormulaError {
public:
    using FormulaError::FormulaError;
};

class EvalError : public Error {
public:
    using Error::Error;
};

class BudgetExceeded : public EvalError {
public:
    BudgetExceeded(const std::string& where, std::uint64_t count)
        : EvalError("budget exceeded at " + where + " (" + std::to_string(count) + ")"),
          where_(where), count_(count) {}

    const std::string& where() const { return where_; }
    std::uint64_t count() const { return count_; }

private:
    std::string where_;
    std::uint64_t count_;
};

class MachineError : public Error {
public:
    using Error::Error;
};

class CompileError : public Error {
public:
    using Error::Error;
};

} // namespace soplog
