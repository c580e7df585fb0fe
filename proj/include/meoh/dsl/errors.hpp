#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace meoh::dsl {

enum class ErrorKind { Parse, Signature, StepBudget, Numeric, Shape, Type };

std::string_view error_kind_name(ErrorKind kind);

class DslError : public std::runtime_error {
public:
    DslError(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public DslError {
public:
    ParseError(int line, int column, std::string found, std::vector<std::string> expected);

    int line() const { return line_; }
    int column() const { return column_; }
    const std::string& found() const { return found_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    int line_;
    int column_;
    std::string found_;
    std::vector<std::string> expected_;
};

class SignatureError : public DslError {
public:
    explicit SignatureError(const std::string& what) : DslError(ErrorKind::Signature, what) {}
};

class StepBudgetExceeded : public DslError {
public:
    explicit StepBudgetExceeded(const std::string& what) : DslError(ErrorKind::StepBudget, what) {}
};

class NumericError : public DslError {
public:
    explicit NumericError(const std::string& what) : DslError(ErrorKind::Numeric, what) {}
};

class ShapeError : public DslError {
public:
    explicit ShapeError(const std::string& what) : DslError(ErrorKind::Shape, what) {}
};

class TypeError : public DslError {
public:
    explicit TypeError(const std::string& what) : DslError(ErrorKind::Type, what) {}
};

}  // namespace meoh::dsl
