#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridreduce {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "error"; }
};

#define GRIDREDUCE_ERROR(Name, Tag)                                          \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(what) {}              \
        const char* kind() const noexcept override { return Tag; }          \
    };

GRIDREDUCE_ERROR(DomainError, "domain")
GRIDREDUCE_ERROR(ValidationError, "validation")
GRIDREDUCE_ERROR(IndexError, "index")
GRIDREDUCE_ERROR(NumericalError, "numerical")
GRIDREDUCE_ERROR(NotFoundError, "not-found")
GRIDREDUCE_ERROR(IntegrityError, "integrity")
GRIDREDUCE_ERROR(DegenerateNetworkError, "degenerate")
GRIDREDUCE_ERROR(UnsupportedConfigurationError, "unsupported")
GRIDREDUCE_ERROR(SpecError, "spec")

#undef GRIDREDUCE_ERROR

class DependencyError : public Error {
public:
    DependencyError(const std::string& what, std::vector<std::string> prerequisites)
        : Error(what), prerequisites_(std::move(prerequisites)) {}
    const char* kind() const noexcept override { return "dependency"; }
    const std::vector<std::string>& prerequisites() const noexcept { return prerequisites_; }

private:
    std::vector<std::string> prerequisites_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& message)
        : Error(source + (line ? ":" + std::to_string(line) : "") + (column ? ":" + std::to_string(column) : "") + ": " +
                message),
          source_(source), line_(line), column_(column) {}
    const char* kind() const noexcept override { return "parse"; }
    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::string source_;
    std::size_t line_;
    std::size_t column_;
};

}  // namespace gridreduce
