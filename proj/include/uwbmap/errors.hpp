#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uwbmap {

enum class ErrorKind {
    Format,  // malformed record (field count, non-numeric, bad JSON)
    Length,  // CIR arrays of unequal or insufficient length
    Range,   // index or value out of its allowed interval
    Order,   // timestamps going backwards in a stream
    Domain,  // math precondition violated
    Config,  // bad parameters / scene / truth file
    Io,      // file missing or unwritable
    Empty,   // input that must be non-empty was empty
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::size_t line = 0);

    ErrorKind kind() const noexcept { return kind_; }
    // 1-based line number in the source stream, 0 when not applicable.
    std::size_t line() const noexcept { return line_; }
    // The message without the kind / line decoration.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::size_t line_;
    std::string detail_;
};

}  // namespace uwbmap
