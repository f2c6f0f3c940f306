#include "uwbmap/errors.hpp"

namespace uwbmap {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Format: return "format error";
        case ErrorKind::Length: return "length error";
        case ErrorKind::Range: return "range error";
        case ErrorKind::Order: return "stream order error";
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::Config: return "configuration error";
        case ErrorKind::Io: return "io error";
        case ErrorKind::Empty: return "empty input";
    }
    return "error";
}

namespace {

std::string decorate(ErrorKind kind, const std::string& message, std::size_t line) {
    std::string out = to_string(kind);
    if (line > 0) {
        out += " at line " + std::to_string(line);
    }
    out += ": ";
    out += message;
    return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::size_t line)
    : std::runtime_error(decorate(kind, message, line)), kind_(kind), line_(line), detail_(message) {}

}  // namespace uwbmap
