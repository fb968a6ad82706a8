#pragma once

#include <stdexcept>
#include <string>

namespace voxfuse {

// Error categories, mirrored one-to-one by the C API status codes.
enum class Errc {
    invalid_argument = 1,
    io = 2,
    format = 3,
    state = 4,
    numeric = 5,
    internal = 6,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

} // namespace voxfuse
