#ifndef OSCNET_ERRORS_HPP
#define OSCNET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace oscnet {

// Bad user-supplied configuration (bad key, bad value, violated invariant).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: divergence, no convergence, no bracket.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failure, always carries the offending path in the message.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Delay lookup beyond the stored history window.
struct out_of_window_error : numeric_error {
    explicit out_of_window_error(const std::string& msg) : numeric_error(msg) {}
};

} // namespace oscnet

#endif
