#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace icecontour {

// Domain error taxonomy. Every throw carries a human-readable what();
// config_error additionally keeps the individual violations so callers
// can report all of them, not just the first.

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : error {
    using error::error;
};

// Grid/shape mismatch between inputs that must live on the same grid.
struct mismatch_error : error {
    using error::error;
};

struct geometry_error : error {
    using error::error;
};

struct fit_error : error {
    using error::error;
};

struct config_error : error {
    explicit config_error(std::vector<std::string> violations)
        : error(join(violations)), items(std::move(violations)) {}
    std::vector<std::string> items;

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid configuration:";
        for (const auto& e : v) {
            s += "\n  - ";
            s += e;
        }
        return s;
    }
};

} // namespace icecontour
