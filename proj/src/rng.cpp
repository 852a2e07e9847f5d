#include "wm/rng.hpp"

#include <sstream>

#include "wm/errors.hpp"

namespace wm {

std::string RandomStream::save_state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
}

void RandomStream::load_state(const std::string& text) {
    std::istringstream is(text);
    is >> eng_;
    if (is.fail()) throw IoError("invalid RNG state string");
}

}  // namespace wm
