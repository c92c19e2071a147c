#include "kgc/rng.hpp"

#include <sstream>

#include "kgc/error.hpp"

namespace kgc {

std::string Rng::state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::restore(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
    if (!is) throw InvalidConfig("corrupt rng state in checkpoint");
}

}  // namespace kgc
