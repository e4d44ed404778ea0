#include "stegnet/tensor.hpp"

#include <cmath>
#include <sstream>

namespace stegnet {

std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(where) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
}

bool all_finite(const Tensor& t) {
    for (float v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace stegnet
