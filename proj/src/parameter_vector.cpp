#include "sfdl/parameter_vector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "sfdl/errors.hpp"

namespace sfdl {

bool ParameterVector::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_dim(const ParameterVector& a, const ParameterVector& b, const char* context) {
    if (a.dim() != b.dim()) {
        throw ConfigurationError(std::string(context) + ": dimension mismatch (" +
                                 std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
    }
}

std::uint64_t digest(const ParameterVector& params) noexcept {
    return digest_values(params.values());
}

std::uint64_t digest_values(std::span<const double> values, std::uint64_t hash) noexcept {
    for (double v : values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int byte = 0; byte < 8; ++byte) {
            hash ^= (bits >> (8 * byte)) & 0xffU;
            hash *= 0x100000001b3ULL;
        }
    }
    return hash;
}

std::string to_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string digest_hex(const ParameterVector& params) { return to_hex(digest(params)); }

}  // namespace sfdl
