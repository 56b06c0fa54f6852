#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sfdl {

// Flat array holding every weight of one onboard model. Every protocol layer
// exchanges models in this form and never looks inside.
class ParameterVector {
public:
    ParameterVector() = default;
    explicit ParameterVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
    explicit ParameterVector(std::vector<double> values) : values_(std::move(values)) {}
    ParameterVector(std::initializer_list<double> values) : values_(values) {}

    std::size_t dim() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }
    auto begin() noexcept { return values_.begin(); }
    auto end() noexcept { return values_.end(); }

    bool all_finite() const noexcept;

    friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

private:
    std::vector<double> values_;
};

// Throws ConfigurationError when the two dims differ.
void require_same_dim(const ParameterVector& a, const ParameterVector& b, const char* context);

// 64-bit FNV-1a over the IEEE-754 bytes of every entry; used as a compact
// fingerprint of a model in round logs.
std::uint64_t digest(const ParameterVector& params) noexcept;

inline constexpr std::uint64_t kDigestSeed = 0xcbf29ce484222325ULL;

// Continues an FNV-1a hash over more values, so several arrays can share one digest.
std::uint64_t digest_values(std::span<const double> values, std::uint64_t hash = kDigestSeed) noexcept;
std::string to_hex(std::uint64_t value);
std::string digest_hex(const ParameterVector& params);

}  // namespace sfdl
