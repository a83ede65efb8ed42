#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <utility>

namespace gridreduce {

// Opaque bus identifier, ordered lexicographically.
class BusId {
public:
    BusId() = default;
    explicit BusId(std::string value) : value_(std::move(value)) {}
    explicit BusId(const char* value) : value_(value) {}

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    friend bool operator==(const BusId&, const BusId&) = default;
    friend std::strong_ordering operator<=>(const BusId& a, const BusId& b) {
        return a.value_.compare(b.value_) <=> 0;
    }

private:
    std::string value_;
};

inline std::ostream& operator<<(std::ostream& os, const BusId& id) { return os << id.str(); }

struct BusIdHash {
    std::size_t operator()(const BusId& id) const noexcept { return std::hash<std::string>{}(id.str()); }
};

}  // namespace gridreduce
