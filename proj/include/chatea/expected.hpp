#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace chatea {

// Minimal value-or-error carrier for parse results. The error string keeps the
// raw offending input so callers can log or retry with full context.
template <typename T>
class Expected {
public:
    static Expected ok(T value) {
        Expected e;
        e.value_ = std::move(value);
        return e;
    }

    static Expected fail(std::string error) {
        Expected e;
        e.error_ = std::move(error);
        return e;
    }

    bool has_value() const { return value_.has_value(); }
    explicit operator bool() const { return has_value(); }

    const T& value() const {
        if (!value_) throw std::runtime_error("Expected: no value; error: " + error_);
        return *value_;
    }
    T& value() {
        if (!value_) throw std::runtime_error("Expected: no value; error: " + error_);
        return *value_;
    }

    const std::string& error() const { return error_; }

private:
    Expected() = default;
    std::optional<T> value_;
    std::string error_;
};

}  // namespace chatea
