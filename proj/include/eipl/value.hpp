#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace eipl {

/// Argument and return values exchanged with candidate functions.
///
/// Mirrors the subset of Python values the bank needs: None, bool, int,
/// float, str and (nested) list. Dictionaries and sets are deliberately
/// not representable.
class Value {
public:
    struct None {
        bool operator==(const None&) const = default;
    };
    using List = std::vector<Value>;
    using Storage = std::variant<None, bool, std::int64_t, double, std::string, List>;

    static constexpr int kMaxDepth = 4;

    Value() = default;
    Value(None) {}
    Value(bool b) : data_(b) {}
    Value(int i) : data_(static_cast<std::int64_t>(i)) {}
    Value(std::int64_t i) : data_(i) {}
    Value(double d) : data_(d) {}
    Value(const char* s) : data_(std::string(s)) {}
    Value(std::string s) : data_(std::move(s)) {}
    Value(List l) : data_(std::move(l)) {}

    bool is_none() const { return std::holds_alternative<None>(data_); }
    bool is_bool() const { return std::holds_alternative<bool>(data_); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(data_); }
    bool is_float() const { return std::holds_alternative<double>(data_); }
    bool is_number() const { return is_int() || is_float(); }
    bool is_text() const { return std::holds_alternative<std::string>(data_); }
    bool is_list() const { return std::holds_alternative<List>(data_); }

    bool as_bool() const { return std::get<bool>(data_); }
    std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
    double as_float() const { return std::get<double>(data_); }
    double as_number() const { return is_int() ? static_cast<double>(as_int()) : as_float(); }
    const std::string& as_text() const { return std::get<std::string>(data_); }
    const List& as_list() const { return std::get<List>(data_); }

    const Storage& storage() const { return data_; }

    /// Number of nested list levels; scalars have depth 0.
    int depth() const;

    /// Exact structural equality (1 != 1.0, True != 1). Use value_equal for grading.
    bool operator==(const Value& other) const = default;

    /// Python-literal rendering, e.g. `[1, 'ab', None, True]`.
    std::string to_literal() const;

    nlohmann::json to_json() const;
    /// Throws std::invalid_argument for objects, NaN/inf, out-of-range
    /// integers or nesting deeper than kMaxDepth.
    static Value from_json(const nlohmann::json& j);

private:
    Storage data_;
};

/// One call's positional arguments.
struct ArgumentTuple {
    std::vector<Value> values;

    std::size_t arity() const { return values.size(); }
    bool operator==(const ArgumentTuple&) const = default;

    std::string to_literal() const;
    nlohmann::json to_json() const;
    static ArgumentTuple from_json(const nlohmann::json& j);
};

}  // namespace eipl
