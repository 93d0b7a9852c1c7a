#include "eipl/value.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace eipl {

namespace {

std::string float_literal(double d) {
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), d);
    std::string s(buf, end);
    if (s.find_first_of(".en") == std::string::npos) s += ".0";
    return s;
}

// Same quoting choice as Python's repr.
std::string quote_text(const std::string& s) {
    const char q = s.find('\'') != std::string::npos && s.find('"') == std::string::npos ? '"' : '\'';
    std::string out(1, q);
    for (unsigned char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\'':
            case '"':
                if (c == static_cast<unsigned char>(q)) out += '\\';
                out += static_cast<char>(c);
                break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (c < 0x20) {
                    char hex[8];
                    std::snprintf(hex, sizeof(hex), "\\x%02x", c);
                    out += hex;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    out += q;
    return out;
}

Value from_json_at(const nlohmann::json& j, int depth) {
    switch (j.type()) {
        case nlohmann::json::value_t::null: return Value{};
        case nlohmann::json::value_t::boolean: return Value{j.get<bool>()};
        case nlohmann::json::value_t::number_integer: return Value{j.get<std::int64_t>()};
        case nlohmann::json::value_t::number_unsigned: {
            auto u = j.get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(INT64_MAX))
                throw std::invalid_argument("integer out of range");
            return Value{static_cast<std::int64_t>(u)};
        }
        case nlohmann::json::value_t::number_float: {
            double d = j.get<double>();
            if (!std::isfinite(d)) throw std::invalid_argument("non-finite float");
            return Value{d};
        }
        case nlohmann::json::value_t::string: return Value{j.get<std::string>()};
        case nlohmann::json::value_t::array: {
            if (depth >= Value::kMaxDepth)
                throw std::invalid_argument("list nesting deeper than " +
                                            std::to_string(Value::kMaxDepth));
            Value::List items;
            items.reserve(j.size());
            for (const auto& e : j) items.push_back(from_json_at(e, depth + 1));
            return Value{std::move(items)};
        }
        default:
            throw std::invalid_argument(std::string("unsupported value type: ") + j.type_name());
    }
}

}  // namespace

int Value::depth() const {
    if (!is_list()) return 0;
    int deepest = 0;
    for (const auto& v : as_list()) deepest = std::max(deepest, v.depth());
    return deepest + 1;
}

std::string Value::to_literal() const {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, None>) {
                return "None";
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "True" : "False";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                return float_literal(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return quote_text(v);
            } else {
                std::string out = "[";
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ", ";
                    out += v[i].to_literal();
                }
                return out + "]";
            }
        },
        data_);
}

nlohmann::json Value::to_json() const {
    return std::visit(
        [](const auto& v) -> nlohmann::json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, None>) {
                return nullptr;
            } else if constexpr (std::is_same_v<T, List>) {
                auto arr = nlohmann::json::array();
                for (const auto& e : v) arr.push_back(e.to_json());
                return arr;
            } else {
                return v;
            }
        },
        data_);
}

Value Value::from_json(const nlohmann::json& j) { return from_json_at(j, 0); }

std::string ArgumentTuple::to_literal() const {
    std::string out = "(";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += values[i].to_literal();
    }
    if (values.size() == 1) out += ",";
    return out + ")";
}

nlohmann::json ArgumentTuple::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& v : values) arr.push_back(v.to_json());
    return arr;
}

ArgumentTuple ArgumentTuple::from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw std::invalid_argument("argument tuple must be a list");
    ArgumentTuple t;
    for (const auto& e : j) t.values.push_back(Value::from_json(e));
    return t;
}

}  // namespace eipl
