#ifndef HOMOWAVE_TOML_LITE_HPP
#define HOMOWAVE_TOML_LITE_HPP

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Minimal TOML subset for problem files: [tables], key = value with
// numbers, booleans, "strings" and (nested) arrays, # comments. Keys are
// flattened to "table.key".

namespace homowave::toml {

class TomlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Value {
    enum class Kind { Number, Bool, String, Array };
    Kind kind = Kind::Number;
    double number = 0.0;
    bool boolean = false;
    std::string string;
    std::vector<Value> array;
};

class Table {
public:
    static Table parse(std::string_view text);
    static Table parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw TomlError("cannot open file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    const Value& get(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw TomlError("missing key: " + key);
        return it->second;
    }

    double get_double(const std::string& key) const {
        const Value& v = get(key);
        if (v.kind != Value::Kind::Number) throw TomlError(key + ": expected a number");
        return v.number;
    }

    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    long get_int(const std::string& key) const {
        const double d = get_double(key);
        const long n = static_cast<long>(d);
        if (static_cast<double>(n) != d) throw TomlError(key + ": expected an integer");
        return n;
    }

    long get_int(const std::string& key, long fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::string get_string(const std::string& key) const {
        const Value& v = get(key);
        if (v.kind != Value::Kind::String) throw TomlError(key + ": expected a string");
        return v.string;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? get_string(key) : fallback;
    }

    const std::vector<Value>& get_array(const std::string& key) const {
        const Value& v = get(key);
        if (v.kind != Value::Kind::Array) throw TomlError(key + ": expected an array");
        return v.array;
    }

    std::vector<std::string> string_array(const std::string& key) const {
        std::vector<std::string> out;
        for (const Value& v : get_array(key)) {
            if (v.kind != Value::Kind::String) throw TomlError(key + ": expected string entries");
            out.push_back(v.string);
        }
        return out;
    }

    std::vector<double> double_array(const std::string& key) const {
        std::vector<double> out;
        for (const Value& v : get_array(key)) {
            if (v.kind != Value::Kind::Number) throw TomlError(key + ": expected numeric entries");
            out.push_back(v.number);
        }
        return out;
    }

private:
    std::map<std::string, Value> entries_;
};

namespace detail {

class ValueParser {
public:
    explicit ValueParser(std::string_view s) : s_(s) {}

    Value run() {
        Value v = value();
        skip();
        if (pos_ != s_.size()) throw TomlError("trailing characters after value: " + std::string(s_));
        return v;
    }

private:
    void skip() {
        while (pos_ < s_.size() &&
               (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
            ++pos_;
    }

    Value value() {
        skip();
        if (pos_ >= s_.size()) throw TomlError("missing value");
        const char c = s_[pos_];
        if (c == '"') return string();
        if (c == '[') return array();
        if (s_.compare(pos_, 4, "true") == 0) {
            pos_ += 4;
            Value v;
            v.kind = Value::Kind::Bool;
            v.boolean = true;
            return v;
        }
        if (s_.compare(pos_, 5, "false") == 0) {
            pos_ += 5;
            Value v;
            v.kind = Value::Kind::Bool;
            v.boolean = false;
            return v;
        }
        return number();
    }

    Value string() {
        ++pos_; // opening quote
        Value v;
        v.kind = Value::Kind::String;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\' && pos_ < s_.size()) {
                const char e = s_[pos_++];
                switch (e) {
                    case 'n': c = '\n'; break;
                    case 't': c = '\t'; break;
                    case '"': c = '"'; break;
                    case '\\': c = '\\'; break;
                    default: throw TomlError(std::string("unsupported escape \\") + e);
                }
            }
            v.string += c;
        }
        if (pos_ >= s_.size()) throw TomlError("unterminated string");
        ++pos_; // closing quote
        return v;
    }

    Value array() {
        ++pos_; // '['
        Value v;
        v.kind = Value::Kind::Array;
        skip();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return v;
        }
        for (;;) {
            v.array.push_back(value());
            skip();
            if (pos_ < s_.size() && s_[pos_] == ',') {
                ++pos_;
                skip();
                if (pos_ < s_.size() && s_[pos_] == ']') { // trailing comma
                    ++pos_;
                    return v;
                }
                continue;
            }
            if (pos_ < s_.size() && s_[pos_] == ']') {
                ++pos_;
                return v;
            }
            throw TomlError("malformed array");
        }
    }

    Value number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::string_view("+-0123456789.eE_").find(s_[pos_]) !=
                                       std::string_view::npos)
            ++pos_;
        std::string digits;
        for (std::size_t i = start; i < pos_; ++i)
            if (s_[i] != '_') digits += s_[i];
        double d = 0.0;
        const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), d);
        if (res.ec != std::errc() || res.ptr != digits.data() + digits.size())
            throw TomlError("malformed number: " + std::string(s_.substr(start, pos_ - start)));
        Value v;
        v.kind = Value::Kind::Number;
        v.number = d;
        return v;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

inline std::string strip(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    return std::string(s.substr(b, e - b + 1));
}

// Removes a trailing comment, respecting quoted strings.
inline std::string strip_comment(std::string_view line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (line[i] == '#' && !in_string) return std::string(line.substr(0, i));
    }
    return std::string(line);
}

} // namespace detail

inline Table Table::parse(std::string_view text) {
    Table t;
    std::string section;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string line = detail::strip(detail::strip_comment(text.substr(pos, nl - pos)));
        pos = nl + 1;
        ++lineno;
        if (line.empty()) {
            if (nl == text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']')
                throw TomlError("line " + std::to_string(lineno) + ": malformed table header");
            section = detail::strip(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw TomlError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::strip(std::string_view(line).substr(0, eq));
        std::string rhs = detail::strip(std::string_view(line).substr(eq + 1));
        // multi-line arrays: keep consuming lines until brackets balance
        auto depth = [](const std::string& s) {
            long d = 0;
            bool in_string = false;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
                if (in_string) continue;
                if (s[i] == '[') ++d;
                if (s[i] == ']') --d;
            }
            return d;
        };
        while (depth(rhs) > 0 && pos <= text.size()) {
            std::size_t nl2 = text.find('\n', pos);
            if (nl2 == std::string_view::npos) nl2 = text.size();
            rhs += ' ';
            rhs += detail::strip(detail::strip_comment(text.substr(pos, nl2 - pos)));
            pos = nl2 + 1;
            ++lineno;
            if (nl2 == text.size()) break;
        }
        const std::string full_key = section.empty() ? key : section + "." + key;
        if (t.entries_.count(full_key))
            throw TomlError("duplicate key: " + full_key);
        t.entries_[full_key] = detail::ValueParser(rhs).run();
        if (nl == text.size()) break;
    }
    return t;
}

} // namespace homowave::toml

#endif
