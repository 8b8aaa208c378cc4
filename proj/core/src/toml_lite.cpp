#include "bdsde/toml_lite.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bdsde {

namespace {

[[noreturn]] void fail_line(int line, const std::string& what) {
    throw std::invalid_argument("config line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void fail_key(const std::string& key, const std::string& what) {
    throw std::invalid_argument("config key '" + key + "': " + what);
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// strips a trailing comment, respecting quoted strings
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t p = 0; p < s.size(); ++p) {
        const char ch = s[p];
        if (ch == '"' && (p == 0 || s[p - 1] != '\\')) in_str = !in_str;
        if (ch == '#' && !in_str) return s.substr(0, p);
    }
    return s;
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char ch : k)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') return false;
    return true;
}

bool parse_number(const std::string& tok, TomlValue& v) {
    if (tok.empty()) return false;
    bool int_like = true;
    for (std::size_t p = 0; p < tok.size(); ++p) {
        const char ch = tok[p];
        if (std::isdigit(static_cast<unsigned char>(ch))) continue;
        if ((ch == '+' || ch == '-') && p == 0) continue;
        if (ch == '.' || ch == 'e' || ch == 'E' || ch == '+' || ch == '-') {
            int_like = false;
            continue;
        }
        return false;
    }
    char* end = nullptr;
    if (int_like) {
        errno = 0;
        const long long n = std::strtoll(tok.c_str(), &end, 10);
        if (end != tok.c_str() + tok.size() || errno == ERANGE) return false;
        v.kind = TomlValue::Kind::integer;
        v.i = n;
        v.f = static_cast<double>(n);
        return true;
    }
    const double x = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) return false;
    v.kind = TomlValue::Kind::floating;
    v.f = x;
    return true;
}

TomlValue parse_value(const std::string& raw, int line) {
    TomlValue v;
    const std::string tok = trim(raw);
    if (tok.empty()) fail_line(line, "missing value");
    if (tok.front() == '"') {
        if (tok.size() < 2 || tok.back() != '"') fail_line(line, "unterminated string");
        v.kind = TomlValue::Kind::string;
        for (std::size_t p = 1; p + 1 < tok.size(); ++p) {
            if (tok[p] == '\\' && p + 2 < tok.size()) {
                const char n = tok[p + 1];
                if (n == '"' || n == '\\') {
                    v.s.push_back(n);
                    ++p;
                    continue;
                }
            }
            v.s.push_back(tok[p]);
        }
        return v;
    }
    if (tok == "true" || tok == "false") {
        v.kind = TomlValue::Kind::boolean;
        v.b = tok == "true";
        return v;
    }
    if (tok.front() == '[') {
        if (tok.back() != ']') fail_line(line, "unterminated array");
        v.kind = TomlValue::Kind::array;
        std::string body = tok.substr(1, tok.size() - 2);
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            TomlValue elem;
            if (!parse_number(item, elem)) fail_line(line, "array element '" + item + "' is not a number");
            v.arr.push_back(elem.f);
        }
        return v;
    }
    if (!parse_number(tok, v)) fail_line(line, "cannot parse value '" + tok + "'");
    return v;
}

const TomlValue& find_value(const TomlTable& t, const std::string& key) {
    auto it = t.values.find(key);
    if (it == t.values.end()) fail_key(key, "missing");
    return it->second;
}

} // namespace

std::int64_t TomlTable::get_int(const std::string& key) const {
    const TomlValue& v = find_value(*this, key);
    if (v.kind == TomlValue::Kind::integer) return v.i;
    if (v.kind == TomlValue::Kind::floating) {
        const auto n = static_cast<std::int64_t>(v.f);
        if (static_cast<double>(n) == v.f) return n;
    }
    fail_key(key, "expected an integer");
}

double TomlTable::get_double(const std::string& key) const {
    const TomlValue& v = find_value(*this, key);
    if (v.kind == TomlValue::Kind::integer) return static_cast<double>(v.i);
    if (v.kind == TomlValue::Kind::floating) return v.f;
    fail_key(key, "expected a number");
}

bool TomlTable::get_bool(const std::string& key) const {
    const TomlValue& v = find_value(*this, key);
    if (v.kind != TomlValue::Kind::boolean) fail_key(key, "expected true/false");
    return v.b;
}

const std::string& TomlTable::get_string(const std::string& key) const {
    const TomlValue& v = find_value(*this, key);
    if (v.kind != TomlValue::Kind::string) fail_key(key, "expected a string");
    return v.s;
}

std::vector<std::int64_t> TomlTable::get_int_array(const std::string& key) const {
    const TomlValue& v = find_value(*this, key);
    if (v.kind != TomlValue::Kind::array) fail_key(key, "expected an array");
    std::vector<std::int64_t> out;
    out.reserve(v.arr.size());
    for (double x : v.arr) {
        const auto n = static_cast<std::int64_t>(x);
        if (static_cast<double>(n) != x) fail_key(key, "expected integer entries");
        out.push_back(n);
    }
    return out;
}

std::vector<double> TomlTable::get_double_array(const std::string& key) const {
    const TomlValue& v = find_value(*this, key);
    if (v.kind != TomlValue::Kind::array) fail_key(key, "expected an array");
    return v.arr;
}

const TomlTable& TomlDoc::table(const std::string& name) const {
    auto it = tables.find(name);
    if (it == tables.end()) throw std::invalid_argument("config: missing section [" + name + "]");
    return it->second;
}

TomlDoc parse_toml(const std::string& text) {
    TomlDoc doc;
    TomlTable* current = &doc.root;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(strip_comment(line));
        // continuation for arrays spanning lines
        while (!s.empty() && std::count(s.begin(), s.end(), '[') > std::count(s.begin(), s.end(), ']')) {
            std::string next;
            if (!std::getline(in, next)) fail_line(line_no, "unterminated array");
            ++line_no;
            s += " " + trim(strip_comment(next));
        }
        if (s.empty()) continue;
        if (s.front() == '[') {
            const bool is_array = s.size() > 1 && s[1] == '[';
            const std::string close = is_array ? "]]" : "]";
            if (s.size() < 2 * close.size() + 1 || s.substr(s.size() - close.size()) != close)
                fail_line(line_no, "malformed section header");
            const std::string name = trim(s.substr(is_array ? 2 : 1, s.size() - 2 * close.size()));
            if (!valid_key(name)) fail_line(line_no, "invalid section name '" + name + "'");
            if (is_array) {
                doc.table_arrays[name].emplace_back();
                current = &doc.table_arrays[name].back();
            } else {
                if (doc.tables.count(name)) fail_line(line_no, "duplicate section [" + name + "]");
                current = &doc.tables[name];
            }
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) fail_line(line_no, "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        if (!valid_key(key)) fail_line(line_no, "invalid key '" + key + "'");
        if (current->values.count(key)) fail_line(line_no, "duplicate key '" + key + "'");
        current->values[key] = parse_value(s.substr(eq + 1), line_no);
    }
    return doc;
}

TomlDoc parse_toml_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_toml(ss.str());
}

} // namespace bdsde
