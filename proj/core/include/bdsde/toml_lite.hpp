#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bdsde {

// Minimal declarative config reader covering what scenario files use:
// bare keys, [tables], [[table arrays]], strings, booleans, integers,
// floats and flat numeric arrays. Errors carry line numbers; table
// accessors name the missing or mistyped key.
struct TomlValue {
    enum class Kind { boolean, integer, floating, string, array };
    Kind kind = Kind::integer;
    bool b = false;
    std::int64_t i = 0;
    double f = 0.0;
    std::string s;
    std::vector<double> arr;
};

struct TomlTable {
    std::map<std::string, TomlValue> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }
    std::int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    const std::string& get_string(const std::string& key) const;
    std::vector<std::int64_t> get_int_array(const std::string& key) const;
    std::vector<double> get_double_array(const std::string& key) const;
};

struct TomlDoc {
    TomlTable root;
    std::map<std::string, TomlTable> tables;
    std::map<std::string, std::vector<TomlTable>> table_arrays;

    bool has_table(const std::string& name) const { return tables.count(name) != 0; }
    const TomlTable& table(const std::string& name) const;
};

TomlDoc parse_toml(const std::string& text);
TomlDoc parse_toml_file(const std::string& path);

} // namespace bdsde
