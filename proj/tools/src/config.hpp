#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace weylworlds::cli {

enum class KeyType { string, real, integer, boolean, real_list, integer_list, choice, path };

struct KeySpec {
    std::string key;  // "section.name"
    KeyType type;
    std::string fallback;  // empty: no default
    std::string description;
    std::vector<std::string> choices;
    double lower = -1e300;  // inclusive unless lower_open
    bool lower_open = false;
    double upper = 1e300;
};

// Every accepted key, in reference-page order.
const std::vector<KeySpec>& key_registry();
const KeySpec* find_key(std::string_view key);
std::string type_name(const KeySpec& k);

// Markdown table of all keys, grouped by section.
std::string key_reference_markdown();

// Flat "[section]" / "name = value" text. Lines starting with # or ; are
// comments; so is anything after " #" on a value line.
class Config {
public:
    static Config parse(std::string_view text, std::string origin,
                        std::filesystem::path base_dir = {});
    static Config load(const std::filesystem::path& path);

    const std::string& origin() const { return origin_; }
    const std::filesystem::path& base_dir() const { return base_dir_; }

    bool has(const std::string& key) const;  // set explicitly or defaulted
    bool explicitly_set(const std::string& key) const { return values_.count(key) != 0; }
    std::string str(const std::string& key) const;
    double real(const std::string& key) const;
    long integer(const std::string& key) const;
    bool boolean(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;
    std::vector<long> integers(const std::string& key) const;
    // Relative paths resolve against base_dir.
    std::filesystem::path path(const std::string& key) const;

    // Canonical dump of every explicitly set key, sorted.
    std::map<std::string, std::string> explicit_values() const { return values_; }

private:
    std::string raw(const std::string& key) const;

    std::string origin_;
    std::filesystem::path base_dir_;
    std::map<std::string, std::string> values_;
};

// Type, range, choice and per-mode presence checks. Throws SchemaError
// listing every problem found.
void validate(const Config& c);

}  // namespace weylworlds::cli
