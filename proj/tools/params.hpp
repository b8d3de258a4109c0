#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace vaelab::cli {

/// Parses "inf", "-inf", "nan" and ordinary decimal numbers.
double parse_real(const std::string& s);

/// "a,b,c", "linspace:lo:hi:n" or "logspace:lo:hi:n" (endpoints inclusive).
std::vector<double> parse_grid(const std::string& s);

/// Named parameters settable from the command line (--some-key) or from the
/// JSON config (key some_key). Command-line values win over the file.
class ParamSet {
public:
    explicit ParamSet(CLI::App* app);

    void real(const std::string& key, double& v, const std::string& help, bool required = false);
    void integer(const std::string& key, int& v, const std::string& help, bool required = false);
    void u64(const std::string& key, std::uint64_t& v, const std::string& help);
    void text(const std::string& key, std::string& v, const std::string& help);
    void flag(const std::string& key, bool& v, const std::string& help);
    void grid(const std::string& key, std::vector<double>& v, const std::string& help, bool required = false);
    void u64_list(const std::string& key, std::vector<std::uint64_t>& v, const std::string& help);

    /// Apply the config file and command-line values; throws std::invalid_argument
    /// naming the first missing required key.
    void resolve();

    /// Resolved values of every registered key.
    nlohmann::json echo() const;

private:
    struct Entry {
        std::string key;
        std::string raw;
        CLI::Option* opt = nullptr;
        bool required = false;
        bool is_flag = false;
        bool flag_value = false;
        std::function<void(const std::string&)> from_string;
        std::function<void(const nlohmann::json&)> from_json;
        std::function<nlohmann::json()> to_json;
    };

    Entry& add(const std::string& key, const std::string& help, bool required);

    CLI::App* app_;
    std::string config_path_;
    std::vector<std::unique_ptr<Entry>> entries_;
};

}  // namespace vaelab::cli
