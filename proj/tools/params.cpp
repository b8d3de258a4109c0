#include "params.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "vaelab/serialize.hpp"

namespace vaelab::cli {

using nlohmann::json;

double parse_real(const std::string& s) {
    if (s == "inf" || s == "+inf" || s == "Inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    if (pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

std::vector<double> parse_grid(const std::string& s) {
    auto split = [](const std::string& text, char sep) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, sep)) parts.push_back(item);
        return parts;
    };
    if (s.rfind("linspace:", 0) == 0 || s.rfind("logspace:", 0) == 0) {
        const auto parts = split(s, ':');
        if (parts.size() != 4) throw std::invalid_argument("grid spec must be kind:lo:hi:n, got '" + s + "'");
        const double lo = parse_real(parts[1]), hi = parse_real(parts[2]);
        const int n = std::stoi(parts[3]);
        if (n < 1) throw std::invalid_argument("grid needs n >= 1");
        const bool logs = parts[0] == "logspace";
        if (logs && !(lo > 0.0 && hi > 0.0)) throw std::invalid_argument("logspace needs positive endpoints");
        std::vector<double> out(n);
        for (int i = 0; i < n; ++i) {
            const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
            out[i] = logs ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))) : lo + t * (hi - lo);
        }
        return out;
    }
    std::vector<double> out;
    for (const auto& p : split(s, ','))
        if (!p.empty()) out.push_back(parse_real(p));
    if (out.empty()) throw std::invalid_argument("empty grid");
    return out;
}

namespace {

std::string flag_name(const std::string& key) {
    std::string f = key;
    for (char& c : f)
        if (c == '_') c = '-';
    return "--" + f;
}

}  // namespace

ParamSet::ParamSet(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "JSON config file (flags override its keys)");
}

ParamSet::Entry& ParamSet::add(const std::string& key, const std::string& help, bool required) {
    auto e = std::make_unique<Entry>();
    e->key = key;
    e->required = required;
    e->opt = app_->add_option(flag_name(key), e->raw, help + (required ? " (required)" : ""));
    entries_.push_back(std::move(e));
    return *entries_.back();
}

void ParamSet::real(const std::string& key, double& v, const std::string& help, bool required) {
    Entry& e = add(key, help, required);
    e.from_string = [&v](const std::string& s) { v = parse_real(s); };
    e.from_json = [&v](const json& j) { v = number_from_json(j); };
    e.to_json = [&v] { return json_number(v); };
}

void ParamSet::integer(const std::string& key, int& v, const std::string& help, bool required) {
    Entry& e = add(key, help, required);
    e.from_string = [&v](const std::string& s) {
        std::size_t pos = 0;
        v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
    };
    e.from_json = [&v](const json& j) { v = j.get<int>(); };
    e.to_json = [&v] { return json(v); };
}

void ParamSet::u64(const std::string& key, std::uint64_t& v, const std::string& help) {
    Entry& e = add(key, help, false);
    e.from_string = [&v](const std::string& s) {
        std::size_t pos = 0;
        v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
    };
    e.from_json = [&v](const json& j) { v = j.get<std::uint64_t>(); };
    e.to_json = [&v] { return json(v); };
}

void ParamSet::text(const std::string& key, std::string& v, const std::string& help) {
    Entry& e = add(key, help, false);
    e.from_string = [&v](const std::string& s) { v = s; };
    e.from_json = [&v](const json& j) { v = j.get<std::string>(); };
    e.to_json = [&v] { return json(v); };
}

void ParamSet::flag(const std::string& key, bool& v, const std::string& help) {
    auto e = std::make_unique<Entry>();
    e->key = key;
    e->is_flag = true;
    e->opt = app_->add_flag(flag_name(key), e->flag_value, help);
    Entry* raw = e.get();
    e->from_string = [&v, raw](const std::string&) { v = raw->flag_value; };
    e->from_json = [&v](const json& j) { v = j.get<bool>(); };
    e->to_json = [&v] { return json(v); };
    entries_.push_back(std::move(e));
}

void ParamSet::grid(const std::string& key, std::vector<double>& v, const std::string& help, bool required) {
    Entry& e = add(key, help + " (list a,b,c or linspace:lo:hi:n / logspace:lo:hi:n)", required);
    e.from_string = [&v](const std::string& s) { v = parse_grid(s); };
    e.from_json = [&v](const json& j) {
        if (j.is_string()) {
            v = parse_grid(j.get<std::string>());
        } else {
            v.clear();
            for (const auto& x : j) v.push_back(number_from_json(x));
        }
    };
    e.to_json = [&v] {
        json a = json::array();
        for (double x : v) a.push_back(json_number(x));
        return a;
    };
}

void ParamSet::u64_list(const std::string& key, std::vector<std::uint64_t>& v, const std::string& help) {
    Entry& e = add(key, help, false);
    e.from_string = [&v](const std::string& s) {
        v.clear();
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) v.push_back(std::stoull(item));
    };
    e.from_json = [&v](const json& j) { v = j.get<std::vector<std::uint64_t>>(); };
    e.to_json = [&v] { return json(v); };
}

void ParamSet::resolve() {
    json file = json::object();
    if (!config_path_.empty()) {
        std::ifstream is(config_path_);
        if (!is) throw std::invalid_argument("cannot read config file " + config_path_);
        try {
            is >> file;
        } catch (const json::exception& ex) {
            throw std::invalid_argument("invalid JSON in " + config_path_ + ": " + ex.what());
        }
        if (!file.is_object()) throw std::invalid_argument("config file must hold a JSON object");
    }
    for (const auto& e : entries_) {
        try {
            if (e->opt->count() > 0) {
                e->from_string(e->raw);
            } else if (file.contains(e->key)) {
                e->from_json(file.at(e->key));
            } else if (e->required) {
                throw std::invalid_argument("missing required parameter " + flag_name(e->key));
            }
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception& ex) {
            throw std::invalid_argument("bad value for " + flag_name(e->key) + ": " + ex.what());
        }
    }
}

json ParamSet::echo() const {
    json j = json::object();
    for (const auto& e : entries_) j[e->key] = e->to_json();
    return j;
}

}  // namespace vaelab::cli
