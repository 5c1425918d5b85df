#include "pival/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/info_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pival/errors.hpp"

namespace pival {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

template <class T>
T convert(const std::string& key, const std::string& raw) {
    std::istringstream in(raw);
    T v{};
    in >> std::noskipws >> v;
    if (in.fail() || !in.eof()) throw ParseError("config key '" + key + "': cannot convert '" + raw + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& raw) {
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ParseError("config key '" + key + "': expected a boolean, got '" + raw + "'");
}

template <class T>
Setter field(T RunConfig::*member) {
    return [member](RunConfig& c, const std::string& raw) {
        if constexpr (std::is_same_v<T, std::string>) {
            c.*member = raw;
        } else if constexpr (std::is_same_v<T, bool>) {
            c.*member = to_bool("", raw);
        } else {
            c.*member = convert<T>("", raw);
        }
    };
}

const std::map<std::string, Setter>& schema() {
    static const std::map<std::string, Setter> s{
        {"seed", field(&RunConfig::seed)},
        {"threads", field(&RunConfig::threads)},
        {"allow_boundary", field(&RunConfig::allow_boundary)},
        {"data.path", field(&RunConfig::data_path)},
        {"data.study", field(&RunConfig::study)},
        {"data.outcome", field(&RunConfig::outcome)},
        {"model.family", field(&RunConfig::family)},
        {"model.link", field(&RunConfig::link)},
        {"model.exposure_scale", field(&RunConfig::exposure_scale)},
        {"priors.preset", field(&RunConfig::prior)},
        {"priors.resolution", field(&RunConfig::resolution)},
        {"priors.half_width_se", field(&RunConfig::half_width_se)},
        {"posterior.method", field(&RunConfig::method)},
        {"posterior.chains", field(&RunConfig::chains)},
        {"posterior.draws", field(&RunConfig::draws)},
        {"posterior.burn_in", field(&RunConfig::burn_in)},
        {"decision.epsilon", field(&RunConfig::epsilon)},
        {"decision.epsilon_loss", field(&RunConfig::epsilon_loss)},
        {"decision.c", field(&RunConfig::c)},
        {"decision.client_capital", field(&RunConfig::client_capital)},
        {"decision.analyst_capital", field(&RunConfig::analyst_capital)},
        {"decision.alpha", field(&RunConfig::alpha)},
        {"decision.utility", field(&RunConfig::utility)},
        {"replication.n_sim", field(&RunConfig::n_sim)},
        {"replication.kernel", field(&RunConfig::kernel)},
        {"replication.min_events", field(&RunConfig::min_events)},
        {"replication.boundary_is_failure", field(&RunConfig::boundary_is_failure)},
        {"replication.bayes", [](RunConfig& c, const std::string& raw) { c.bayes.push_back(raw); }},
        {"output.json", field(&RunConfig::out)},
        {"output.csv", field(&RunConfig::csv)},
    };
    return s;
}

void walk(const boost::property_tree::ptree& node, const std::string& prefix, RunConfig& cfg) {
    for (const auto& [name, child] : node) {
        const std::string key = prefix.empty() ? name : prefix + "." + name;
        if (!child.empty()) {
            if (!child.data().empty()) throw ParseError("config key '" + key + "' has both a value and a block");
            walk(child, key, cfg);
            continue;
        }
        const auto it = schema().find(key);
        if (it == schema().end()) throw ParseError("unknown config key '" + key + "'");
        try {
            it->second(cfg, child.data());
        } catch (const ParseError&) {
            throw ParseError("config key '" + key + "': bad value '" + child.data() + "'");
        }
    }
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& source) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::read_info(in, tree);
    } catch (const boost::property_tree::info_parser_error& e) {
        throw ParseError(source + ": line " + std::to_string(e.line()) + ": " + e.message());
    }
    RunConfig cfg;
    walk(tree, "", cfg);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read config " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_run_config_text(ss.str(), path);
}

}  // namespace pival
