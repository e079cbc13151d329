#include "cvqkd/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cvqkd/error.hpp"

namespace cvqkd {

namespace {

using boost::property_tree::ptree;

[[noreturn]] void config_error(const std::string& key, const std::string& why) {
    throw Error(ErrorKind::ConfigError, key + ": " + why);
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v)) config_error(key, "not a finite number: '" + text + "'");
    return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const char* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) config_error(key, "not a nonnegative integer: '" + text + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    config_error(key, "expected true or false, got '" + text + "'");
}

int to_int(const std::string& key, const std::string& text) {
    const std::uint64_t v = to_uint(key, text);
    if (v > 1'000'000) config_error(key, "too large");
    return static_cast<int>(v);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"run", {"mode", "direction", "beta", "xi", "eve_reference", "jobs", "out"}},
        {"loss", {"db", "start", "stop", "step"}},
        {"point", {"modulation_variance", "cutoff", "ratio"}},
        {"search",
         {"va_min", "va_max", "va_points", "cutoff_min", "cutoff_max", "cutoff_points", "ratio_min", "ratio_max",
          "ratio_points", "max_refine_evaluations", "simplex_tol"}},
        {"tolerance", {"moments", "mi"}},
        {"baseline", {"trusted_noise", "only"}},
        {"mc", {"samples", "seed", "sigmas"}},
    };
    return keys;
}

void apply_tree(const ptree& tree, RunConfig& cfg) {
    const auto& keys = known_keys();
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            config_error(section, "keys must sit inside a section");
        }
        const auto it = keys.find(section);
        if (it == keys.end()) config_error(section, "unknown section");
        for (const auto& [key, node] : body) {
            const std::string path = section + "." + key;
            if (!it->second.count(key)) config_error(path, "unknown key");
            const std::string v = node.get_value<std::string>();
            if (section == "run") {
                if (key == "mode") cfg.mode = parse_mode(v);
                else if (key == "direction") cfg.direction = parse_direction(v);
                else if (key == "beta") cfg.beta = to_double(path, v);
                else if (key == "xi") cfg.xi = to_double(path, v);
                else if (key == "eve_reference") cfg.eve_reference = parse_eve_reference(v);
                else if (key == "jobs") cfg.jobs = static_cast<unsigned>(to_int(path, v));
                else if (key == "out") cfg.out = v;
            } else if (section == "loss") {
                if (key == "db") cfg.loss_db = to_double(path, v);
                else if (key == "start") cfg.loss_grid.start = to_double(path, v);
                else if (key == "stop") cfg.loss_grid.stop = to_double(path, v);
                else if (key == "step") cfg.loss_grid.step = to_double(path, v);
            } else if (section == "point") {
                if (key == "modulation_variance") cfg.modulation_variance = to_double(path, v);
                else if (key == "cutoff") cfg.cutoff = to_double(path, v);
                else if (key == "ratio") cfg.ratio = to_double(path, v);
            } else if (section == "search") {
                auto& s = cfg.search;
                if (key == "va_min") s.va_min = to_double(path, v);
                else if (key == "va_max") s.va_max = to_double(path, v);
                else if (key == "va_points") s.va_points = to_int(path, v);
                else if (key == "cutoff_min") s.cutoff_min = to_double(path, v);
                else if (key == "cutoff_max") s.cutoff_max = to_double(path, v);
                else if (key == "cutoff_points") s.cutoff_points = to_int(path, v);
                else if (key == "ratio_min") s.ratio_min = to_double(path, v);
                else if (key == "ratio_max") s.ratio_max = to_double(path, v);
                else if (key == "ratio_points") s.ratio_points = to_int(path, v);
                else if (key == "max_refine_evaluations") s.max_refine_evaluations = to_int(path, v);
                else if (key == "simplex_tol") s.simplex_tol = to_double(path, v);
            } else if (section == "tolerance") {
                if (key == "moments") cfg.tol.moments = to_double(path, v);
                else if (key == "mi") cfg.tol.mi = to_double(path, v);
            } else if (section == "baseline") {
                if (key == "trusted_noise") cfg.trusted_noise = to_double(path, v);
                else if (key == "only") cfg.baseline_only = to_bool(path, v);
            } else if (section == "mc") {
                if (key == "samples") cfg.mc.samples = to_uint(path, v);
                else if (key == "seed") cfg.mc.seed = to_uint(path, v);
                else if (key == "sigmas") cfg.mc.sigmas = to_double(path, v);
            }
        }
    }
}

}  // namespace

const char* to_string(Mode mode) {
    switch (mode) {
        case Mode::Single: return "single";
        case Mode::Sweep: return "sweep";
        case Mode::Optimize: return "optimize";
        case Mode::McValidate: return "mc-validate";
    }
    return "?";
}

Mode parse_mode(const std::string& t) {
    if (t == "single") return Mode::Single;
    if (t == "sweep") return Mode::Sweep;
    if (t == "optimize") return Mode::Optimize;
    if (t == "mc-validate") return Mode::McValidate;
    config_error("run.mode", "expected single, sweep, optimize or mc-validate, got '" + t + "'");
}

Reconciliation parse_direction(const std::string& t) {
    if (t == "DR" || t == "dr" || t == "direct") return Reconciliation::Direct;
    if (t == "RR" || t == "rr" || t == "reverse") return Reconciliation::Reverse;
    config_error("run.direction", "expected DR or RR, got '" + t + "'");
}

EveReference parse_eve_reference(const std::string& t) {
    if (t == "nla") return EveReference::NlaState;
    if (t == "post-selected") return EveReference::PostSelectedState;
    config_error("run.eve_reference", "expected nla or post-selected, got '" + t + "'");
}

std::vector<double> LossGrid::points() const {
    std::vector<double> v;
    if (!(step > 0.0)) return {start};
    const double n = std::floor((stop - start) / step + 1e-9);
    for (int i = 0; i <= static_cast<int>(n); ++i) v.push_back(start + i * step);
    return v;
}

LossGrid LossGrid::parse(const std::string& text) {
    const auto a = text.find(':');
    const auto b = a == std::string::npos ? std::string::npos : text.find(':', a + 1);
    if (b == std::string::npos) config_error("loss-grid", "expected start:stop:step, got '" + text + "'");
    return {to_double("loss-grid.start", text.substr(0, a)), to_double("loss-grid.stop", text.substr(a + 1, b - a - 1)),
            to_double("loss-grid.step", text.substr(b + 1))};
}

void RunConfig::validate() const {
    if (!mode) config_error("run.mode", "a mode must be given");
    if (!(beta > 0.0 && beta <= 1.0)) config_error("run.beta", "beta out of (0,1]");
    if (!(xi >= 0.0)) config_error("run.xi", "excess noise must be >= 0");
    if (!(trusted_noise >= 0.0)) config_error("baseline.trusted_noise", "must be >= 0");
    if (*mode == Mode::Sweep) {
        if (!(loss_grid.step > 0.0)) config_error("loss.step", "must be > 0");
        if (!(loss_grid.start >= 0.0)) config_error("loss.start", "must be >= 0");
        if (!(loss_grid.stop >= loss_grid.start)) config_error("loss.stop", "must be >= loss.start");
        if (loss_grid.points().size() > 100'000) config_error("loss.step", "grid has too many points");
    } else if (!(loss_db >= 0.0)) {
        config_error("loss.db", "must be >= 0");
    }
    if (*mode == Mode::Single) {
        if (!(modulation_variance > 0.0)) config_error("point.modulation_variance", "must be > 0");
        if (!(cutoff >= 0.0)) config_error("point.cutoff", "must be >= 0");
        if (!(ratio > 1.0)) config_error("point.ratio", "must be > 1");
    }
    try {
        search.validate();
    } catch (const Error& e) {
        config_error("search", e.detail());
    }
    if (!(tol.moments > 0.0 && tol.moments < 1.0)) config_error("tolerance.moments", "must lie in (0,1)");
    if (!(tol.mi > 0.0 && tol.mi < 1.0)) config_error("tolerance.mi", "must lie in (0,1)");
    if (mc.samples < 10'000) config_error("mc.samples", "need at least 10000 samples for a statistical test");
    if (!(mc.sigmas > 0.0)) config_error("mc.sigmas", "must be > 0");
    if (!out.empty()) {
        const auto parent = std::filesystem::path(out).parent_path();
        if (!parent.empty() && !std::filesystem::is_directory(parent)) {
            throw Error(ErrorKind::IoError, "output directory does not exist: " + parent.string());
        }
    }
}

unsigned RunConfig::effective_jobs() const {
    if (jobs > 0) return jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

void load_config_string(const std::string& text, RunConfig& cfg) {
    std::istringstream in(text);
    ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorKind::ConfigError, "line " + std::to_string(e.line()) + ": " + e.message());
    }
    apply_tree(tree, cfg);
}

void load_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, path + ": cannot open config file");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        load_config_string(buf.str(), cfg);
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, path + ": " + e.detail());
    }
}

std::string echo_config(const RunConfig& c) {
    std::ostringstream o;
    o << "[run]\n";
    if (c.mode) o << "mode = " << to_string(*c.mode) << "\n";
    o << "direction = " << to_string(c.direction) << "\n"
      << "beta = " << num(c.beta) << "\n"
      << "xi = " << num(c.xi) << "\n"
      << "eve_reference = " << to_string(c.eve_reference) << "\n"
      << "jobs = " << c.jobs << "\n";
    if (!c.out.empty()) o << "out = " << c.out << "\n";
    o << "\n[loss]\n"
      << "db = " << num(c.loss_db) << "\n"
      << "start = " << num(c.loss_grid.start) << "\n"
      << "stop = " << num(c.loss_grid.stop) << "\n"
      << "step = " << num(c.loss_grid.step) << "\n";
    o << "\n[point]\n"
      << "modulation_variance = " << num(c.modulation_variance) << "\n"
      << "cutoff = " << num(c.cutoff) << "\n"
      << "ratio = " << num(c.ratio) << "\n";
    const auto& s = c.search;
    o << "\n[search]\n"
      << "va_min = " << num(s.va_min) << "\n"
      << "va_max = " << num(s.va_max) << "\n"
      << "va_points = " << s.va_points << "\n"
      << "cutoff_min = " << num(s.cutoff_min) << "\n"
      << "cutoff_max = " << num(s.cutoff_max) << "\n"
      << "cutoff_points = " << s.cutoff_points << "\n"
      << "ratio_min = " << num(s.ratio_min) << "\n"
      << "ratio_max = " << num(s.ratio_max) << "\n"
      << "ratio_points = " << s.ratio_points << "\n"
      << "max_refine_evaluations = " << s.max_refine_evaluations << "\n"
      << "simplex_tol = " << num(s.simplex_tol) << "\n";
    o << "\n[tolerance]\n"
      << "moments = " << num(c.tol.moments) << "\n"
      << "mi = " << num(c.tol.mi) << "\n";
    o << "\n[baseline]\n"
      << "trusted_noise = " << num(c.trusted_noise) << "\n"
      << "only = " << (c.baseline_only ? "true" : "false") << "\n";
    o << "\n[mc]\n"
      << "samples = " << c.mc.samples << "\n"
      << "seed = " << c.mc.seed << "\n"
      << "sigmas = " << num(c.mc.sigmas) << "\n";
    return o.str();
}

}  // namespace cvqkd
