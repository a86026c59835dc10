#include "phonon/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace phonon {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

// Walks one JSON object, remembering which keys were consumed so that
// anything left over can be reported by name.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError("config key '" + where() + "' must be an object");
    }

    // Marks the key as known; an explicit null counts as absent.
    bool has(const std::string& key) {
        used_.insert(key);
        return obj_.contains(key) && !obj_.at(key).is_null();
    }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return obj_.at(key);
    }

    double number(const std::string& key, double fallback) {
        used_.insert(key);
        if (!obj_.contains(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_number()) throw ConfigError("config key '" + join(path_, key) + "' must be a number");
        return v.get<double>();
    }

    std::optional<double> optional_number(const std::string& key, std::optional<double> fallback) {
        used_.insert(key);
        if (!obj_.contains(key)) return fallback;
        if (obj_.at(key).is_null()) return std::nullopt;
        return number(key, 0.0);
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        used_.insert(key);
        if (!obj_.contains(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_number_integer()) throw ConfigError("config key '" + join(path_, key) + "' must be an integer");
        return v.get<std::int64_t>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        used_.insert(key);
        if (!obj_.contains(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_string()) throw ConfigError("config key '" + join(path_, key) + "' must be a string");
        return v.get<std::string>();
    }

    Complex complex(const std::string& key, Complex fallback) {
        used_.insert(key);
        if (!obj_.contains(key)) return fallback;
        const json& v = obj_.at(key);
        if (v.is_number()) return v.get<double>();
        if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
            return {v[0].get<double>(), v[1].get<double>()};
        }
        throw ConfigError("config key '" + join(path_, key) + "' must be a number or [re, im]");
    }

    ObjectReader child(const std::string& key) {
        used_.insert(key);
        return ObjectReader(obj_.at(key), join(path_, key));
    }

    std::string where(const std::string& key = {}) const { return key.empty() ? (path_.empty() ? "<root>" : path_) : join(path_, key); }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (!used_.contains(key)) throw ConfigError("unknown config key '" + join(path_, key) + "'");
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> used_;
};

Table1Row row_from_string(const std::string& s, const std::string& where) {
    if (s == "FOCK") return Table1Row::Fock;
    if (s == "COHERENT") return Table1Row::Coherent;
    if (s == "UPSILON") return Table1Row::Upsilon;
    throw ConfigError("config key '" + where + "' must be FOCK, COHERENT or UPSILON, got '" + s + "'");
}

Level level_from_name(const std::string& s, const std::string& where) {
    for (Level l : {Level::Down, Level::Up, Level::Aux}) {
        if (s == to_string(l)) return l;
    }
    throw ConfigError("config key '" + where + "' has unknown level '" + s + "' (down, up, aux)");
}

ordered_json params_to_json(const SimParams& p) {
    return {{"g1", p.g1},           {"g2", p.g2},           {"phi", p.phi},
            {"gamma_m", p.gamma_m}, {"gamma_e", p.gamma_e}, {"n_th", p.n_th},
            {"contrast", p.contrast}, {"offset", p.offset}};
}

// "row" selects a Table I row as the base and "g" sets both couplings;
// individual keys override either.
SimParams params_from_json(ObjectReader r, SimParams p) {
    if (r.has("row")) p = table1_defaults(row_from_string(r.string("row", ""), r.where("row")));
    if (r.has("g")) p.g1 = p.g2 = r.number("g", 0.0);
    p.g1 = r.number("g1", p.g1);
    p.g2 = r.number("g2", p.g2);
    p.phi = r.number("phi", p.phi);
    p.gamma_m = r.number("gamma_m", p.gamma_m);
    p.gamma_e = r.number("gamma_e", p.gamma_e);
    p.n_th = r.number("n_th", p.n_th);
    p.contrast = r.number("contrast", p.contrast);
    p.offset = r.number("offset", p.offset);
    r.finish();
    return p;
}

ordered_json complex_to_json(Complex c) {
    return ordered_json::array({c.real(), c.imag()});
}

} // namespace

ordered_json sequence_to_json(const SequenceSpec& spec) {
    ordered_json steps = ordered_json::array();
    for (const auto& step : spec.steps) {
        if (const auto* pulse = std::get_if<PulseSpec>(&step)) {
            ordered_json j{{"kind", to_string(pulse->kind)}};
            if (pulse->area) j["area"] = *pulse->area;
            if (pulse->duration) j["duration"] = *pulse->duration;
            j["phase"] = pulse->phase;
            if (pulse->kind == PulseKind::Tickle) {
                j["alpha1"] = complex_to_json(pulse->alpha1);
                j["alpha2"] = complex_to_json(pulse->alpha2);
            }
            steps.push_back(std::move(j));
        } else {
            ordered_json keep = ordered_json::array();
            for (Level l : std::get<Postselect>(step).keep) keep.push_back(to_string(l));
            steps.push_back({{"postselect", keep}});
        }
    }
    ordered_json out;
    out["thermal_n_th"] = spec.thermal_n_th ? ordered_json(*spec.thermal_n_th) : ordered_json(nullptr);
    out["steps"] = std::move(steps);
    return out;
}

SequenceSpec sequence_from_json(const json& doc, const std::string& where) {
    ObjectReader r(doc, where);
    SequenceSpec spec;
    spec.thermal_n_th = r.optional_number("thermal_n_th", std::nullopt);
    if (!r.has("steps")) throw ConfigError("config key '" + r.where("steps") + "' is required");
    const json& steps = r.raw("steps");
    if (!steps.is_array()) throw ConfigError("config key '" + r.where("steps") + "' must be an array");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        ObjectReader s(steps[i], r.where("steps") + "[" + std::to_string(i) + "]");
        if (s.has("postselect")) {
            const json& keep = s.raw("postselect");
            if (!keep.is_array() || keep.empty()) {
                throw ConfigError("config key '" + s.where("postselect") + "' must be a non-empty array of levels");
            }
            Postselect ps;
            for (const auto& l : keep) {
                if (!l.is_string()) throw ConfigError("config key '" + s.where("postselect") + "' must hold level names");
                ps.keep.insert(level_from_name(l.get<std::string>(), s.where("postselect")));
            }
            s.finish();
            spec.steps.emplace_back(std::move(ps));
            continue;
        }
        PulseSpec p;
        const std::string kind = s.string("kind", "");
        try {
            p.kind = pulse_kind_from_string(kind);
        } catch (const std::exception& e) {
            throw ConfigError("config key '" + s.where("kind") + "': " + e.what());
        }
        p.area = s.optional_number("area", std::nullopt);
        p.duration = s.optional_number("duration", std::nullopt);
        p.phase = s.number("phase", 0.0);
        p.alpha1 = s.complex("alpha1", 0.0);
        p.alpha2 = s.complex("alpha2", 0.0);
        s.finish();
        try {
            p.validate();
        } catch (const std::exception& e) {
            throw ConfigError(s.where() + ": " + e.what());
        }
        spec.steps.emplace_back(std::move(p));
    }
    r.finish();
    return spec;
}

ordered_json config_to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["experiment"] = catalogue_entry(c.kind).name;
    j["params"] = params_to_json(c.params);
    j["coherent_params"] = params_to_json(c.coherent_params);
    j["space"] = {{"n_max_1", c.n_max_1}, {"n_max_2", c.n_max_2}};
    j["scan"] = {{"axis", c.scan.axis == ScanAxis::Time ? "time" : "phase"},
                 {"start", c.scan.start},
                 {"stop", c.scan.stop},
                 {"points", c.scan.points}};
    j["fixed_duration"] = c.fixed_duration ? ordered_json(*c.fixed_duration) : ordered_json(nullptr);
    j["alpha"] = c.alpha;
    j["phi0"] = c.phi0;
    j["seed"] = c.seed;
    j["tomography"] = {{"shots", c.shots},
                       {"nmax", c.tomo_nmax},
                       {"omega0", c.tomo_model.omega0},
                       {"eta", c.tomo_model.eta},
                       {"decay", c.tomo_model.decay},
                       {"decay_exponent", c.tomo_model.decay_exponent}};
    j["preparation"] = c.preparation ? sequence_to_json(*c.preparation) : ordered_json(nullptr);
    return j;
}

ExperimentConfig config_from_json(const json& doc) {
    ObjectReader r(doc, "");
    if (!r.has("schema_version")) throw ConfigError("config key 'schema_version' is required");
    const auto version = r.integer("schema_version", 0);
    if (version != kConfigSchemaVersion) {
        throw ConfigError("config key 'schema_version' is " + std::to_string(version) + ", this build reads " +
                          std::to_string(kConfigSchemaVersion));
    }
    if (!r.has("experiment")) throw ConfigError("config key 'experiment' is required");
    ExperimentKind kind;
    try {
        kind = experiment_from_string(r.string("experiment", ""));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config key 'experiment': ") + e.what());
    }
    ExperimentConfig c = default_config(kind);
    if (r.has("params")) c.params = params_from_json(r.child("params"), c.params);
    if (r.has("coherent_params")) c.coherent_params = params_from_json(r.child("coherent_params"), c.coherent_params);
    if (r.has("space")) {
        auto s = r.child("space");
        c.n_max_1 = static_cast<int>(s.integer("n_max_1", c.n_max_1));
        c.n_max_2 = static_cast<int>(s.integer("n_max_2", c.n_max_2));
        s.finish();
    }
    if (r.has("scan")) {
        auto s = r.child("scan");
        const std::string axis = s.string("axis", c.scan.axis == ScanAxis::Time ? "time" : "phase");
        if (axis == "time") {
            c.scan.axis = ScanAxis::Time;
        } else if (axis == "phase") {
            c.scan.axis = ScanAxis::Phase;
        } else {
            throw ConfigError("config key 'scan.axis' must be 'time' or 'phase', got '" + axis + "'");
        }
        c.scan.start = s.number("start", c.scan.start);
        c.scan.stop = s.number("stop", c.scan.stop);
        c.scan.points = static_cast<int>(s.integer("points", c.scan.points));
        s.finish();
    }
    c.fixed_duration = r.optional_number("fixed_duration", c.fixed_duration);
    c.alpha = r.number("alpha", c.alpha);
    c.phi0 = r.number("phi0", c.phi0);
    const auto seed = r.integer("seed", static_cast<std::int64_t>(c.seed));
    if (seed < 0) throw ConfigError("config key 'seed' must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);
    if (r.has("tomography")) {
        auto t = r.child("tomography");
        c.shots = static_cast<int>(t.integer("shots", c.shots));
        c.tomo_nmax = static_cast<int>(t.integer("nmax", c.tomo_nmax));
        c.tomo_model.omega0 = t.number("omega0", c.tomo_model.omega0);
        c.tomo_model.eta = t.number("eta", c.tomo_model.eta);
        c.tomo_model.decay = t.number("decay", c.tomo_model.decay);
        c.tomo_model.decay_exponent = t.number("decay_exponent", c.tomo_model.decay_exponent);
        t.finish();
    }
    if (r.has("preparation")) c.preparation = sequence_from_json(r.raw("preparation"), "preparation");
    r.finish();
    try {
        c.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return c;
}

ExperimentConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(doc);
}

std::string serialize_config(const ExperimentConfig& config) {
    return config_to_json(config).dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : config_to_json(config).dump()) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace phonon
