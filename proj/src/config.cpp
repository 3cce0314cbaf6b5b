#include "iongate/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace iongate {

using nlohmann::json;

namespace {

void expect_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw config_error("unknown field '" + key + "'", path + "/" + key);
    }
}

double get_num(const json& obj, const std::string& path, const std::string& key, double fallback,
               bool required = false) {
    if (!obj.contains(key)) {
        if (required) throw config_error("missing required field", path + "/" + key);
        return fallback;
    }
    if (!obj[key].is_number())
        throw config_error("expected a number", path + "/" + key);
    const double v = obj[key].get<double>();
    if (!std::isfinite(v)) throw config_error("value must be finite", path + "/" + key);
    return v;
}

std::vector<double> get_num_list(const json& j, const std::string& path) {
    std::vector<double> out;
    if (j.is_number()) {
        out.push_back(j.get<double>());
        return out;
    }
    if (!j.is_array()) throw config_error("expected a number or array", path);
    for (const auto& v : j) {
        if (!v.is_number()) throw config_error("expected numeric entries", path);
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace

const std::vector<std::string>& sweepable_fields() {
    static const std::vector<std::string> fields = {
        "system.coupling", "gate.delta",     "gate.phi_t",          "noise.gamma",
        "errors.eps_nu",   "errors.eps_omega", "initial.fock_n",    "initial.thermal_nbar"};
    return fields;
}

void ExperimentConfig::apply_axis(const std::string& field, double value) {
    if (field == "system.coupling") {
        coupling = value;
    } else if (field == "gate.delta") {
        delta = value;
    } else if (field == "gate.phi_t") {
        phi_t = value;
    } else if (field == "noise.gamma") {
        gamma = value;
        gamma_minus.reset();
        gamma_plus.reset();
        gamma_dephase.reset();
    } else if (field == "errors.eps_nu") {
        eps_nu_uniform = value;
        eps_nu_list.clear();
    } else if (field == "errors.eps_omega") {
        eps_omega = value;
    } else if (field == "initial.fock_n") {
        if (value < 0 || value != std::floor(value))
            throw std::invalid_argument("initial.fock_n sweep values must be integers >= 0");
        thermal = false;
        fock_is_uniform = true;
        fock_uniform = static_cast<int>(value);
        fock_n.clear();
    } else if (field == "initial.thermal_nbar") {
        thermal = true;
        thermal_nbar = value;
    } else {
        throw std::invalid_argument("unknown sweep field: " + field);
    }
}

SystemSpec ExperimentConfig::make_system() const {
    if (explicit_eta) {
        RealVector ratios;
        if (explicit_ratios) {
            ratios = *explicit_ratios;
        } else {
            ratios = normal_modes(n_ions).ratios;
        }
        return SystemSpec::from_eta(ratios, *explicit_eta, coupling);
    }
    return SystemSpec::linear_chain(n_ions, coupling);
}

NoiseSpec ExperimentConfig::make_noise(int n_modes) const {
    NoiseSpec ns = NoiseSpec::uniform(gamma, n_modes);
    const auto fill = [n_modes](const std::optional<std::vector<double>>& src,
                                std::vector<double>& dst) {
        if (!src) return;
        if (src->size() == 1) {
            dst.assign(static_cast<size_t>(n_modes), (*src)[0]);
        } else if (src->size() == static_cast<size_t>(n_modes)) {
            dst = *src;
        } else {
            throw std::invalid_argument("noise rate list length must be 1 or n_modes");
        }
    };
    fill(gamma_minus, ns.gamma_minus);
    fill(gamma_plus, ns.gamma_plus);
    fill(gamma_dephase, ns.gamma_dephase);
    ns.validate(n_modes);
    return ns;
}

ErrorShift ExperimentConfig::make_shifts(int n_modes) const {
    ErrorShift sh = ErrorShift::none(n_modes);
    if (!eps_nu_list.empty()) {
        if (eps_nu_list.size() == 1) {
            sh.eps_nu.assign(static_cast<size_t>(n_modes), eps_nu_list[0]);
        } else if (eps_nu_list.size() == static_cast<size_t>(n_modes)) {
            sh.eps_nu = eps_nu_list;
        } else {
            throw std::invalid_argument("errors.eps_nu list length must be 1 or n_modes");
        }
    } else {
        sh.eps_nu.assign(static_cast<size_t>(n_modes), eps_nu_uniform);
    }
    sh.eps_omega = eps_omega;
    return sh;
}

std::vector<int> ExperimentConfig::initial_fock(int n_modes) const {
    if (!fock_is_uniform) {
        if (fock_n.size() != static_cast<size_t>(n_modes))
            throw std::invalid_argument("initial.fock list length must equal n_modes");
        return fock_n;
    }
    return std::vector<int>(static_cast<size_t>(n_modes), fock_uniform);
}

PropagationOptions ExperimentConfig::propagation() const {
    PropagationOptions opts;
    opts.steps = steps;
    opts.integrator = integrator;
    opts.leakage_tol = leakage_tol;
    return opts;
}

ExperimentConfig load_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("JSON parse error: ") + e.what(), "");
    }
    expect_keys(root, "", {"schema_version", "description", "system", "gate", "noise", "errors",
                           "initial", "sweep", "numerics", "output"});
    ExperimentConfig cfg;
    if (!root.contains("schema_version") || !root["schema_version"].is_number_integer())
        throw config_error("missing integer schema_version", "/schema_version");
    cfg.schema_version = root["schema_version"].get<int>();
    if (cfg.schema_version != 1)
        throw config_error("unsupported schema_version", "/schema_version");
    if (root.contains("description")) cfg.description = root["description"].get<std::string>();

    // system
    if (!root.contains("system")) throw config_error("missing block", "/system");
    {
        const json& sys = root["system"];
        expect_keys(sys, "/system", {"n_ions", "coupling", "eta", "mode_ratios"});
        cfg.n_ions = static_cast<int>(get_num(sys, "/system", "n_ions", 2, true));
        if (cfg.n_ions < 1 || cfg.n_ions > 8)
            throw config_error("n_ions must be in 1..8", "/system/n_ions");
        cfg.coupling = get_num(sys, "/system", "coupling", 0.05, true);
        if (cfg.coupling <= 0 || cfg.coupling > 1)
            throw config_error("coupling must be in (0, 1]", "/system/coupling");
        if (sys.contains("eta")) {
            const json& eta = sys["eta"];
            if (!eta.is_array() || eta.empty() || !eta[0].is_array())
                throw config_error("eta must be a matrix (array of rows)", "/system/eta");
            const size_t rows = eta.size();
            const size_t cols = eta[0].size();
            RealMatrix m(rows, cols);
            for (size_t i = 0; i < rows; ++i) {
                if (eta[i].size() != cols)
                    throw config_error("ragged eta matrix", "/system/eta");
                for (size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i),
                                                    static_cast<Eigen::Index>(j)) =
                    eta[i][j].get<double>();
            }
            cfg.explicit_eta = m;
        }
        if (sys.contains("mode_ratios")) {
            const auto v = get_num_list(sys["mode_ratios"], "/system/mode_ratios");
            RealVector r(static_cast<Eigen::Index>(v.size()));
            for (size_t i = 0; i < v.size(); ++i) r(static_cast<Eigen::Index>(i)) = v[i];
            cfg.explicit_ratios = r;
        }
    }

    // gate
    if (!root.contains("gate")) throw config_error("missing block", "/gate");
    {
        const json& gate = root["gate"];
        expect_keys(gate, "/gate",
                    {"variant", "phi_t", "delta", "central_mode", "pair", "amplitude_cap",
                     "custom_program"});
        cfg.variants.clear();
        if (!gate.contains("variant")) throw config_error("missing field", "/gate/variant");
        if (gate["variant"].is_string()) {
            cfg.variants.push_back(variant_from_name(gate["variant"].get<std::string>()));
        } else if (gate["variant"].is_array()) {
            for (const auto& v : gate["variant"])
                cfg.variants.push_back(variant_from_name(v.get<std::string>()));
            if (cfg.variants.empty() || cfg.variants.size() > 2)
                throw config_error("variant list must hold 1 or 2 entries", "/gate/variant");
        } else {
            throw config_error("variant must be a string or list", "/gate/variant");
        }
        cfg.phi_t = get_num(gate, "/gate", "phi_t", kPi / 8);
        if (!(cfg.phi_t > 0.0) || cfg.phi_t > kPi / 2)
            throw config_error("phi_t must lie in (0, pi/2]", "/gate/phi_t");
        cfg.delta = get_num(gate, "/gate", "delta", 0.02);
        if (cfg.delta <= 0 || cfg.delta >= 0.5)
            throw config_error("delta must lie in (0, 0.5)", "/gate/delta");
        cfg.central_mode = static_cast<int>(get_num(gate, "/gate", "central_mode", 1)) - 1;
        if (cfg.central_mode < 0 || cfg.central_mode >= cfg.n_ions)
            throw config_error("central_mode out of range", "/gate/central_mode");
        if (gate.contains("pair")) {
            if (gate["pair"].is_string()) {
                if (gate["pair"].get<std::string>() != "all_pairs")
                    throw config_error("pair must be [i, j] or \"all_pairs\"", "/gate/pair");
                cfg.all_pairs = true;
            } else {
                if (!gate["pair"].is_array() || gate["pair"].size() != 2)
                    throw config_error("pair must be [i, j] or \"all_pairs\"", "/gate/pair");
                cfg.pair = {gate["pair"][0].get<int>() - 1, gate["pair"][1].get<int>() - 1};
                if (cfg.pair.first == cfg.pair.second || cfg.pair.first < 0 ||
                    cfg.pair.second < 0 || cfg.pair.first >= cfg.n_ions ||
                    cfg.pair.second >= cfg.n_ions)
                    throw config_error("pair indices must be distinct ions in 1..n_ions",
                                       "/gate/pair");
            }
        }
        if (gate.contains("amplitude_cap"))
            cfg.amplitude_cap = get_num(gate, "/gate", "amplitude_cap", 0.0);
        if (gate.contains("custom_program"))
            cfg.custom_program = program_from_json(gate["custom_program"].dump());
    }

    // noise
    if (root.contains("noise")) {
        const json& noise = root["noise"];
        expect_keys(noise, "/noise", {"gamma", "gamma_minus", "gamma_plus", "gamma_dephase"});
        cfg.gamma = get_num(noise, "/noise", "gamma", 0.0);
        if (cfg.gamma < 0) throw config_error("gamma must be >= 0", "/noise/gamma");
        if (noise.contains("gamma_minus"))
            cfg.gamma_minus = get_num_list(noise["gamma_minus"], "/noise/gamma_minus");
        if (noise.contains("gamma_plus"))
            cfg.gamma_plus = get_num_list(noise["gamma_plus"], "/noise/gamma_plus");
        if (noise.contains("gamma_dephase"))
            cfg.gamma_dephase = get_num_list(noise["gamma_dephase"], "/noise/gamma_dephase");
    }

    // errors
    if (root.contains("errors")) {
        const json& err = root["errors"];
        expect_keys(err, "/errors", {"eps_nu", "eps_omega"});
        if (err.contains("eps_nu")) {
            cfg.eps_nu_list = get_num_list(err["eps_nu"], "/errors/eps_nu");
            if (cfg.eps_nu_list.size() == 1) {
                cfg.eps_nu_uniform = cfg.eps_nu_list[0];
                cfg.eps_nu_list.clear();
            }
        }
        cfg.eps_omega = get_num(err, "/errors", "eps_omega", 0.0);
        for (double e : cfg.eps_nu_list)
            if (std::abs(e) > 0.2) throw config_error("eps_nu too large", "/errors/eps_nu");
        if (std::abs(cfg.eps_nu_uniform) > 0.2)
            throw config_error("eps_nu too large", "/errors/eps_nu");
        if (std::abs(cfg.eps_omega) > 0.2)
            throw config_error("eps_omega too large", "/errors/eps_omega");
    }

    // initial
    if (!root.contains("initial")) throw config_error("missing block", "/initial");
    {
        const json& init = root["initial"];
        expect_keys(init, "/initial",
                    {"fock", "thermal_nbar", "support_tail", "grid_points"});
        const bool has_fock = init.contains("fock");
        const bool has_thermal = init.contains("thermal_nbar");
        if (has_fock == has_thermal)
            throw config_error("exactly one of fock / thermal_nbar required", "/initial");
        if (has_fock) {
            cfg.thermal = false;
            if (init["fock"].is_number_integer()) {
                cfg.fock_is_uniform = true;
                cfg.fock_uniform = init["fock"].get<int>();
                if (cfg.fock_uniform < 0)
                    throw config_error("fock occupation must be >= 0", "/initial/fock");
            } else if (init["fock"].is_array()) {
                cfg.fock_is_uniform = false;
                for (const auto& v : init["fock"]) {
                    const int n = v.get<int>();
                    if (n < 0) throw config_error("fock occupation must be >= 0", "/initial/fock");
                    cfg.fock_n.push_back(n);
                }
            } else {
                throw config_error("fock must be an integer or list", "/initial/fock");
            }
        } else {
            cfg.thermal = true;
            cfg.thermal_nbar = get_num(init, "/initial", "thermal_nbar", 0.0, true);
            if (cfg.thermal_nbar < 0)
                throw config_error("thermal_nbar must be >= 0", "/initial/thermal_nbar");
            cfg.thermal_support_tail = get_num(init, "/initial", "support_tail", 1e-6);
            if (cfg.thermal_support_tail <= 0 || cfg.thermal_support_tail > 0.1)
                throw config_error("support_tail must lie in (0, 0.1]", "/initial/support_tail");
            cfg.thermal_grid_points =
                static_cast<int>(get_num(init, "/initial", "grid_points", 0));
            if (cfg.thermal_grid_points < 0 ||
                (cfg.thermal_grid_points != 0 && cfg.thermal_grid_points < 2))
                throw config_error("grid_points must be 0 (auto) or >= 2",
                                   "/initial/grid_points");
        }
    }

    // sweep
    if (root.contains("sweep")) {
        const json& sweep = root["sweep"];
        expect_keys(sweep, "/sweep", {"axes"});
        if (sweep.contains("axes")) {
            if (!sweep["axes"].is_array()) throw config_error("axes must be a list", "/sweep/axes");
            for (size_t i = 0; i < sweep["axes"].size(); ++i) {
                const json& ax = sweep["axes"][i];
                const std::string path = "/sweep/axes/" + std::to_string(i);
                expect_keys(ax, path, {"field", "values"});
                SweepAxis axis;
                if (!ax.contains("field") || !ax["field"].is_string())
                    throw config_error("axis needs a string field", path + "/field");
                axis.field = ax["field"].get<std::string>();
                const auto& known = sweepable_fields();
                if (std::find(known.begin(), known.end(), axis.field) == known.end())
                    throw config_error("not a sweepable field: " + axis.field, path + "/field");
                if (!ax.contains("values") || !ax["values"].is_array() || ax["values"].empty())
                    throw config_error("axis needs a nonempty values list", path + "/values");
                for (const auto& v : ax["values"]) {
                    if (!v.is_number()) throw config_error("numeric values required",
                                                           path + "/values");
                    axis.values.push_back(v.get<double>());
                }
                cfg.axes.push_back(std::move(axis));
            }
        }
    }

    // numerics
    if (root.contains("numerics")) {
        const json& num = root["numerics"];
        expect_keys(num, "/numerics",
                    {"steps", "integrator", "cutoff_margin", "level", "dissipation",
                     "leakage_tol"});
        cfg.steps = static_cast<int>(get_num(num, "/numerics", "steps", 1500));
        if (cfg.steps < 1 || cfg.steps > 2000000)
            throw config_error("steps out of range", "/numerics/steps");
        if (num.contains("integrator")) {
            const std::string s = num["integrator"].get<std::string>();
            if (s == "midpoint")
                cfg.integrator = Integrator::ExponentialMidpoint;
            else if (s == "cf4")
                cfg.integrator = Integrator::CommutatorFree4;
            else
                throw config_error("integrator must be midpoint or cf4", "/numerics/integrator");
        }
        cfg.cutoff_margin = static_cast<int>(get_num(num, "/numerics", "cutoff_margin", 15));
        if (cfg.cutoff_margin < 2) throw config_error("cutoff_margin too small",
                                                      "/numerics/cutoff_margin");
        if (num.contains("level")) cfg.level = level_from_name(num["level"].get<std::string>());
        if (num.contains("dissipation")) {
            const std::string s = num["dissipation"].get<std::string>();
            if (s == "full")
                cfg.perturbative_dissipation = false;
            else if (s == "perturbative")
                cfg.perturbative_dissipation = true;
            else
                throw config_error("dissipation must be full or perturbative",
                                   "/numerics/dissipation");
        }
        cfg.leakage_tol = get_num(num, "/numerics", "leakage_tol", 1e-8);
    }

    // output
    if (root.contains("output")) {
        const json& out = root["output"];
        expect_keys(out, "/output", {"directory", "basename", "formats"});
        if (out.contains("directory")) cfg.out_directory = out["directory"].get<std::string>();
        if (out.contains("basename")) cfg.out_basename = out["basename"].get<std::string>();
        if (out.contains("formats")) {
            cfg.formats.clear();
            for (const auto& f : out["formats"]) {
                const std::string s = f.get<std::string>();
                if (s != "csv" && s != "jsonl" && s != "plotdata")
                    throw config_error("format must be csv, jsonl or plotdata",
                                       "/output/formats");
                cfg.formats.push_back(s);
            }
        }
    }

    // cross checks
    if (cfg.central_mode >= cfg.n_ions)
        throw config_error("central_mode exceeds the mode count", "/gate/central_mode");
    if (!cfg.fock_is_uniform && !cfg.fock_n.empty() &&
        cfg.fock_n.size() != static_cast<size_t>(cfg.n_ions))
        throw config_error("fock list length must equal the mode count", "/initial/fock");
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path, "");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config(ss.str());
}

std::string program_to_json(const DriveProgram& program) {
    json j;
    j["gate_time"] = program.gate_time;
    j["detuning"] = program.detuning;
    j["central_mode"] = program.central_mode + 1;
    j["phase_convention"] = program.phase_convention;
    j["entries"] = json::array();
    for (const auto& [key, tones] : program.entries) {
        const auto& [slot, mode, order] = key;
        json e;
        e["ion"] = slot + 1;
        e["mode"] = mode + 1;
        e["order"] = order;
        e["tones"] = json::array();
        for (const Tone& t : tones)
            e["tones"].push_back({{"re", t.amplitude.real()},
                                  {"im", t.amplitude.imag()},
                                  {"freq", t.frequency}});
        j["entries"].push_back(std::move(e));
    }
    return j.dump(2);
}

DriveProgram program_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("program JSON parse error: ") + e.what(), "");
    }
    expect_keys(j, "/custom_program",
                {"gate_time", "detuning", "central_mode", "phase_convention", "entries"});
    DriveProgram p;
    p.gate_time = j.at("gate_time").get<double>();
    if (p.gate_time <= 0) throw config_error("gate_time must be > 0", "/custom_program/gate_time");
    p.detuning = j.value("detuning", 0.0);
    p.central_mode = j.value("central_mode", 1) - 1;
    if (j.contains("phase_convention"))
        p.phase_convention = j["phase_convention"].get<std::string>();
    for (const auto& e : j.at("entries")) {
        const int slot = e.at("ion").get<int>() - 1;
        const int mode = e.at("mode").get<int>() - 1;
        const int order = e.at("order").get<int>();
        if (slot < 0 || slot > 1)
            throw config_error("program ion must be 1 or 2", "/custom_program/entries");
        if (order < 1) throw config_error("stored sideband orders must be >= 1",
                                          "/custom_program/entries");
        std::vector<Tone> tones;
        for (const auto& t : e.at("tones"))
            tones.push_back({cplx(t.at("re").get<double>(), t.value("im", 0.0)),
                             t.at("freq").get<double>()});
        p.entries[{slot, mode, order}] = std::move(tones);
    }
    return p;
}

std::string derived_report(const ExperimentConfig& cfg) {
    std::ostringstream os;
    const SystemSpec sys = cfg.make_system();
    os << "system: " << cfg.n_ions << " ions, " << sys.n_modes()
       << " axial modes, coupling " << cfg.coupling << "\n";
    os << "mode ratios:";
    for (int l = 0; l < sys.n_modes(); ++l) os << " " << sys.mode_ratios(l);
    os << "\n";
    GateTarget tgt;
    tgt.pair = cfg.all_pairs ? std::pair<int, int>{0, 1} : cfg.pair;
    tgt.phi = cfg.phi_t;
    os << "gate time T = " << 2.0 * kPi / cfg.delta << " (delta = " << cfg.delta << ")\n";
    for (GateVariant v : cfg.variants) {
        tgt.variant = v;
        const DriveProgram prog = synthesize(sys, tgt, cfg.delta, cfg.central_mode);
        const RealMatrix eta2 = pair_eta(sys, tgt);
        double omega = 0.0;
        for (const auto& [key, tones] : prog.entries) {
            (void)key;
            for (const Tone& t : tones) omega = std::max(omega, std::abs(t.amplitude));
        }
        os << "variant " << variant_name(v) << ": max tone amplitude " << omega
           << ", peak physical rate " << prog.peak_rate(0, eta2) << "\n";
    }
    const int n_modes = sys.n_modes();
    std::vector<int> fock = cfg.thermal
                                ? std::vector<int>(static_cast<size_t>(n_modes),
                                                   static_cast<int>(std::ceil(cfg.thermal_nbar)))
                                : cfg.initial_fock(n_modes);
    long mot = 1;
    os << "cutoffs:";
    for (int l = 0; l < n_modes; ++l) {
        const int c = default_cutoff(fock[static_cast<size_t>(l)], cfg.coupling,
                                     cfg.cutoff_margin);
        os << " " << c;
        mot *= c + 1;
    }
    os << "\nstate dimension: 4 x " << mot << " = " << 4 * mot << "\n";
    os << "estimated state memory: "
       << static_cast<double>(mot) * 16.0 * 4.0 / (1024.0 * 1024.0) << " MiB (vector set)\n";
    long points = 1;
    for (const auto& ax : cfg.axes) points *= static_cast<long>(ax.values.size());
    os << "sweep points: " << points << "\n";
    return os.str();
}

} // namespace iongate
